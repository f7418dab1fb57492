"""The GDPR concept taxonomy: a three-level forest of canonical concept ids.

Concept ids are uppercase dot-paths ("DATA SHARING.CONDITION"). The node set,
sibling order and the 96/19 node counts come from the shipped data file;
every label set, keyword table and classifier in the toolkit is keyed
against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import TaxonomyError

EXPECTED_NODES = 96
EXPECTED_ROOTS = 19
MAX_DEPTH = 3


@dataclass(frozen=True)
class ConceptNode:
    id: str
    name: str
    level: int
    parent: str | None


@dataclass
class Taxonomy:
    """Immutable after construction; safe to share across workers."""

    nodes: dict[str, ConceptNode]
    roots: list[str]
    _children: dict[str, list[str]] = field(repr=False, default_factory=dict)
    _order: dict[str, int] = field(repr=False, default_factory=dict)

    def __contains__(self, concept_id: str) -> bool:
        return concept_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def ordered_ids(self) -> list[str]:
        """All concept ids in file order."""
        return sorted(self.nodes, key=self._order.__getitem__)

    def node(self, concept_id: str) -> ConceptNode:
        try:
            return self.nodes[concept_id]
        except KeyError:
            raise TaxonomyError(f"unknown concept id: {concept_id!r}") from None

    def children_of(self, concept_id: str) -> list[str]:
        """Direct children in file order; empty for leaves."""
        self.node(concept_id)
        return list(self._children.get(concept_id, []))

    def ancestors_of(self, concept_id: str) -> list[str]:
        """Strict ancestors, nearest first; empty for level-1 nodes."""
        node = self.node(concept_id)
        out = []
        while node.parent is not None:
            out.append(node.parent)
            node = self.nodes[node.parent]
        return out

    def descendants_of(self, concept_id: str) -> list[str]:
        """All strict descendants, in file order."""
        self.node(concept_id)
        out = []
        stack = list(reversed(self._children.get(concept_id, [])))
        while stack:
            cid = stack.pop()
            out.append(cid)
            stack.extend(reversed(self._children.get(cid, [])))
        return out

    def validate_label_set(self, labels: Iterable[str]) -> list[str]:
        """Deduplicate and order labels canonically; reject unknown ids."""
        unique = set(labels)
        unknown = sorted(cid for cid in unique if cid not in self.nodes)
        if unknown:
            raise TaxonomyError("unknown labels: " + ", ".join(repr(u) for u in unknown))
        return sorted(unique, key=self._order.__getitem__)

    def file_order(self, concept_id: str) -> int:
        self.node(concept_id)
        return self._order[concept_id]


def build_taxonomy(entries: list[tuple[int, str]]) -> Taxonomy:
    """Assemble a Taxonomy from (level, canonical_id) pairs in file order.

    Checks the structural invariants (unique ids, resolvable parents, level
    consistency, depth cap) but not the shipped-file node counts, so tests
    and corpus extensions can build smaller taxonomies.
    """
    nodes: dict[str, ConceptNode] = {}
    roots: list[str] = []
    children: dict[str, list[str]] = {}
    order: dict[str, int] = {}
    for idx, (level, cid) in enumerate(entries):
        if not cid or cid != cid.strip():
            raise TaxonomyError(f"malformed id {cid!r}")
        parts = cid.split(".")
        if len(parts) != level:
            raise TaxonomyError(f"level {level} inconsistent with id {cid!r}")
        if level < 1 or level > MAX_DEPTH:
            raise TaxonomyError(f"level out of range for {cid!r}")
        if cid in nodes:
            raise TaxonomyError(f"duplicate id {cid!r}")
        parent = ".".join(parts[:-1]) if level > 1 else None
        if parent is not None and parent not in nodes:
            raise TaxonomyError(f"orphan parent: {cid!r} requires {parent!r}")
        nodes[cid] = ConceptNode(id=cid, name=parts[-1], level=level, parent=parent)
        order[cid] = idx
        if parent is None:
            roots.append(cid)
        else:
            children.setdefault(parent, []).append(cid)
    return Taxonomy(nodes=nodes, roots=roots, _children=children, _order=order)


def load_taxonomy(path: str | Path, enforce_counts: bool = True) -> Taxonomy:
    """Load and validate a taxonomy file.

    Format: UTF-8 text, `#count=N` header, then one `LEVEL<TAB>CANONICAL_ID`
    line per node; `#` starts a comment. With enforce_counts (the default)
    the shipped-taxonomy shape (96 nodes, 19 roots) is required.
    """
    path = Path(path)
    declared: int | None = None
    entries: list[tuple[int, str]] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.startswith("#count="):
                try:
                    declared = int(line[len("#count="):])
                except ValueError:
                    raise TaxonomyError(f"{path.name}:{lineno}: bad count header {line!r}") from None
                continue
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise TaxonomyError(f"{path.name}:{lineno}: malformed line {line!r}")
            try:
                level = int(parts[0])
            except ValueError:
                raise TaxonomyError(f"{path.name}:{lineno}: malformed level {parts[0]!r}") from None
            entries.append((level, parts[1]))
    try:
        taxonomy = build_taxonomy(entries)
    except TaxonomyError as exc:
        raise TaxonomyError(f"{path.name}: {exc}") from None
    if declared is not None and declared != len(entries):
        raise TaxonomyError(
            f"{path.name}: node-count mismatch (header declares {declared}, found {len(entries)})"
        )
    if enforce_counts:
        if len(taxonomy) != EXPECTED_NODES:
            raise TaxonomyError(
                f"{path.name}: node-count mismatch (expected {EXPECTED_NODES}, found {len(taxonomy)})"
            )
        if len(taxonomy.roots) != EXPECTED_ROOTS:
            raise TaxonomyError(
                f"{path.name}: root-count mismatch (expected {EXPECTED_ROOTS}, found {len(taxonomy.roots)})"
            )
    return taxonomy


def serialize_taxonomy(taxonomy: Taxonomy) -> str:
    """Render in the taxonomy file format (round-trips through load)."""
    lines = [f"#count={len(taxonomy)}"]
    for cid in taxonomy.ordered_ids:
        lines.append(f"{taxonomy.nodes[cid].level}\t{cid}")
    return "\n".join(lines) + "\n"


def shipped_taxonomy_path() -> Path:
    return Path(resources.files("ppkit").joinpath("data/gdpr_taxonomy.txt"))  # type: ignore[arg-type]


def load_shipped_taxonomy() -> Taxonomy:
    return load_taxonomy(shipped_taxonomy_path())
