"""Hierarchical policy-document model and its XML serialization.

A policy document is a tree: the policy root holds leading paragraphs
and segments; a segment carries a level (1-4), exactly one title, and
any mix of paragraphs and deeper segments; lists hang under paragraphs
or items and may nest. Titles and paragraphs carry stable node ids
("n" + zero-padded document-order index) and optional concept labels.

The XML form uses elements policy/segment/title/paragraph/list/item,
attributes policy@source, segment@level, title|paragraph@id and
title|paragraph@labels (semicolon-joined concept ids). Round-trips are
lossless.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import SchemaError

MAX_SEGMENT_LEVEL = 4
_NODE_ID = re.compile(r"^n\d{4,}$")
SIBLING_SEGMENT_WARNING_LIMIT = 50


@dataclass
class Item:
    text: str = ""
    lists: list["ListBlock"] = field(default_factory=list)


@dataclass
class ListBlock:
    items: list[Item] = field(default_factory=list)


@dataclass
class Paragraph:
    node_id: str
    text: str = ""
    labels: tuple[str, ...] = ()
    lists: list[ListBlock] = field(default_factory=list)


@dataclass
class Title:
    node_id: str
    text: str = ""
    labels: tuple[str, ...] = ()


@dataclass
class Segment:
    level: int
    title: Title
    children: list["Paragraph | Segment"] = field(default_factory=list)


@dataclass
class PolicyDocument:
    source: str = ""
    children: list[Paragraph | Segment] = field(default_factory=list)

    def iter_nodes(self):
        """Yield every Title and Paragraph in document order."""
        def walk(container_children):
            for child in container_children:
                if isinstance(child, Paragraph):
                    yield child
                else:
                    yield child.title
                    yield from walk(child.children)
        yield from walk(self.children)

    def node_ids(self) -> list[str]:
        return [node.node_id for node in self.iter_nodes()]


def format_node_id(index: int) -> str:
    """Document-order index (1-based) to a stable node id."""
    return f"n{index:04d}"


def _labels_attr(labels: tuple[str, ...]) -> str | None:
    return ";".join(labels) if labels else None


def _build_list_element(block: ListBlock) -> ET.Element:
    element = ET.Element("list")
    for item in block.items:
        item_element = ET.SubElement(element, "item")
        item_element.text = item.text
        for nested in item.lists:
            item_element.append(_build_list_element(nested))
    return element


def _build_paragraph_element(paragraph: Paragraph) -> ET.Element:
    element = ET.Element("paragraph", {"id": paragraph.node_id})
    labels = _labels_attr(paragraph.labels)
    if labels is not None:
        element.set("labels", labels)
    element.text = paragraph.text
    for block in paragraph.lists:
        element.append(_build_list_element(block))
    return element


def _build_segment_element(segment: Segment) -> ET.Element:
    element = ET.Element("segment", {"level": str(segment.level)})
    title_element = ET.SubElement(element, "title", {"id": segment.title.node_id})
    labels = _labels_attr(segment.title.labels)
    if labels is not None:
        title_element.set("labels", labels)
    title_element.text = segment.title.text
    for child in segment.children:
        if isinstance(child, Paragraph):
            element.append(_build_paragraph_element(child))
        else:
            element.append(_build_segment_element(child))
    return element


def serialize_ppxml(doc: PolicyDocument) -> bytes:
    root = ET.Element("policy", {"source": doc.source})
    for child in doc.children:
        if isinstance(child, Paragraph):
            root.append(_build_paragraph_element(child))
        else:
            root.append(_build_segment_element(child))
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _clean_text(raw: str | None) -> str:
    return raw.strip() if raw else ""


class _Parser:
    def __init__(self):
        self.seen_ids: set[str] = set()

    def _node_context(self, element: ET.Element) -> str:
        """Human-readable locator for errors: nearest contained node id."""
        for descendant in element.iter():
            node_id = descendant.get("id")
            if node_id:
                return f"at node {node_id}"
        return "(no contained node ids)"

    def _read_id(self, element: ET.Element) -> str:
        node_id = element.get("id")
        if node_id is None:
            raise SchemaError(f"missing id on <{element.tag}>")
        if not _NODE_ID.match(node_id):
            raise SchemaError(f"malformed node id: {node_id}")
        if node_id in self.seen_ids:
            raise SchemaError(f"duplicate node id {node_id}")
        self.seen_ids.add(node_id)
        return node_id

    def _read_labels(self, element: ET.Element) -> tuple[str, ...]:
        raw = element.get("labels")
        if raw is None or raw == "":
            return ()
        return tuple(part.strip() for part in raw.split(";") if part.strip())

    def parse_list(self, element: ET.Element) -> ListBlock:
        block = ListBlock()
        for child in element:
            if child.tag != "item":
                raise SchemaError(
                    f"<list> may contain only <item>, found <{child.tag}>"
                )
            item = Item(text=_clean_text(child.text))
            for grandchild in child:
                if grandchild.tag != "list":
                    raise SchemaError(
                        f"<item> may contain only <list>, found <{grandchild.tag}>"
                    )
                item.lists.append(self.parse_list(grandchild))
            block.items.append(item)
        return block

    def parse_paragraph(self, element: ET.Element) -> Paragraph:
        paragraph = Paragraph(
            node_id=self._read_id(element),
            text=_clean_text(element.text),
            labels=self._read_labels(element),
        )
        for child in element:
            if child.tag != "list":
                raise SchemaError(
                    f"<paragraph> may contain only <list>, found <{child.tag}>"
                )
            paragraph.lists.append(self.parse_list(child))
        return paragraph

    def parse_segment(self, element: ET.Element, parent_level: int) -> Segment:
        raw_level = element.get("level")
        if raw_level is None:
            raise SchemaError(
                f"segment without level {self._node_context(element)}"
            )
        try:
            level = int(raw_level)
        except ValueError:
            raise SchemaError(f"segment level not an integer: {raw_level!r}") from None
        if not 1 <= level <= MAX_SEGMENT_LEVEL:
            raise SchemaError(f"segment level out of range: {level}")
        if level <= parent_level:
            raise SchemaError(
                f"segment level {level} nested under level {parent_level} "
                f"{self._node_context(element)}"
            )
        children = list(element)
        if not children or children[0].tag != "title":
            raise SchemaError(
                f"segment without title {self._node_context(element)}"
            )
        title_element = children[0]
        title = Title(
            node_id=self._read_id(title_element),
            text=_clean_text(title_element.text),
            labels=self._read_labels(title_element),
        )
        if len(title_element):
            raise SchemaError(
                f"<title> may not contain elements, found "
                f"<{title_element[0].tag}>"
            )
        segment = Segment(level=level, title=title)
        for child in children[1:]:
            if child.tag == "paragraph":
                segment.children.append(self.parse_paragraph(child))
            elif child.tag == "segment":
                segment.children.append(self.parse_segment(child, level))
            elif child.tag == "title":
                raise SchemaError(
                    f"multiple titles in segment at node {title.node_id}"
                )
            else:
                raise SchemaError(
                    f"<segment> may contain only title/paragraph/segment, "
                    f"found <{child.tag}>"
                )
        return segment

    def parse(self, data: bytes) -> PolicyDocument:
        try:
            root = ET.fromstring(data)
        except ET.ParseError as exc:
            raise SchemaError(f"not well-formed XML: {exc}") from None
        if root.tag != "policy":
            raise SchemaError(
                f"root element must be <policy>, found <{root.tag}>"
            )
        doc = PolicyDocument(source=root.get("source", ""))
        for child in root:
            if child.tag == "paragraph":
                doc.children.append(self.parse_paragraph(child))
            elif child.tag == "segment":
                doc.children.append(self.parse_segment(child, 0))
            else:
                raise SchemaError(
                    f"<policy> may contain only segment/paragraph, "
                    f"found <{child.tag}>"
                )
        return doc


def parse_ppxml(data: bytes) -> PolicyDocument:
    return _Parser().parse(data)


def validate_document(doc: PolicyDocument) -> list[str]:
    """Non-fatal review findings for manual verification, empty when clean."""
    findings: list[str] = []
    seen: set[str] = set()
    for node in doc.iter_nodes():
        if node.node_id in seen:
            findings.append(f"duplicate node id {node.node_id}")
        seen.add(node.node_id)
        if isinstance(node, Title) and not node.text.strip():
            findings.append(f"empty title at node {node.node_id}")

    def walk(children, parent_level):
        sibling_segments = [c for c in children if isinstance(c, Segment)]
        if len(sibling_segments) > SIBLING_SEGMENT_WARNING_LIMIT:
            findings.append(
                f"{len(sibling_segments)} sibling segments under level "
                f"{parent_level} (suspicious structure)"
            )
        for child in sibling_segments:
            if child.level > parent_level + 1 and parent_level > 0:
                findings.append(
                    f"level jump from {parent_level} to {child.level} at node "
                    f"{child.title.node_id}"
                )
            if not child.children:
                findings.append(
                    f"segment with title only at node {child.title.node_id}"
                )
            walk(child.children, child.level)

    walk(doc.children, 0)
    return findings
