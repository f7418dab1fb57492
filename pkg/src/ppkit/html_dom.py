"""Simplified HTML DOM: parsing, visible-text extraction, serialization.

The toolkit never needs a rendering-grade DOM; it needs a stable element
tree with tags, attributes and human-readable text. Parsing is built on
html.parser with the common implied-end-tag rules (unclosed <p>, <li>,
table cells) so saved real-world pages nest sanely.

Direct text is exposed two ways: ``text`` concatenates all text placed
directly in an element, while ``text_runs`` (filled by the parser)
remembers where each piece sat relative to the element's children so
visible text keeps its original reading order around inline elements.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html import escape
from html.parser import HTMLParser
from typing import Iterator

_WS = re.compile(r"\s+")

VOID_ELEMENTS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link",
    "meta", "param", "source", "track", "wbr",
}

# Opening any of these implicitly closes an open <p>.
_P_CLOSERS = {
    "address", "article", "aside", "blockquote", "details", "div", "dl",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
    "h4", "h5", "h6", "header", "hgroup", "hr", "main", "menu", "nav", "ol",
    "p", "pre", "section", "table", "ul",
}

# tag being opened -> open tags it implicitly closes
_IMPLIED_CLOSE = {
    "li": {"li"},
    "dt": {"dt", "dd"},
    "dd": {"dt", "dd"},
    "tr": {"tr", "td", "th"},
    "td": {"td", "th"},
    "th": {"td", "th"},
    "option": {"option"},
}


@dataclass
class DomNode:
    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["DomNode"] = field(default_factory=list)
    text: str = ""
    # (position, piece): the piece of direct text that arrived when the
    # element already had `position` children. None for hand-built nodes.
    text_runs: list[tuple[int, str]] | None = None

    def add_text(self, piece: str) -> None:
        if not piece:
            return
        if self.text_runs is None:
            self.text_runs = [(len(self.children), self.text)] if self.text else []
        self.text_runs.append((len(self.children), piece))
        self.text += piece

    def iter_content(self) -> Iterator["str | DomNode"]:
        """Direct text pieces and child elements in reading order."""
        if self.text_runs is None:
            if self.text:
                yield self.text
            yield from self.children
            return
        runs = sorted(
            ((pos, order, piece) for order, (pos, piece)
             in enumerate(self.text_runs)),
        )
        cursor = 0
        for index, child in enumerate(self.children):
            while cursor < len(runs) and runs[cursor][0] <= index:
                yield runs[cursor][2]
                cursor += 1
            yield child
        for _, _, piece in runs[cursor:]:
            yield piece

    def find_all(self, tag: str) -> list["DomNode"]:
        """All descendants (and self) with the given tag, document order."""
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.tag == tag:
                out.append(node)
            stack.extend(reversed(node.children))
        return out

    def iter_nodes(self) -> Iterator["DomNode"]:
        """Yield self and all descendants in document order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def copy(self) -> "DomNode":
        return DomNode(
            tag=self.tag,
            attrs=dict(self.attrs),
            children=[c.copy() for c in self.children],
            text=self.text,
            text_runs=list(self.text_runs) if self.text_runs is not None else None,
        )


def collapse_whitespace(text: str) -> str:
    return _WS.sub(" ", text).strip()


def _collect_text(node: DomNode, pieces: list[str]) -> None:
    for content in node.iter_content():
        if isinstance(content, str):
            pieces.append(content)
        else:
            _collect_text(content, pieces)


def visible_text(node: DomNode) -> str:
    """Human-readable text: descendant text joined by single spaces,
    consecutive whitespace collapsed, ends trimmed."""
    pieces: list[str] = []
    _collect_text(node, pieces)
    return collapse_whitespace(" ".join(pieces))


def text_length(node: DomNode) -> int:
    """Number of characters a human reader sees under this node."""
    return len(visible_text(node))


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.top = DomNode(tag="document")
        self._stack = [self.top]

    @staticmethod
    def _attr_map(attrs) -> dict[str, str]:
        out: dict[str, str] = {}
        for key, value in attrs:
            key = key.lower()
            if key not in out:
                out[key] = value if value is not None else ""
        return out

    def _implied_closers(self, tag: str) -> set[str]:
        if tag in _P_CLOSERS:
            return {"p"} | _IMPLIED_CLOSE.get(tag, set())
        return _IMPLIED_CLOSE.get(tag, set())

    def handle_starttag(self, tag, attrs):
        tag = tag.lower()
        closers = self._implied_closers(tag)
        while len(self._stack) > 1 and self._stack[-1].tag in closers:
            self._stack.pop()
        node = DomNode(tag=tag, attrs=self._attr_map(attrs))
        self._stack[-1].children.append(node)
        if tag not in VOID_ELEMENTS:
            self._stack.append(node)

    def handle_startendtag(self, tag, attrs):
        tag = tag.lower()
        self._stack[-1].children.append(
            DomNode(tag=tag, attrs=self._attr_map(attrs))
        )

    def handle_endtag(self, tag):
        tag = tag.lower()
        if tag in VOID_ELEMENTS:
            return
        for i in range(len(self._stack) - 1, 0, -1):
            if self._stack[i].tag == tag:
                del self._stack[i:]
                return
        # stray end tag: ignore

    def handle_data(self, data):
        if data:
            self._stack[-1].add_text(data)


def parse_html(markup: str) -> DomNode:
    """Parse HTML into a DomNode tree.

    Returns the single top-level element when the document has one
    (typically <html>), otherwise a synthetic "document" wrapper.
    """
    builder = _TreeBuilder()
    builder.feed(markup)
    builder.close()
    top = builder.top
    if len(top.children) == 1 and not collapse_whitespace(top.text):
        return top.children[0]
    return top


def find_first(root: DomNode, tag: str) -> DomNode | None:
    nodes = root.find_all(tag)
    return nodes[0] if nodes else None


def body_or_root(root: DomNode) -> DomNode:
    """The <body> element when present, else the parse root."""
    return find_first(root, "body") or root


def serialize_html(node: DomNode, indent: int = 0) -> str:
    """Deterministic HTML rendering of a DomNode tree (audit output)."""
    pad = "  " * indent
    attrs = "".join(
        f' {k}="{escape(v, quote=True)}"' for k, v in node.attrs.items()
    )
    if node.tag in VOID_ELEMENTS:
        return f"{pad}<{node.tag}{attrs}/>\n"
    content = list(node.iter_content())
    has_text = any(
        isinstance(piece, str) and collapse_whitespace(piece)
        for piece in content
    )
    out = [f"{pad}<{node.tag}{attrs}>"]
    if has_text:
        # Mixed content renders inline to keep text order intact.
        for piece in content:
            if isinstance(piece, str):
                out.append(escape(_WS.sub(" ", piece)))
            else:
                out.append(serialize_html(piece, 0).strip())
        out.append(f"</{node.tag}>\n")
        return "".join(out)
    if node.children:
        out.append("\n")
        for child in node.children:
            out.append(serialize_html(child, indent + 1))
        out.append(pad)
    out.append(f"</{node.tag}>\n")
    return "".join(out)
