"""From cleaned DOM to a hierarchical policy document.

Stages, applied to the located policy element:

1. Collect candidate blocks (headings, paragraphs, text-bearing divs,
   promoted highlighted-inline headings) in document order; HTML lists
   attach to their preceding block as nested list structures.
2. Describe each block with a 20-D feature vector: eight scalar traits
   (text length, font size, font weight, italic, underlined, DOM depth,
   tag code, ordinal-label depth) plus a 12-D leading-ordinal-label
   descriptor.
3. Classify blocks into title levels 1-4 or paragraph with a
   randomized decision forest.
4. Fold the classified block sequence into nested segments.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError
from .forest import (DecisionForest, ForestConfig, forest_from_blob,
                     forest_to_blob, train_forest)
from .html_dom import DomNode, visible_text
from .ppxml import (Item, ListBlock, Paragraph, PolicyDocument, Segment,
                    Title, format_node_id)

BLOCK_MODEL_MAGIC = b"PPSB1"

# Leading-ordinal-label encoding -----------------------------------------

LABEL_NONE = 0
LABEL_ARABIC = 1
LABEL_LOWERCASE = 2
LABEL_UPPERCASE = 3
LABEL_ROMAN = 4
LABEL_OTHER = 5

SEPARATOR_NONE = 0
SEPARATOR_FULL_STOP = 1
SEPARATOR_COLON = 2
SEPARATOR_PARENTHESIS = 3
SEPARATOR_OTHER = 4

LOL_DIMS = 12
MAX_SUB_LABELS = 4

_ROMAN_VALUES = {
    "i": 1, "ii": 2, "iii": 3, "iv": 4, "v": 5,
    "vi": 6, "vii": 7, "viii": 8, "ix": 9, "x": 10,
}
_SEPARATOR_CODES = {".": SEPARATOR_FULL_STOP, ":": SEPARATOR_COLON,
                    ")": SEPARATOR_PARENTHESIS, "(": SEPARATOR_PARENTHESIS}
_ALNUM_RUN = re.compile(r"[0-9A-Za-z]+")


def _classify_run(run: str) -> tuple[int, int] | None:
    """(format, value) of one leading token, or None when it is a plain word."""
    if run.isdigit():
        value = int(run)
        if value == 0:
            return None  # ordinal values are 1-based
        return LABEL_ARABIC, value
    if run.isalpha():
        lowered = run.lower()
        # Roman numerals win over single letters for the ambiguous i/v/x.
        if lowered in _ROMAN_VALUES:
            return LABEL_ROMAN, _ROMAN_VALUES[lowered]
        if len(run) == 1:
            if run.islower():
                return LABEL_LOWERCASE, ord(lowered) - ord("a") + 1
            return LABEL_UPPERCASE, ord(lowered) - ord("a") + 1
        return None  # multi-letter word, not an ordinal label
    return LABEL_OTHER, 1  # mixed alphanumerics such as "3a"


def parse_leading_ordinal_label(text: str) -> list[int]:
    """Encode up to four leading ordinal sub-labels as 12 integers.

    Each sub-label yields (format, 1-based value, separator format);
    unused trailing slots stay (0, 0, 0). Formats: 1 Arabic, 2 lowercase
    letter, 3 uppercase letter, 4 Roman numeral (i..x), 5 other;
    separators: 1 full stop, 2 colon, 3 parenthesis, 4 other, 0 none.
    Text without a recognizable leading label encodes to all zeros.
    """
    descriptor = [0] * LOL_DIMS
    position = 0
    text = text.lstrip()
    if text.startswith("("):
        position = 1
    for slot in range(MAX_SUB_LABELS):
        match = _ALNUM_RUN.match(text, position)
        if match is None:
            break
        classified = _classify_run(match.group())
        if classified is None:
            break
        label_format, label_value = classified
        end = match.end()
        separator = SEPARATOR_NONE
        if end < len(text):
            nxt = text[end]
            if nxt in _SEPARATOR_CODES:
                separator = _SEPARATOR_CODES[nxt]
                end += 1
            elif not nxt.isspace():
                break  # glued to something unrecognized: not a label
        if separator == SEPARATOR_NONE and label_format == LABEL_OTHER:
            break  # mixed runs only count when explicitly separated
        base = 3 * slot
        descriptor[base] = label_format
        descriptor[base + 1] = label_value
        descriptor[base + 2] = separator
        if separator == SEPARATOR_NONE:
            break  # bare label ends the chain
        position = end
        if position < len(text) and text[position] == "(":
            position += 1
        if position >= len(text) or text[position].isspace():
            break
    return descriptor


def lol_depth(descriptor: list[int]) -> int:
    """Number of filled sub-label slots."""
    return sum(1 for slot in range(MAX_SUB_LABELS) if descriptor[3 * slot] != 0)


# Block classes -----------------------------------------------------------

class BlockClass(enum.Enum):
    TITLE_L1 = "TitleL1"
    TITLE_L2 = "TitleL2"
    TITLE_L3 = "TitleL3"
    TITLE_L4 = "TitleL4"
    PARAGRAPH = "Paragraph"

    @property
    def title_level(self) -> int | None:
        order = {"TitleL1": 1, "TitleL2": 2, "TitleL3": 3, "TitleL4": 4}
        return order.get(self.value)


BLOCK_CLASS_ORDER = [BlockClass.TITLE_L1, BlockClass.TITLE_L2,
                     BlockClass.TITLE_L3, BlockClass.TITLE_L4,
                     BlockClass.PARAGRAPH]
_CLASS_INDEX = {cls: i for i, cls in enumerate(BLOCK_CLASS_ORDER)}


def title_class_for_level(level: int) -> BlockClass:
    return BLOCK_CLASS_ORDER[level - 1]


# Style resolution --------------------------------------------------------

HEADING_SIZES_PX = {"h1": 32.0, "h2": 24.0, "h3": 18.72, "h4": 16.0,
                    "h5": 13.28, "h6": 10.72}
BOLD_TAGS = frozenset({"b", "strong"}) | frozenset(HEADING_SIZES_PX)
ITALIC_TAGS = frozenset({"em", "i"})
UNDERLINE_TAGS = frozenset({"u", "ins"})
_WEIGHT_KEYWORDS = {"bold": 700.0, "bolder": 700.0, "normal": 400.0,
                    "lighter": 300.0}
DEFAULT_FONT_SIZE_PX = 16.0

CANDIDATE_TAG_CODES = {
    "h1": 1, "h2": 2, "h3": 3, "h4": 4, "h5": 5, "h6": 6,
    "p": 7, "div": 8,
    "b": 9, "strong": 10, "em": 11, "i": 12, "u": 13, "span": 14,
    "mark": 15, "font": 16,
}
HIGHLIGHT_TAGS = frozenset({"b", "strong", "em", "i", "u", "span", "mark",
                            "font"})


def parse_inline_style(style: str) -> dict[str, str]:
    rules: dict[str, str] = {}
    for declaration in style.split(";"):
        if ":" not in declaration:
            continue
        prop, _, value = declaration.partition(":")
        rules[prop.strip().lower()] = value.strip().lower()
    return rules


def _parse_size(value: str, parent_px: float | None) -> float | None:
    match = re.match(r"^(-?\d+(?:\.\d+)?)\s*([a-z%]*)$", value)
    if not match:
        return None
    number = float(match.group(1))
    unit = match.group(2)
    if unit in ("px", ""):
        return number
    if unit == "pt":
        return number * 4.0 / 3.0
    base = parent_px if parent_px is not None else DEFAULT_FONT_SIZE_PX
    if unit == "em":
        return number * base
    if unit == "rem":
        return number * DEFAULT_FONT_SIZE_PX
    if unit == "%":
        return number * base / 100.0
    return None


def _parse_weight(value: str) -> float | None:
    if value in _WEIGHT_KEYWORDS:
        return _WEIGHT_KEYWORDS[value]
    try:
        return float(value)
    except ValueError:
        return None


class PageContext:
    """Resolved depth and typography for nodes under one page root.

    Style resolution approximates a browser: an element's own inline
    style wins, then its tag's built-in rendering, then inheritance from
    the nearest styled ancestor. Unresolvable size/weight stay None.
    """

    def __init__(self, root: DomNode):
        self.root = root
        self._parent: dict[int, DomNode | None] = {id(root): None}
        self._depth: dict[int, int] = {id(root): 0}
        stack = [root]
        while stack:
            node = stack.pop()
            for child in node.children:
                self._parent[id(child)] = node
                self._depth[id(child)] = self._depth[id(node)] + 1
                stack.append(child)
        self._size_cache: dict[int, float | None] = {}
        self._weight_cache: dict[int, float | None] = {}
        self._italic_cache: dict[int, bool] = {}
        self._underline_cache: dict[int, bool] = {}

    def depth(self, node: DomNode) -> int:
        return self._depth[id(node)]

    def parent(self, node: DomNode) -> DomNode | None:
        return self._parent[id(node)]

    def _rules(self, node: DomNode) -> dict[str, str]:
        style = node.attrs.get("style")
        return parse_inline_style(style) if style else {}

    def font_size(self, node: DomNode | None) -> float | None:
        if node is None:
            return None
        key = id(node)
        if key not in self._size_cache:
            self._size_cache[key] = self._resolve_size(node)
        return self._size_cache[key]

    def _resolve_size(self, node: DomNode) -> float | None:
        rules = self._rules(node)
        if "font-size" in rules:
            parent_px = self.font_size(self.parent(node))
            resolved = _parse_size(rules["font-size"], parent_px)
            if resolved is not None:
                return resolved
        if node.tag in HEADING_SIZES_PX:
            return HEADING_SIZES_PX[node.tag]
        return self.font_size(self.parent(node))

    def font_weight(self, node: DomNode | None) -> float | None:
        if node is None:
            return None
        key = id(node)
        if key not in self._weight_cache:
            self._weight_cache[key] = self._resolve_weight(node)
        return self._weight_cache[key]

    def _resolve_weight(self, node: DomNode) -> float | None:
        rules = self._rules(node)
        if "font-weight" in rules:
            resolved = _parse_weight(rules["font-weight"])
            if resolved is not None:
                return resolved
        if node.tag in BOLD_TAGS:
            return 700.0
        return self.font_weight(self.parent(node))

    def is_italic(self, node: DomNode | None) -> bool:
        if node is None:
            return False
        key = id(node)
        if key not in self._italic_cache:
            rules = self._rules(node)
            if "font-style" in rules:
                value = rules["font-style"].startswith(("italic", "oblique"))
            elif node.tag in ITALIC_TAGS:
                value = True
            else:
                value = self.is_italic(self.parent(node))
            self._italic_cache[key] = value
        return self._italic_cache[key]

    def is_underlined(self, node: DomNode | None) -> bool:
        if node is None:
            return False
        key = id(node)
        if key not in self._underline_cache:
            rules = self._rules(node)
            decoration = rules.get("text-decoration",
                                   rules.get("text-decoration-line"))
            if decoration is not None:
                value = "underline" in decoration
            elif node.tag in UNDERLINE_TAGS:
                value = True
            else:
                value = self.is_underlined(self.parent(node))
            self._underline_cache[key] = value
        return self._underline_cache[key]


# Block features ----------------------------------------------------------

N_SCALAR_FEATURES = 8
N_BLOCK_FEATURES = N_SCALAR_FEATURES + LOL_DIMS  # 20


@dataclass
class BlockFeatures:
    text_length: int
    font_size: float  # px, -1 when unknown
    font_weight: float  # CSS weight scale, -1 when unknown
    is_italic: int
    is_underlined: int
    dom_depth: int
    tag_code: int
    lol: list[int]

    @property
    def lol_depth(self) -> int:
        return lol_depth(self.lol)

    def to_vector(self) -> np.ndarray:
        return np.array(
            [self.text_length, self.font_size, self.font_weight,
             self.is_italic, self.is_underlined, self.dom_depth,
             self.tag_code, self.lol_depth, *self.lol],
            dtype=np.float64,
        )


def extract_block_features(node: DomNode, ctx: PageContext) -> BlockFeatures:
    text = visible_text(node)
    size = ctx.font_size(node)
    weight = ctx.font_weight(node)
    return BlockFeatures(
        text_length=len(text),
        font_size=size if size is not None else -1.0,
        font_weight=weight if weight is not None else -1.0,
        is_italic=int(ctx.is_italic(node)),
        is_underlined=int(ctx.is_underlined(node)),
        dom_depth=ctx.depth(node),
        tag_code=CANDIDATE_TAG_CODES.get(node.tag, 0),
        lol=parse_leading_ordinal_label(text),
    )


def features_matrix(blocks: list[BlockFeatures]) -> np.ndarray:
    if not blocks:
        return np.zeros((0, N_BLOCK_FEATURES))
    return np.stack([block.to_vector() for block in blocks])


# Block classifier --------------------------------------------------------

@dataclass
class BlockClassifierModel:
    forest: DecisionForest

    def classify(self, blocks: list[BlockFeatures]) -> list[BlockClass]:
        if not blocks:
            return []
        labels = self.forest.predict(features_matrix(blocks))
        return [BLOCK_CLASS_ORDER[int(i)] for i in labels]


def train_block_classifier(
    samples: list[tuple[BlockFeatures, BlockClass]],
    seed: int = 0,
    n_trees: int = 200,
) -> BlockClassifierModel:
    """Randomized-threshold forest over the 20-D block features."""
    if not samples:
        raise TrainingError("empty sample list")
    classes = {cls for _, cls in samples}
    if len(classes) < 2:
        raise TrainingError("single class in training samples")
    x = features_matrix([features for features, _ in samples])
    y = np.array([_CLASS_INDEX[cls] for _, cls in samples], dtype=np.int64)
    config = ForestConfig(n_trees=n_trees, mode="extra")
    return BlockClassifierModel(forest=train_forest(x, y, config, seed=seed))


def classify_blocks(model: BlockClassifierModel,
                    blocks: list[BlockFeatures]) -> list[BlockClass]:
    return model.classify(blocks)


def block_model_to_bytes(model: BlockClassifierModel) -> bytes:
    return forest_to_blob(model.forest, magic=BLOCK_MODEL_MAGIC)


def block_model_from_bytes(data: bytes) -> BlockClassifierModel:
    return BlockClassifierModel(
        forest=forest_from_blob(data, magic=BLOCK_MODEL_MAGIC)
    )


def save_block_model(model: BlockClassifierModel, path) -> None:
    with open(path, "wb") as handle:
        handle.write(block_model_to_bytes(model))


def load_block_model(path) -> BlockClassifierModel:
    with open(path, "rb") as handle:
        return block_model_from_bytes(handle.read())


# Candidate-block collection ----------------------------------------------

LIST_TAGS = frozenset({"ul", "ol", "dd"})
ITEM_TAGS = frozenset({"li", "dt"})
_CONTAINER_TAGS = frozenset({
    "document", "html", "body", "main", "article", "section", "header",
    "hgroup", "aside", "center", "blockquote", "dl", "table", "tbody",
    "thead", "tr", "td", "th",
})
_BLOCKISH_TAGS = (frozenset(HEADING_SIZES_PX) | LIST_TAGS | _CONTAINER_TAGS
                  | {"p", "div"})


@dataclass
class Block:
    """One classified-or-classifiable unit of the policy body."""
    node: DomNode
    text: str
    features: BlockFeatures
    lists: list[ListBlock] = field(default_factory=list)


def _text_excluding_lists(node: DomNode) -> str:
    pieces: list[str] = []

    def walk(current: DomNode):
        for content in current.iter_content():
            if isinstance(content, str):
                pieces.append(content)
            elif content.tag not in LIST_TAGS:
                walk(content)

    walk(node)
    return re.sub(r"\s+", " ", " ".join(pieces)).strip()


def _build_list(node: DomNode) -> ListBlock:
    block = ListBlock()
    for child in node.children:
        if child.tag in ITEM_TAGS:
            item = Item(text=_text_excluding_lists(child))
            for nested in child.children:
                if nested.tag in LIST_TAGS:
                    item.lists.append(_build_list(nested))
            block.items.append(item)
        elif child.tag in LIST_TAGS:
            if not block.items:
                block.items.append(Item())
            block.items[-1].lists.append(_build_list(child))
    if not block.items:
        text = visible_text(node)
        if text:
            block.items.append(Item(text=text))
    return block


def _has_blockish_children(node: DomNode) -> bool:
    return any(child.tag in _BLOCKISH_TAGS for child in node.children)


def _promote_highlight(node: DomNode) -> DomNode:
    """A block whose sole content is a highlighted inline element is
    represented by that inline element (heading-styled one-liners)."""
    if node.tag in ("p", "div") and not node.text.strip():
        element_children = node.children
        if (len(element_children) == 1
                and element_children[0].tag in HIGHLIGHT_TAGS):
            return element_children[0]
    return node


def collect_blocks(pp_root: DomNode,
                   ctx: PageContext | None = None) -> list[Block]:
    """Candidate blocks in document order; lists attach to the nearest
    preceding block (a placeholder paragraph hosts document-leading
    lists)."""
    if ctx is None:
        ctx = PageContext(pp_root)
    blocks: list[Block] = []

    def attach_list(node: DomNode):
        if not blocks:
            placeholder = BlockFeatures(
                text_length=0, font_size=-1.0, font_weight=-1.0,
                is_italic=0, is_underlined=0, dom_depth=ctx.depth(node),
                tag_code=0, lol=[0] * LOL_DIMS,
            )
            blocks.append(Block(node=node, text="", features=placeholder))
        blocks[-1].lists.append(_build_list(node))

    def emit(node: DomNode):
        target = _promote_highlight(node)
        blocks.append(Block(
            node=target,
            text=visible_text(target),
            features=extract_block_features(target, ctx),
        ))

    def walk(node: DomNode):
        for child in node.children:
            if child.tag in LIST_TAGS:
                attach_list(child)
            elif child.tag in HEADING_SIZES_PX or child.tag == "p":
                emit(child)
            elif child.tag == "div":
                if _has_blockish_children(child):
                    walk(child)
                elif visible_text(child):
                    emit(child)
            elif child.tag in _CONTAINER_TAGS:
                walk(child)
            elif child.tag == "dt":
                emit(child)
            elif visible_text(child):
                emit(child)

    if pp_root.tag in LIST_TAGS:
        attach_list(pp_root)
    elif pp_root.children:
        walk(pp_root)
    elif visible_text(pp_root):
        emit(pp_root)
    return blocks


# Segment-tree assembly ---------------------------------------------------

def build_segment_tree(
    classified: list[tuple[Block, BlockClass]],
    source: str = "",
) -> PolicyDocument:
    """Fold blocks in document order into nested segments.

    A title opens a segment at its level, closing any open segments at
    the same or deeper level first; non-title blocks join the innermost
    open segment (or the document root before the first title). Deeper
    titles nest directly — no intermediate levels are invented.
    """
    doc = PolicyDocument(source=source)
    open_segments: list[Segment] = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return format_node_id(counter)

    def container_children() -> list:
        return open_segments[-1].children if open_segments else doc.children

    for block, block_class in classified:
        level = block_class.title_level
        if level is None:
            paragraph = Paragraph(node_id=next_id(), text=block.text,
                                  lists=list(block.lists))
            container_children().append(paragraph)
        else:
            while open_segments and open_segments[-1].level >= level:
                open_segments.pop()
            segment = Segment(
                level=level,
                title=Title(node_id=next_id(), text=block.text),
            )
            container_children().append(segment)
            open_segments.append(segment)
    return doc


def heuristic_classify(blocks: list[Block]) -> list[BlockClass]:
    """Deterministic fallback classification when no trained model is
    supplied: heading tags map to their levels; short emphasized or
    ordinal-labeled text counts as a title."""
    classes = []
    for block in blocks:
        features = block.features
        tag = block.node.tag
        if tag in HEADING_SIZES_PX:
            level = min(int(tag[1]), 4)
            classes.append(title_class_for_level(level))
        elif (block.text and features.text_length <= 80
              and (features.font_weight >= 600 or features.lol_depth >= 1)):
            depth = features.lol_depth
            level = depth if 1 <= depth <= 4 else 2
            classes.append(title_class_for_level(level))
        else:
            classes.append(BlockClass.PARAGRAPH)
    return classes


def structure_document(
    pp_root: DomNode,
    model: BlockClassifierModel | None = None,
    source: str = "",
) -> PolicyDocument:
    """Collect, classify and fold the policy element into a document."""
    blocks = collect_blocks(pp_root)
    if model is None:
        classes = heuristic_classify(blocks)
    else:
        classes = model.classify([block.features for block in blocks])
    return build_segment_tree(list(zip(blocks, classes)), source=source)
