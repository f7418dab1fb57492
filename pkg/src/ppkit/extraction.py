"""Locating the policy-bearing element of a saved HTML page.

Pipeline: strip non-content elements, then walk down from the page root
toward the element that holds the running policy text. The walk uses a
children-similarity score (population standard deviation of the children's
visible-text lengths): content containers hold many blocks of comparable
length, so their score is small relative to the scores seen higher up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ExtractionError
from .html_dom import DomNode, text_length, visible_text

# Media and graphics carry no policy text.
MEDIA_TAGS = frozenset({
    "img", "picture", "video", "audio", "canvas", "map", "area",
    "figure", "figcaption", "source", "track", "svg",
})
# Embedded/executable content is invisible or foreign to the page text.
EMBEDDED_TAGS = frozenset({
    "applet", "embed", "object", "param", "script", "noscript", "iframe",
})
# Navigation chrome and input controls.
INTERACTIVE_TAGS = frozenset({
    "footer", "nav", "form",
    "button", "datalist", "input", "label", "optgroup", "option",
    "output", "select", "textarea",
})

STRIPPED_TAGS = MEDIA_TAGS | EMBEDDED_TAGS | INTERACTIVE_TAGS

POLICY_LINK_KEYWORDS = ("privacy policy", "privacy notice", "privacy terms")
REGISTRATION_LINK_KEYWORDS = ("create account", "register", "sign up", "sign-up")


@dataclass(frozen=True)
class ExtractionConfig:
    """Knobs for the policy-element walk."""

    r_h: float = 0.55

    def __post_init__(self):
        if not 0 < self.r_h < 1:
            raise ValueError(f"r_h must be in (0, 1), got {self.r_h}")


def strip_irrelevant_elements(root: DomNode) -> DomNode:
    """Copy of the tree with media, embedded and interactive subtrees removed."""
    kept = []
    kept_before = []  # kept children among the first i original children
    count = 0
    for child in root.children:
        kept_before.append(count)
        if child.tag not in STRIPPED_TAGS:
            kept.append(strip_irrelevant_elements(child))
            count += 1
    kept_before.append(count)
    runs = None
    if root.text_runs is not None:
        runs = [(kept_before[min(pos, len(root.children))], piece)
                for pos, piece in root.text_runs]
    return DomNode(tag=root.tag, attrs=dict(root.attrs), children=kept,
                   text=root.text, text_runs=runs)


def find_links_by_keywords(
    root: DomNode, keywords: tuple[str, ...]
) -> list[tuple[str, str]]:
    """(anchor-text, href) for every <a> whose visible text contains any
    keyword, case-insensitively, in document order."""
    hits = []
    for anchor in root.find_all("a"):
        text = visible_text(anchor)
        lowered = text.lower()
        if any(keyword in lowered for keyword in keywords):
            hits.append((text, anchor.attrs.get("href", "")))
    return hits


def find_policy_links(root: DomNode) -> list[tuple[str, str]]:
    """Anchors that look like links to a privacy policy."""
    return find_links_by_keywords(root, POLICY_LINK_KEYWORDS)


def find_registration_links(root: DomNode) -> list[tuple[str, str]]:
    """Anchors that look like links to an account-registration page, where
    a policy link is often repeated."""
    return find_links_by_keywords(root, REGISTRATION_LINK_KEYWORDS)


def children_similarity_score(node: DomNode) -> float:
    """Population standard deviation of the children's visible-text lengths.

    Small values mean the children are uniform blocks, the signature of a
    container holding running text.
    """
    if not node.children:
        raise ExtractionError("leaf node: children similarity score needs children")
    lengths = [text_length(child) for child in node.children]
    mean = sum(lengths) / len(lengths)
    variance = sum((x - mean) ** 2 for x in lengths) / len(lengths)
    return math.sqrt(variance)


def extract_pp_element(
    node: DomNode, cfg: ExtractionConfig | None = None
) -> DomNode:
    """Walk from ``node`` down to the element holding the policy content.

    At each step the current element's similarity score is compared against
    the average of the scores seen so far (a set of known non-content
    values). A score much smaller than that running average — ratio below
    ``cfg.r_h`` — marks the current element as the content holder.
    Otherwise the walk records the score and descends into the child with
    the longest visible text. Leaves end the walk immediately.
    """
    if cfg is None:
        cfg = ExtractionConfig()
    observed: set[float] = set()
    current = node
    while True:
        if not current.children:
            return current
        lengths = [text_length(child) for child in current.children]
        mean = sum(lengths) / len(lengths)
        variance = sum((x - mean) ** 2 for x in lengths) / len(lengths)
        score = math.sqrt(variance)
        ratio = math.inf
        if observed:
            average = sum(observed) / len(observed)
            if average > 0:
                ratio = score / average
        if ratio < cfg.r_h:
            return current
        observed.add(score)
        best = None
        best_length = -1
        for child, length in zip(current.children, lengths):
            if length > best_length:
                best, best_length = child, length
        current = best
