"""Lightweight HTML element tree with a small CSS-selector subset.

Page scraping needs "parse this document, find these nodes" and nothing
more, so this sits directly on :mod:`html.parser` from the standard
library. The selector grammar covers what the selector configuration files
actually use:

    tag, ``#id``, ``.class``, ``[attr]``, ``[attr=value]``, compounds of
    those (``span.count``), descendant combinator (space), and child
    combinator (``>``).

Anything fancier (sibling combinators, pseudo-classes) is rejected loudly
rather than silently matching nothing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

# Tags whose next sibling of the same kind implicitly closes them.
_SELF_CLOSING_SIBLINGS = frozenset({"p", "li", "tr", "td", "th", "dd", "dt", "option"})

# Tags that never take closing tags; treat their start tags as self-closing.
_VOID_TAGS = frozenset(
    {
        "area",
        "base",
        "br",
        "col",
        "embed",
        "hr",
        "img",
        "input",
        "link",
        "meta",
        "source",
        "track",
        "wbr",
    }
)

_COMPOUND_TOKEN = re.compile(
    r"""
    (?P<tag>[A-Za-z][\w-]*|\*)
    | \#(?P<id>[\w.:-]+)
    | \.(?P<cls>[\w-]+)
    | \[(?P<attr>[\w-]+)(?:=(?P<quote>["']?)(?P<value>[^\]]*?)(?P=quote))?\]
    """,
    re.VERBOSE,
)


class SelectorError(ValueError):
    """The selector text is outside the supported grammar."""


@dataclass
class Element:
    """One parsed element; `children` interleaves child elements and text runs."""

    tag: str
    attrs: dict[str, str]
    parent: Element | None = None
    children: list[Element | str] = field(default_factory=list)

    def __repr__(self) -> str:  # keep assertion output readable
        ident = f"#{self.attrs['id']}" if "id" in self.attrs else ""
        cls = "." + ".".join(self.classes) if self.classes else ""
        return f"<{self.tag}{ident}{cls}>"

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple((self.attrs.get("class") or "").split())

    @property
    def text(self) -> str:
        """Concatenated text of this element and all descendants."""
        parts: list[str] = []
        for child in self.children:
            parts.append(child if isinstance(child, str) else child.text)
        return "".join(parts)

    def get(self, name: str, default: str | None = None) -> str | None:
        return self.attrs.get(name, default)

    def iter(self):
        """All descendant elements, depth-first, excluding self."""
        for child in self.children:
            if isinstance(child, Element):
                yield child
                yield from child.iter()

    def select(self, selector: str) -> list[Element]:
        """Descendants matching `selector`, in document order.

        Combinator ancestors may sit above the element select() ran on;
        only the matched elements themselves are restricted to the subtree.
        """
        parts = _parse_selector(selector)
        return [el for el in self.iter() if _matches_chain(el, parts, len(parts) - 1)]

    def select_one(self, selector: str) -> Element | None:
        found = self.select(selector)
        return found[0] if found else None


@dataclass(frozen=True)
class _Compound:
    tag: str | None
    id: str | None
    classes: tuple[str, ...]
    attrs: tuple[tuple[str, str | None], ...]
    # Combinator connecting this compound to the one on its left:
    # None for the first, " " for descendant, ">" for child.
    left: str | None


def _parse_compound(text: str, left: str | None) -> _Compound:
    pos = 0
    tag = None
    ident = None
    classes: list[str] = []
    attrs: list[tuple[str, str | None]] = []
    while pos < len(text):
        m = _COMPOUND_TOKEN.match(text, pos)
        if m is None:
            raise SelectorError(f"unsupported selector syntax at {text[pos:]!r}")
        if m.group("tag"):
            if pos != 0:
                raise SelectorError(f"tag must lead the compound in {text!r}")
            if m.group("tag") != "*":
                tag = m.group("tag").lower()
        elif m.group("id"):
            ident = m.group("id")
        elif m.group("cls"):
            classes.append(m.group("cls"))
        else:
            name = m.group("attr").lower()
            value = m.group("value") if m.group("value") is not None else None
            attrs.append((name, value))
        pos = m.end()
    return _Compound(tag, ident, tuple(classes), tuple(attrs), left)


def _parse_selector(selector: str) -> list[_Compound]:
    if not selector or not selector.strip():
        raise SelectorError("empty selector")
    if "," in selector:
        raise SelectorError("alternation is not supported; list selectors separately")
    tokens = selector.replace(">", " > ").split()
    parts: list[_Compound] = []
    pending: str | None = None
    for token in tokens:
        if token == ">":
            if pending == ">" or not parts:
                raise SelectorError(f"misplaced '>' in {selector!r}")
            pending = ">"
            continue
        parts.append(_parse_compound(token, pending if parts else None))
        pending = " "
    if pending == ">":
        raise SelectorError(f"dangling '>' in {selector!r}")
    if not parts:
        raise SelectorError("empty selector")
    return parts


def _matches_compound(el: Element, c: _Compound) -> bool:
    if c.tag is not None and el.tag != c.tag:
        return False
    if c.id is not None and el.attrs.get("id") != c.id:
        return False
    if c.classes and not set(c.classes) <= set(el.classes):
        return False
    for name, value in c.attrs:
        if name not in el.attrs:
            return False
        if value is not None and el.attrs[name] != value:
            return False
    return True


def _matches_chain(el: Element, parts: list[_Compound], idx: int) -> bool:
    if not _matches_compound(el, parts[idx]):
        return False
    if idx == 0:
        return True
    if parts[idx].left == ">":
        parent = el.parent
        return parent is not None and _matches_chain(parent, parts, idx - 1)
    ancestor = el.parent
    while ancestor is not None:
        if _matches_chain(ancestor, parts, idx - 1):
            return True
        ancestor = ancestor.parent
    return False


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = Element("[document]", {})
        self._stack = [self.root]

    def handle_starttag(self, tag, attrs):
        if tag in _SELF_CLOSING_SIBLINGS and self._stack[-1].tag == tag:
            self._stack.pop()
        merged: dict[str, str] = {}
        for name, value in attrs:
            merged.setdefault(name, value if value is not None else "")
        el = Element(tag, merged, parent=self._stack[-1])
        self._stack[-1].children.append(el)
        if tag not in _VOID_TAGS:
            self._stack.append(el)

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        if tag not in _VOID_TAGS:
            self._stack.pop()

    def handle_endtag(self, tag):
        if tag in _VOID_TAGS:
            return
        # Pop to the nearest open element of this tag; ignore strays so the
        # builder survives mildly malformed markup.
        for i in range(len(self._stack) - 1, 0, -1):
            if self._stack[i].tag == tag:
                del self._stack[i:]
                return

    def handle_data(self, data):
        if data:
            self._stack[-1].children.append(data)


def parse_html(text: str) -> Element:
    """Parse markup into an element tree rooted at a synthetic document node."""
    builder = _TreeBuilder()
    builder.feed(text)
    builder.close()
    return builder.root
