"""Minimal DOM over html.parser plus the selector subset the adapters need.

Supported selector grammar, comma separated alternatives of descendant
chains of simple selectors:

    simple   := [tag | *] ( '#id' | '.class' | '[attr]' | '[attr=v]'
                          | '[attr*=v]' | '[attr^=v]' | '[attr$=v]' )*
    chain    := simple (whitespace simple)*
    selector := chain (',' chain)*

Attribute values may be bare or quoted. No pseudo-classes, no child or
sibling combinators. Results come back in document order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Iterator

VOID_TAGS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)

# tags whose implicit closing we emulate when the same tag reopens
_AUTOCLOSE_TAGS = frozenset({"p", "li", "option", "tr", "td", "th"})

_NON_TEXT_TAGS = frozenset({"script", "style", "template", "noscript"})


class Element:
    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag: str, attrs: dict[str, str] | None = None, parent: "Element | None" = None):
        self.tag = tag
        self.attrs = attrs or {}
        self.children: list[Element | str] = []
        self.parent = parent

    def __repr__(self) -> str:
        return f"<Element {self.tag} {self.attrs}>"

    def get(self, name: str, default: str | None = None) -> str | None:
        return self.attrs.get(name, default)

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(self.attrs.get("class", "").split())

    def iter_elements(self) -> Iterator["Element"]:
        """All descendant elements in document (pre-) order, self excluded."""
        for child in self.children:
            if isinstance(child, Element):
                yield child
                yield from child.iter_elements()

    def ancestors(self) -> Iterator["Element"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def text(self) -> str:
        if self.tag in _NON_TEXT_TAGS:
            return ""
        parts: list[str] = []
        for child in self.children:
            if isinstance(child, str):
                parts.append(child)
            elif child.tag == "br":
                parts.append("\n")
            else:
                parts.append(child.text())
        return "".join(parts)

    def select(self, selector: str) -> list["Element"]:
        chains = compile_selector(selector)
        out: list[Element] = []
        for node in self.iter_elements():
            if any(_chain_matches(node, chain, scope=self) for chain in chains):
                out.append(node)
        return out


@dataclass(frozen=True)
class SimpleSelector:
    tag: str | None = None
    id: str | None = None
    classes: tuple[str, ...] = ()
    attrs: tuple[tuple[str, str, str], ...] = ()  # (name, op, value); op "" means existence

    def matches(self, node: Element) -> bool:
        if self.tag is not None and node.tag != self.tag:
            return False
        if self.id is not None and node.attrs.get("id") != self.id:
            return False
        node_classes = node.classes
        for cls in self.classes:
            if cls not in node_classes:
                return False
        for name, op, value in self.attrs:
            actual = node.attrs.get(name)
            if actual is None:
                return False
            if op == "" :
                continue
            if op == "=" and actual != value:
                return False
            if op == "*=" and value not in actual:
                return False
            if op == "^=" and not actual.startswith(value):
                return False
            if op == "$=" and not actual.endswith(value):
                return False
        return True


class SelectorError(ValueError):
    pass


_SIMPLE_TOKEN_RE = re.compile(
    r"""
    (?P<tag>\*|[a-zA-Z][\w-]*)?
    (?P<rest>(?:\#[\w-]+|\.[\w-]+|\[[^\]]+\])*)
    """,
    re.VERBOSE,
)
_REST_PART_RE = re.compile(r"\#([\w-]+)|\.([\w-]+)|\[([^\]]+)\]")
_ATTR_RE = re.compile(r"^([\w-]+)\s*(?:(\*=|\^=|\$=|=)\s*(.*))?$")


def _parse_simple(token: str) -> SimpleSelector:
    m = _SIMPLE_TOKEN_RE.fullmatch(token)
    if not m or (m.group("tag") is None and not m.group("rest")):
        raise SelectorError(f"cannot parse selector part {token!r}")
    tag = m.group("tag")
    if tag == "*":
        tag = None
    sel_id = None
    classes: list[str] = []
    attrs: list[tuple[str, str, str]] = []
    for id_part, cls_part, attr_part in _REST_PART_RE.findall(m.group("rest")):
        if id_part:
            sel_id = id_part
        elif cls_part:
            classes.append(cls_part)
        else:
            am = _ATTR_RE.match(attr_part.strip())
            if not am:
                raise SelectorError(f"cannot parse attribute selector [{attr_part}]")
            name, op, value = am.group(1), am.group(2) or "", am.group(3) or ""
            value = value.strip()
            if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
                value = value[1:-1]
            attrs.append((name.lower(), op, value))
    return SimpleSelector(
        tag=tag.lower() if tag else None,
        id=sel_id,
        classes=tuple(classes),
        attrs=tuple(attrs),
    )


def compile_selector(selector: str) -> list[tuple[SimpleSelector, ...]]:
    chains: list[tuple[SimpleSelector, ...]] = []
    for alternative in selector.split(","):
        tokens = alternative.split()
        if not tokens:
            raise SelectorError(f"empty alternative in selector {selector!r}")
        chains.append(tuple(_parse_simple(token) for token in tokens))
    return chains


def _chain_matches(node: Element, chain: tuple[SimpleSelector, ...], *, scope: Element) -> bool:
    if not chain[-1].matches(node):
        return False
    remaining = list(chain[:-1])
    if not remaining:
        return True
    ancestor = node.parent
    while remaining and ancestor is not None and ancestor is not scope.parent:
        if remaining[-1].matches(ancestor):
            remaining.pop()
        ancestor = ancestor.parent
    return not remaining


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = Element("#document")
        self._stack = [self.root]

    def _open(self) -> Element:
        return self._stack[-1]

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        tag = tag.lower()
        if tag in _AUTOCLOSE_TAGS and self._open().tag == tag:
            self._stack.pop()
        node = Element(tag, {k.lower(): (v or "") for k, v in attrs}, parent=self._open())
        self._open().children.append(node)
        if tag not in VOID_TAGS:
            self._stack.append(node)

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        node = Element(tag.lower(), {k.lower(): (v or "") for k, v in attrs}, parent=self._open())
        self._open().children.append(node)

    def handle_endtag(self, tag: str) -> None:
        tag = tag.lower()
        if tag in VOID_TAGS:
            return
        for i in range(len(self._stack) - 1, 0, -1):
            if self._stack[i].tag == tag:
                del self._stack[i:]
                return
        # stray closing tag: ignore

    def handle_data(self, data: str) -> None:
        if data:
            self._open().children.append(data)


def parse_html(text: str) -> Element:
    builder = _TreeBuilder()
    builder.feed(text)
    builder.close()
    return builder.root
