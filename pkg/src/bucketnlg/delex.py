"""Partial delexicalization with uniqueness tracking, and its inverse.

Argument values are replaced by placeholders of the form ``<arg>__<suffix>``:

* Delex arguments get a uniqueness suffix (``todo__a``, ``todo__b``, ...)
  assigned in pre-order first-occurrence order over the scenario; equal
  values share a placeholder.
* NumericGroup arguments get their band name (``amount__gr1``).  A second,
  different value in the same band of the same argument becomes
  ``amount__gr1__b`` so that every placeholder still binds one value.
* Retain arguments, and numeric values outside every band, stay verbatim.

The same placeholders are pushed into the annotated reference (matching the
scenario value inside a same-named argument) and, optionally, into the query.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Mapping

from .config import DomainConfig, RuleKind
from .dataset import Example
from .errors import MissingBinding
from .mr import MrForest, MrNode, NodeKind, terminal

__all__ = [
    "Occurrence", "Binding", "DelexExample", "delexicalize", "relexicalize",
    "suffix", "PLACEHOLDER_SEP",
]

PLACEHOLDER_SEP = "__"

SCENARIO, REFERENCE, QUERY = "scenario", "reference", "query"


def suffix(i: int) -> str:
    """0 -> a, 25 -> z, 26 -> aa, 27 -> ab, ..."""
    out = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        out = chr(ord("a") + r) + out
    return out


@dataclass(frozen=True)
class Occurrence:
    """Where a placeholder sits in the delexicalized example.

    For tree fields ``path`` addresses the argument node (root index, then
    child indices) and ``offset`` the placeholder terminal among its
    children.  For the query, ``offset`` is the character start in the
    delexicalized query.  ``surface`` is the original text at that spot.
    """
    field: str
    path: tuple[int, ...]
    offset: int
    surface: str


@dataclass
class Binding:
    placeholder: str
    arg_name: str
    original_value: str
    kind: RuleKind
    group: str | None = None
    occurrences: list[Occurrence] = field(default_factory=list)

    def count(self, field_name: str) -> int:
        return sum(1 for o in self.occurrences if o.field == field_name)


@dataclass
class DelexExample:
    base: Example
    delex_scenario: MrForest
    delex_reference: MrForest | None
    delex_query: str
    bindings: list[Binding]

    def original_values(self) -> dict[str, str]:
        return {b.placeholder: b.original_value for b in self.bindings}

    def binding(self, placeholder: str) -> Binding:
        for b in self.bindings:
            if b.placeholder == placeholder:
                return b
        raise KeyError(placeholder)

    @property
    def flagged(self) -> list[Binding]:
        """Bindings whose value was not found in the reference (likely inflected)."""
        if self.base.reference is None:
            return []
        return [b for b in self.bindings if b.count(REFERENCE) == 0]


# --- delexicalize ----------------------------------------------------------

class _Assigner:
    def __init__(self, config: DomainConfig):
        self.config = config
        self.by_value: dict[tuple[str, str], Binding] = {}
        self.per_slot: dict[tuple[str, str | None], int] = {}
        self.bindings: list[Binding] = []

    def bind(self, arg: str, value: str) -> Binding | None:
        key = (arg, value)
        if key in self.by_value:
            return self.by_value[key]
        rule = self.config.rule_for(arg)
        if rule.kind is RuleKind.RETAIN:
            return None
        group = None
        if rule.kind is RuleKind.NUMERIC_GROUP:
            group = rule.group_of(value)
            if group is None:
                return None
        n = self.per_slot.get((arg, group), 0)
        self.per_slot[(arg, group)] = n + 1
        if group is None:
            ph = f"{arg}{PLACEHOLDER_SEP}{suffix(n)}"
        elif n == 0:
            ph = f"{arg}{PLACEHOLDER_SEP}{group}"
        else:
            ph = f"{arg}{PLACEHOLDER_SEP}{group}{PLACEHOLDER_SEP}{suffix(n)}"
        b = Binding(ph, arg, value, rule.kind, group)
        self.by_value[key] = b
        self.bindings.append(b)
        return b


def _delex_scenario(node: MrNode, path: tuple[int, ...], asg: _Assigner) -> MrNode:
    if node.kind is NodeKind.ARGUMENT and any(c.is_terminal for c in node.children):
        value = node.value()
        b = asg.bind(node.label, value)
        if b is not None:
            kids: list[MrNode] = []
            offset = None
            for c in node.children:
                if c.is_terminal:
                    if offset is None:
                        offset = len(kids)
                        kids.append(terminal(b.placeholder))
                    continue
                kids.append(c)
            b.occurrences.append(Occurrence(SCENARIO, path, offset, value))
            node = replace(node, children=tuple(kids))
    if node.is_terminal or not node.children:
        return node
    return replace(node, children=tuple(
        c if c.is_terminal else _delex_scenario(c, path + (i,), asg)
        for i, c in enumerate(node.children)
    ))


def _find_run(children: tuple[MrNode, ...], words: list[str]) -> int | None:
    n = len(words)
    low = [w.lower() for w in words]
    for i in range(len(children) - n + 1):
        window = children[i:i + n]
        if all(c.is_terminal and c.text.lower() == w for c, w in zip(window, low)):
            return i
    return None


def _delex_reference(node: MrNode, path: tuple[int, ...], by_arg: dict[str, list[Binding]]) -> MrNode:
    if node.is_terminal:
        return node
    kids = tuple(
        c if c.is_terminal else _delex_reference(c, path + (i,), by_arg)
        for i, c in enumerate(node.children)
    )
    if node.kind is NodeKind.ARGUMENT and node.label in by_arg:
        taken: set[int] = set()
        for b in by_arg[node.label]:  # longest values first
            words = b.original_value.split()
            start = _find_run(kids, words)
            if start is None:
                continue
            surface = " ".join(c.text for c in kids[start:start + len(words)])
            kids = kids[:start] + (terminal(b.placeholder),) + kids[start + len(words):]
            taken.add(start)
            b.occurrences.append(Occurrence(REFERENCE, path, start, surface))
        if taken:
            # earlier replacements shift later offsets; recompute from the final children
            _fix_offsets(kids, path, by_arg[node.label])
    return replace(node, children=kids)


def _fix_offsets(kids: tuple[MrNode, ...], path: tuple[int, ...], bindings: list[Binding]) -> None:
    for b in bindings:
        for j, occ in enumerate(b.occurrences):
            if occ.field != REFERENCE or occ.path != path:
                continue
            for k, c in enumerate(kids):
                if c.is_terminal and c.text == b.placeholder:
                    b.occurrences[j] = replace(occ, offset=k)
                    break


def _delex_query(query: str, bindings: list[Binding]) -> tuple[str, list[tuple[Binding, int, str]]]:
    cands = [b for b in bindings if b.kind is RuleKind.DELEX and b.original_value]
    if not cands or not query:
        return query, []
    by_low: dict[str, Binding] = {}
    for b in cands:
        by_low.setdefault(b.original_value.lower(), b)
    alts = sorted(by_low, key=lambda v: (-len(v), v))
    pattern = re.compile(
        r"(?<!\w)(?:" + "|".join(re.escape(v) for v in alts) + r")(?!\w)", re.IGNORECASE
    )
    out: list[str] = []
    hits: list[tuple[Binding, int, str]] = []
    pos = 0
    length = 0
    for m in pattern.finditer(query):
        chunk = query[pos:m.start()]
        out.append(chunk)
        length += len(chunk)
        b = by_low[m.group(0).lower()]
        hits.append((b, length, m.group(0)))
        out.append(b.placeholder)
        length += len(b.placeholder)
        pos = m.end()
    out.append(query[pos:])
    return "".join(out), hits


def delexicalize(example: Example, config: DomainConfig, include_query: bool = True) -> DelexExample:
    asg = _Assigner(config)
    scen = MrForest(tuple(
        r if r.is_terminal else _delex_scenario(r, (i,), asg)
        for i, r in enumerate(example.scenario.roots)
    ))

    ref = None
    if example.reference is not None:
        by_arg: dict[str, list[Binding]] = {}
        for b in asg.bindings:
            by_arg.setdefault(b.arg_name, []).append(b)
        for lst in by_arg.values():
            lst.sort(key=lambda b: -len(b.original_value.split()))
        ref = MrForest(tuple(
            r if r.is_terminal else _delex_reference(r, (i,), by_arg)
            for i, r in enumerate(example.reference.roots)
        ))

    query = example.query
    if include_query:
        query, hits = _delex_query(example.query, asg.bindings)
        for b, start, surface in hits:
            b.occurrences.append(Occurrence(QUERY, (), start, surface))
    return DelexExample(example, scen, ref, query, asg.bindings)


# --- relexicalize ----------------------------------------------------------

def _cased(surface: str, original: str, new: str) -> str:
    """Carry the surface casing of ``original`` over to ``new``."""
    if new == original:
        return surface
    if surface == original:
        return new
    if surface.isupper() and not original.isupper():
        return new.upper()
    if surface[:1].isupper() and not original[:1].isupper():
        return new[:1].upper() + new[1:]
    return new


def _apply_tree(forest: MrForest, edits: dict[tuple[int, ...], list[tuple[int, str]]]) -> MrForest:
    def rebuild(node: MrNode, path: tuple[int, ...]) -> MrNode:
        kids = [c if c.is_terminal else rebuild(c, path + (i,)) for i, c in enumerate(node.children)]
        for offset, text in sorted(edits.get(path, ()), reverse=True):
            kids[offset:offset + 1] = [terminal(w) for w in text.split()]
        return replace(node, children=tuple(kids))

    return MrForest(tuple(
        r if r.is_terminal else rebuild(r, (i,)) for i, r in enumerate(forest.roots)
    ))


def relexicalize(dex: DelexExample, values: Mapping[str, str]) -> Example:
    for b in dex.bindings:
        if b.placeholder not in values:
            raise MissingBinding(b.placeholder)
    tree_edits: dict[str, dict[tuple[int, ...], list[tuple[int, str]]]] = {SCENARIO: {}, REFERENCE: {}}
    query_edits: list[tuple[int, str, str]] = []
    for b in dex.bindings:
        new = " ".join(str(values[b.placeholder]).split())
        for occ in b.occurrences:
            text = _cased(occ.surface, b.original_value, new)
            if occ.field == QUERY:
                query_edits.append((occ.offset, b.placeholder, text))
            else:
                tree_edits[occ.field].setdefault(occ.path, []).append((occ.offset, text))

    query = dex.delex_query
    if query_edits:
        parts: list[str] = []
        pos = 0
        for start, ph, text in sorted(query_edits):
            parts.append(query[pos:start])
            parts.append(text)
            pos = start + len(ph)
        parts.append(query[pos:])
        query = "".join(parts)

    ref = None
    if dex.delex_reference is not None:
        ref = _apply_tree(dex.delex_reference, tree_edits[REFERENCE])
    return replace(
        dex.base,
        query=query,
        scenario=_apply_tree(dex.delex_scenario, tree_edits[SCENARIO]),
        reference=ref,
    )
