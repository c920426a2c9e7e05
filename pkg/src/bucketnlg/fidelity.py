"""Tree-accuracy checks and distillation candidate filtering."""

from __future__ import annotations

import enum
import itertools
from dataclasses import replace
from typing import Sequence

from .config import DomainConfig
from .errors import ParseError
from .mr import MrForest, MrNode, NodeKind, canonical_form, has_structure, parse, skeleton

__all__ = ["Mode", "check_tree", "tree_accuracy", "kd_filter", "MAX_LENIENT_VARIANTS"]

# cap on scenario variants explored by lenient mode
MAX_LENIENT_VARIANTS = 4096


class Mode(str, enum.Enum):
    STRICT = "strict"
    LENIENT = "lenient"


def _structure(forest: MrForest, strip_indices: bool) -> str:
    return canonical_form(skeleton(forest, strip_indices=strip_indices))


def _droppable_groups(nodes: Sequence[MrNode], path: tuple[int, ...], out: list) -> None:
    """Collect sets of value-identical argument subtrees spread over same-label sibling acts.

    Each group is a list of (act path, argument child index) positions.
    """
    groups: dict[tuple[str, str], list[tuple[tuple[int, ...], int]]] = {}
    for i, node in enumerate(nodes):
        if node.kind is NodeKind.ACT:
            for j, arg in enumerate(node.children):
                if arg.kind is NodeKind.ARGUMENT:
                    groups.setdefault((node.label, canonical_form(arg)), []).append((path + (i,), j))
        if node.children:
            _droppable_groups(node.children, path + (i,), out)
    for positions in groups.values():
        if len({p for p, _ in positions}) > 1:
            out.append(positions)


def _drop(forest: MrForest, removed: set[tuple[tuple[int, ...], int]]) -> MrForest:
    def rebuild(node: MrNode, path: tuple[int, ...]) -> MrNode:
        kids = tuple(
            rebuild(c, path + (j,))
            for j, c in enumerate(node.children)
            if (path, j) not in removed
        )
        return replace(node, children=kids)

    return MrForest(tuple(rebuild(r, (i,)) for i, r in enumerate(forest.roots)))


def _lenient_targets(scenario: MrForest, strip_indices: bool):
    groups: list = []
    _droppable_groups(scenario.roots, (), groups)
    if not groups:
        return
    # per group: every way of dropping copies while keeping at least one
    choices = [
        [set(drop) for r in range(len(g)) for drop in itertools.combinations(g, r)]
        for g in groups
    ]
    for n, combo in enumerate(itertools.product(*choices)):
        if n >= MAX_LENIENT_VARIANTS:
            return
        removed = set().union(*combo)
        if removed:
            yield _structure(_drop(scenario, removed), strip_indices)


def check_tree(
    scenario: MrForest,
    candidate: str,
    config: DomainConfig | None = None,
    mode: Mode | str = Mode.STRICT,
    require_indices: bool = False,
) -> tuple[bool, str]:
    """Return (passed, reason)."""
    mode = Mode(mode)
    if not has_structure(candidate):
        return False, "no structural tokens"
    try:
        cand = parse(candidate, config)
    except ParseError as exc:
        return False, f"unparseable: {exc}"
    strip = not require_indices
    got = _structure(cand, strip)
    if got == _structure(scenario, strip):
        return True, "match"
    if mode is Mode.LENIENT:
        for target in _lenient_targets(scenario, strip):
            if got == target:
                return True, "match after aggregation"
    return False, "structure mismatch"


def tree_accuracy(
    scenario: MrForest,
    candidate: str,
    config: DomainConfig | None = None,
    mode: Mode | str = Mode.STRICT,
    require_indices: bool = False,
) -> bool:
    return check_tree(scenario, candidate, config, mode, require_indices)[0]


def kd_filter(
    scenario: MrForest,
    candidates: Sequence[str],
    config: DomainConfig | None = None,
    mode: Mode | str = Mode.STRICT,
    require_indices: bool = False,
) -> tuple[int, str] | None:
    """First candidate (in generator rank order) that passes the tree check."""
    for i, cand in enumerate(candidates):
        if tree_accuracy(scenario, cand, config, mode, require_indices):
            return i, cand
    return None
