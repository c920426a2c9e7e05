"""Flattened tree-structured meaning representations.

The notation is a bracketed token stream such as::

    CONTRAST_1[ INFORM_2[ condition[ sun ] ] INFORM_3[ condition[ rain ] ] ]

A token ending in ``[`` opens a node labelled by the text before the
bracket, ``]`` closes the innermost open node, anything else is a terminal
word.  Scenarios carry terminals only under arguments; annotated responses
interleave surface words anywhere.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import EmptyLabel, UnbalancedBrackets

__all__ = [
    "TokenKind", "Token", "NodeKind", "MrNode", "MrForest",
    "tokenize", "parse", "serialize", "skeleton", "canonical_form",
    "terminal", "split_index", "has_structure",
]

# used when no DomainConfig is supplied
DEFAULT_RELATIONS = frozenset({"CONTRAST", "JUSTIFY", "JOIN"})

_INDEX_RE = re.compile(r"^(.*?)_(\d+)$")


class TokenKind(enum.Enum):
    OPEN = "open"
    CLOSE = "close"
    TERM = "term"


class Token(NamedTuple):
    kind: TokenKind
    text: str  # label for OPEN, word for TERM, "]" for CLOSE

    def __str__(self) -> str:
        if self.kind is TokenKind.OPEN:
            return self.text + "["
        return self.text


def tokenize(text: str) -> list[Token]:
    """Lex ``text`` into OPEN/CLOSE/TERM tokens.

    A standalone ``[`` directly after a word is fused with it, so
    ``"temp_low ["`` lexes the same as ``"temp_low["``.
    """
    tokens: list[Token] = []
    for raw in text.split():
        if raw == "]":
            tokens.append(Token(TokenKind.CLOSE, "]"))
        elif raw == "[" and tokens and tokens[-1].kind is TokenKind.TERM:
            tokens[-1] = Token(TokenKind.OPEN, tokens[-1].text)
        elif raw.endswith("["):
            tokens.append(Token(TokenKind.OPEN, raw[:-1]))
        else:
            tokens.append(Token(TokenKind.TERM, raw))
    return tokens


def has_structure(text: str) -> bool:
    return any(tok.kind is not TokenKind.TERM for tok in tokenize(text))


class NodeKind(enum.Enum):
    RELATION = "DiscourseRelation"
    ACT = "DialogAct"
    ARGUMENT = "Argument"
    TERMINAL = "Terminal"


@dataclass(frozen=True)
class MrNode:
    kind: NodeKind
    label: str = ""
    index: int | None = None
    children: tuple[MrNode, ...] = ()
    text: str = ""

    @property
    def full_label(self) -> str:
        if self.index is None:
            return self.label
        return f"{self.label}_{self.index}"

    @property
    def is_terminal(self) -> bool:
        return self.kind is NodeKind.TERMINAL

    def value_tokens(self) -> list[str]:
        """Words directly under this node, in order."""
        return [c.text for c in self.children if c.is_terminal]

    def value(self) -> str:
        return " ".join(self.value_tokens())

    def walk(self) -> Iterator[MrNode]:
        yield self
        for child in self.children:
            yield from child.walk()


def terminal(text: str) -> MrNode:
    return MrNode(NodeKind.TERMINAL, text=text)


@dataclass(frozen=True)
class MrForest:
    roots: tuple[MrNode, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self) -> int:
        return len(self.roots)

    def walk(self) -> Iterator[MrNode]:
        for root in self.roots:
            yield from root.walk()

    def __str__(self) -> str:
        return serialize(self)


def split_index(label: str, config=None) -> tuple[str, int | None, NodeKind]:
    """Split ``INFORM_2`` into ``("INFORM", 2, ACT)``.

    Only relation and act labels carry indices; an argument name such as
    ``amount_remaining`` is never split.
    """
    m = _INDEX_RE.match(label)
    base, index = (m.group(1), int(m.group(2))) if m else (label, None)
    if config is None:
        relations, is_act = DEFAULT_RELATIONS, _looks_like_act
    else:
        relations = config.relation_labels
        is_act = config.act_labels.__contains__
    if base in relations:
        return base, index, NodeKind.RELATION
    if is_act(base):
        return base, index, NodeKind.ACT
    if m and (label in relations or is_act(label)):
        # a label whose literal name ends in _<digits>
        kind = NodeKind.RELATION if label in relations else NodeKind.ACT
        return label, None, kind
    return label, None, NodeKind.ARGUMENT


def _looks_like_act(base: str) -> bool:
    return base.isupper() and any(ch.isalpha() for ch in base)


def parse(text: str, config=None) -> MrForest:
    """Parse flattened MR text.

    ``config`` supplies ``relation_labels`` and ``act_labels``; without it,
    upper-case labels are acts and CONTRAST/JUSTIFY/JOIN are relations.
    """
    tokens = tokenize(text)
    # stack of (token position, label, index, kind, children list)
    stack: list[tuple[int, str, int | None, NodeKind, list[MrNode]]] = []
    roots: list[MrNode] = []
    for pos, tok in enumerate(tokens):
        if tok.kind is TokenKind.OPEN:
            if not tok.text:
                raise EmptyLabel(pos)
            base, index, kind = split_index(tok.text, config)
            stack.append((pos, base, index, kind, []))
        elif tok.kind is TokenKind.CLOSE:
            if not stack:
                raise UnbalancedBrackets(pos, "unexpected ']'")
            _, base, index, kind, children = stack.pop()
            node = MrNode(kind, base, index, tuple(children))
            (stack[-1][4] if stack else roots).append(node)
        else:
            (stack[-1][4] if stack else roots).append(terminal(tok.text))
    if stack:
        raise UnbalancedBrackets(stack[-1][0], "unclosed node")
    return MrForest(tuple(roots))


def _emit(node: MrNode, out: list[str]) -> None:
    if node.is_terminal:
        out.append(node.text)
        return
    out.append(node.full_label + "[")
    for child in node.children:
        _emit(child, out)
    out.append("]")


def serialize(forest: MrForest | MrNode | Iterable[MrNode]) -> str:
    if isinstance(forest, MrNode):
        nodes: Iterable[MrNode] = (forest,)
    elif isinstance(forest, MrForest):
        nodes = forest.roots
    else:
        nodes = forest
    out: list[str] = []
    for node in nodes:
        _emit(node, out)
    return " ".join(out)


def _skeleton_node(node: MrNode, strip_indices: bool) -> MrNode:
    kids = tuple(_skeleton_node(c, strip_indices) for c in node.children if not c.is_terminal)
    return replace(node, children=kids, index=None if strip_indices else node.index)


def skeleton(forest: MrForest, strip_indices: bool = False) -> MrForest:
    """Drop every terminal (and optionally every act/relation index)."""
    return MrForest(tuple(
        _skeleton_node(r, strip_indices) for r in forest.roots if not r.is_terminal
    ))


def _units(children: Sequence[MrNode], bare: bool) -> list[str]:
    # a run of adjacent terminals is one ordered unit ("buy milk" != "milk buy");
    # with several runs each is wrapped as "[ ... ]" (labels are never empty)
    units: list[str] = []
    runs: list[list[str]] = []
    prev_terminal = False
    for c in children:
        if c.is_terminal:
            if not prev_terminal:
                runs.append([])
            runs[-1].append(c.text)
        else:
            units.append(_canonical(c, bare))
        prev_terminal = c.is_terminal
    if len(runs) == 1:
        units.append(" ".join(runs[0]))
    else:
        units.extend(f"[ {' '.join(r)} ]" for r in runs)
    return units


def _canonical(node: MrNode, bare: bool) -> str:
    if node.is_terminal:
        return node.text
    inner = sorted(_units(node.children, bare))
    if not inner:
        if bare and node.kind is NodeKind.ARGUMENT:
            return node.full_label
        return node.full_label + "[ ]"
    return f"{node.full_label}[ {' '.join(inner)} ]"


def canonical_form(forest: MrForest | MrNode | Sequence[MrNode], bare_leaves: bool = False) -> str:
    """Serialization with every sibling list sorted by its members' canonical strings.

    Two forests have equal canonical forms iff they are equal up to sibling
    permutations at every level, where a run of adjacent terminals moves as
    one unit and keeps its internal word order.  With ``bare_leaves``,
    childless arguments print as their bare name (``todo`` not ``todo[ ]``).
    """
    if isinstance(forest, MrNode):
        return _canonical(forest, bare_leaves)
    roots = forest.roots if isinstance(forest, MrForest) else forest
    return " ".join(sorted(_units(roots, bare_leaves)))
