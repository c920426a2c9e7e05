"""Bucket keys at four granularities and dataset partitioning.

* CB keeps relations, acts and the *names* of arguments directly under them.
* MB keeps the whole argument structure, dropping values except for the
  configured value-retaining arguments.
* FB is the canonical form of the delexicalized scenario.
* FBQ is FB plus the lower-cased delexicalized query.

Leaf arguments render as bare names (``INFORM_2[ todo date_time[ time ] ]``)
and every key is sibling-order invariant.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable

from .config import DomainConfig
from .dataset import Example
from .delex import delexicalize
from .mr import MrForest, MrNode, NodeKind, canonical_form

__all__ = [
    "Granularity", "BucketKey", "QUERY_SEP",
    "cb_hash", "mb_hash", "fb_hash", "fbq_hash", "bucket_key", "partition", "size_histogram",
]

# str.split() treats \x1f as whitespace, so it can never survive inside a
# normalized query or a serialized tree
QUERY_SEP = "\x1f"


class Granularity(str, enum.Enum):
    CB = "cb"
    MB = "mb"
    FB = "fb"
    FBQ = "fbq"

    @classmethod
    def parse(cls, text: str) -> "Granularity":
        return cls(text.lower())


@dataclass(frozen=True, order=True)
class BucketKey:
    granularity: Granularity
    key: str

    def __str__(self) -> str:
        return self.key.replace(QUERY_SEP, " || ")


def _cb_node(node: MrNode) -> MrNode:
    if node.kind is NodeKind.ARGUMENT:
        return replace(node, children=())
    return replace(node, children=tuple(_cb_node(c) for c in node.children if not c.is_terminal))


def _mb_node(node: MrNode, retaining: frozenset[str]) -> MrNode:
    if node.kind is NodeKind.ARGUMENT:
        if node.label in retaining and node.children:
            return replace(node, children=tuple(
                c if c.is_terminal else _mb_node(c, retaining) for c in node.children
            ))
        sub = tuple(_mb_node(c, retaining) for c in node.children if not c.is_terminal)
        return replace(node, children=sub)
    return replace(node, children=tuple(_mb_node(c, retaining) for c in node.children if not c.is_terminal))


def _roots(forest: MrForest) -> Iterable[MrNode]:
    return (r for r in forest.roots if not r.is_terminal)


def cb_hash(example: Example, config: DomainConfig) -> BucketKey:
    return BucketKey(Granularity.CB, canonical_form([_cb_node(r) for r in _roots(example.scenario)], bare_leaves=True))


def mb_hash(example: Example, config: DomainConfig) -> BucketKey:
    retaining = config.value_retaining_for_mb
    return BucketKey(Granularity.MB, canonical_form([_mb_node(r, retaining) for r in _roots(example.scenario)], bare_leaves=True))


def fb_hash(example: Example, config: DomainConfig) -> BucketKey:
    dex = delexicalize(example, config, include_query=False)
    return BucketKey(Granularity.FB, canonical_form(dex.delex_scenario))


def fbq_hash(example: Example, config: DomainConfig) -> BucketKey:
    dex = delexicalize(example, config, include_query=True)
    query = " ".join(dex.delex_query.lower().split())
    return BucketKey(Granularity.FBQ, canonical_form(dex.delex_scenario) + QUERY_SEP + query)


_HASHERS = {
    Granularity.CB: cb_hash,
    Granularity.MB: mb_hash,
    Granularity.FB: fb_hash,
    Granularity.FBQ: fbq_hash,
}


def bucket_key(example: Example, config: DomainConfig, granularity: Granularity | str) -> BucketKey:
    return _HASHERS[Granularity.parse(granularity) if isinstance(granularity, str) else granularity](
        example, config
    )


def partition(
    dataset: Iterable[Example], config: DomainConfig, granularity: Granularity | str
) -> dict[BucketKey, list[str]]:
    """Map each bucket key to the sorted ids of its examples; keys come out sorted."""
    buckets: dict[BucketKey, list[str]] = {}
    for ex in dataset:
        buckets.setdefault(bucket_key(ex, config, granularity), []).append(ex.id)
    return {k: sorted(buckets[k]) for k in sorted(buckets)}


def size_histogram(buckets: dict[BucketKey, list[str]]) -> dict[int, int]:
    """bucket size -> number of buckets of that size."""
    return dict(sorted(Counter(len(v) for v in buckets.values()).items()))
