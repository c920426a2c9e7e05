"""Dynamic data augmentation: epoch-wise relexicalization of delexicalized examples."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .config import DomainConfig, IntRange, RuleKind
from .dataset import Example
from .delex import Binding, DelexExample, relexicalize
from .errors import EmptyPool, PoolExhausted
from .seeding import DEFAULT_SEED, rng_for

__all__ = ["AugmentationStream", "augment_once", "stream", "materialize", "StreamReport", "MAX_RETRIES"]

MAX_RETRIES = 16


def _pool_for(binding: Binding, config: DomainConfig) -> list[str]:
    pool = config.value_pools.get(binding.arg_name, ())
    if binding.kind is not RuleKind.NUMERIC_GROUP:
        values = config.pool_values(binding.arg_name)
    else:
        band = config.rule_for(binding.arg_name).band(binding.group)
        values = []
        for item in pool:
            if isinstance(item, IntRange):
                lo = max(item.lo, band.lo)
                hi = item.hi if band.hi is None else min(item.hi, band.hi)
                values.extend(str(n) for n in range(lo, hi + 1))
            elif config.rule_for(binding.arg_name).group_of(item) == binding.group:
                values.append(item)
    if not values:
        raise EmptyPool(binding.placeholder)
    return values


def augment_once(dex: DelexExample, config: DomainConfig, rng: random.Random) -> Example:
    """Relexicalize ``dex`` with one fresh value per placeholder.

    Placeholders sharing an argument name (and band) receive pairwise
    distinct values, enforced by bounded rejection sampling.
    """
    if not dex.bindings:
        return dex.base
    values: dict[str, str] = {}
    slots: dict[tuple[str, str | None], list[Binding]] = {}
    for b in dex.bindings:
        slots.setdefault((b.arg_name, b.group), []).append(b)
    for (arg, _), group in slots.items():
        pool = _pool_for(group[0], config)
        distinct = len(set(pool))
        if distinct < len(group):
            raise PoolExhausted(arg, len(group), distinct)
        used: set[str] = set()
        for b in group:
            for _ in range(MAX_RETRIES):
                v = rng.choice(pool)
                if v not in used:
                    break
            else:
                raise PoolExhausted(arg, len(group), distinct)
            used.add(v)
            values[b.placeholder] = v
    return relexicalize(dex, values)


@dataclass
class AugmentationStream:
    source: Sequence[DelexExample]
    config: DomainConfig
    epochs: int | None = 1  # None streams forever
    seed: int = DEFAULT_SEED


@dataclass
class StreamReport:
    emitted: int = 0
    # example ids whose reference kept an unmatched (likely inflected) value
    flagged_ids: list[str] = field(default_factory=list)


def stream(spec: AugmentationStream, report: StreamReport | None = None) -> Iterator[tuple[int, Example]]:
    """Yield ``(epoch, instance)``; each draw depends only on (seed, epoch, example id)."""
    if report is not None:
        report.flagged_ids = sorted(d.base.id for d in spec.source if d.flagged)
    epochs = itertools.count() if spec.epochs is None else range(spec.epochs)
    for epoch in epochs:
        for dex in spec.source:
            inst = augment_once(dex, spec.config, rng_for(spec.seed, epoch, dex.base.id))
            if report is not None:
                report.emitted += 1
            yield epoch, inst


def materialize(spec: AugmentationStream, n: int) -> list[tuple[int, Example]]:
    """First ``n`` instances of an unbounded stream over ``spec.source``."""
    if n and not spec.source:
        raise ValueError("cannot materialize from an empty source")
    unbounded = AugmentationStream(spec.source, spec.config, None, spec.seed)
    return list(itertools.islice(stream(unbounded), n))
