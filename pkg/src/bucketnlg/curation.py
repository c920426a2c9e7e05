"""Bucket-aware sampling, dataset merging and data-reduction accounting."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .bucketing import BucketKey, Granularity, partition
from .config import DomainConfig
from .dataset import ORIGINS, Example
from .errors import DuplicateId, EmptyDataset, InvalidCounts
from .seeding import DEFAULT_SEED, rng_for

__all__ = ["SamplePlan", "parse_plan", "sample", "merge", "data_reduction"]

_PLAN_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*per\s*(cb|mb|fbq|fb)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class SamplePlan:
    granularity: Granularity
    per_bucket: int | None = None
    bucket_fraction: float | None = None
    seed: int = DEFAULT_SEED
    sources: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if (self.per_bucket is None) == (self.bucket_fraction is None):
            raise ValueError("set exactly one of per_bucket / bucket_fraction")
        if self.per_bucket is not None and self.per_bucket < 1:
            raise ValueError("per_bucket must be a positive integer")
        if self.bucket_fraction is not None and not 0 < self.bucket_fraction <= 1:
            raise ValueError("bucket_fraction must lie in (0, 1]")

    @property
    def label(self) -> str:
        amount = self.per_bucket if self.per_bucket is not None else self.bucket_fraction
        return f"{amount}Per{self.granularity.value.upper()}"

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity.value,
            "per_bucket": self.per_bucket,
            "bucket_fraction": self.bucket_fraction,
            "seed": self.seed,
            "sources": [list(s) for s in self.sources],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SamplePlan":
        return cls(
            granularity=Granularity.parse(d["granularity"]),
            per_bucket=d.get("per_bucket"),
            bucket_fraction=d.get("bucket_fraction"),
            seed=int(d["seed"]),
            sources=tuple(tuple(s) for s in d.get("sources", ())),
        )


def parse_plan(text: str, seed: int = DEFAULT_SEED, sources=()) -> SamplePlan:
    """Parse labels like ``1PerFB``, ``5PerMB`` or ``0.25PerFB``.

    Whole numbers are examples per bucket; fractions below one select that
    share of the buckets, one example each.
    """
    m = _PLAN_RE.match(text)
    if not m:
        raise ValueError(f"unrecognized plan {text!r}; expected e.g. 1PerFB or 0.25PerFB")
    amount, gran = m.group(1), Granularity.parse(m.group(2))
    if "." in amount and float(amount) < 1:
        return SamplePlan(gran, bucket_fraction=float(amount), seed=seed, sources=tuple(sources))
    if float(amount) != int(float(amount)):
        raise ValueError(f"per-bucket count must be whole: {amount}")
    return SamplePlan(gran, per_bucket=int(float(amount)), seed=seed, sources=tuple(sources))


def _ceil_fraction(f: float, n: int) -> int:
    # Fraction(str) avoids 0.1 * 30 -> 3.0000000000000004 -> 4
    return math.ceil(Fraction(repr(f)) * n)


def sample(dataset: Sequence[Example], config: DomainConfig, plan: SamplePlan) -> list[Example]:
    if not dataset:
        raise EmptyDataset("cannot sample from an empty dataset")
    by_id = {ex.id: ex for ex in dataset}
    buckets = partition(dataset, config, plan.granularity)

    chosen: list[tuple[BucketKey, str]] = []
    if plan.per_bucket is not None:
        for key, ids in buckets.items():
            rng = rng_for(plan.seed, key.key)
            picks = rng.sample(ids, min(plan.per_bucket, len(ids)))
            chosen.extend((key, i) for i in picks)
    else:
        keys = list(buckets)
        k = _ceil_fraction(plan.bucket_fraction, len(keys))
        selected = rng_for(plan.seed, "bucket-selection").sample(keys, k)
        for key in selected:
            ids = buckets[key]
            chosen.append((key, rng_for(plan.seed, key.key).choice(ids)))
    chosen.sort()
    return [by_id[i] for _, i in chosen]


def merge(sources: Iterable[tuple]) -> list[Example]:
    """Concatenate datasets, namespacing ids as ``<domain>/<id>``.

    Each source is ``(domain, examples)`` or ``(domain, examples, origin)``;
    a given origin overrides the examples' own tag.
    """
    out: list[Example] = []
    seen: set[str] = set()
    for src in sources:
        domain, examples = src[0], src[1]
        origin = src[2] if len(src) > 2 else None
        if origin is not None and origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}")
        local: set[str] = set()
        for ex in examples:
            if ex.id in local:
                raise DuplicateId(domain, ex.id)
            local.add(ex.id)
            new_id = f"{domain}/{ex.id}"
            if new_id in seen:
                raise DuplicateId(domain, new_id)
            seen.add(new_id)
            out.append(replace(ex, id=new_id, origin=origin or ex.origin))
    return out


def data_reduction(full_size: int, sampled_size: int) -> float:
    """Percentage of the full training set left unused, to one decimal."""
    if full_size <= 0 or not 0 <= sampled_size <= full_size:
        raise InvalidCounts(f"need 0 <= sampled ({sampled_size}) <= full ({full_size}), full > 0")
    return round(100.0 * (1.0 - sampled_size / full_size), 1)
