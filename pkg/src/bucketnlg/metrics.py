"""Corpus BLEU, per-experiment aggregation, robustness and eval-set selection."""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .bucketing import Granularity, bucket_key
from .config import DomainConfig
from .dataset import Example
from .errors import EmptyCorpus, MissingCandidates, TooFewRuns
from .mr import TokenKind, tokenize

__all__ = [
    "bleu_tokens", "modified_precisions", "corpus_bleu", "EvalRecord", "RunReport", "aggregate",
    "robustness", "select_differentiating",
]

MAX_ORDER = 4


def bleu_tokens(text: str, keep_structure: bool = False) -> list[str]:
    """Whitespace tokens of a response; bracket tokens are dropped unless ``keep_structure``."""
    if keep_structure:
        return [str(t) for t in tokenize(text)]
    return [t.text for t in tokenize(text) if t.kind is TokenKind.TERM]


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _corpus_counts(pairs):
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    cand_len = ref_len = 0
    for cand, ref in pairs:
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, MAX_ORDER + 1):
            c, r = _ngrams(cand, n), _ngrams(ref, n)
            matches[n - 1] += sum(min(k, r[g]) for g, k in c.items())
            totals[n - 1] += sum(c.values())
    return matches, totals, cand_len, ref_len


def modified_precisions(pairs: Iterable[tuple[Sequence[str], Sequence[str]]]) -> list[tuple[int, int]]:
    """Clipped (matches, total) n-gram counts for n = 1..4 over the corpus."""
    matches, totals, _, _ = _corpus_counts(list(pairs))
    return list(zip(matches, totals))


def corpus_bleu(pairs: Iterable[tuple[Sequence[str], Sequence[str]]]) -> float:
    """Corpus-level BLEU-4 with one reference per candidate and no smoothing."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyCorpus("BLEU needs at least one (candidate, reference) pair")
    matches, totals, cand_len, ref_len = _corpus_counts(pairs)
    if cand_len == 0 or min(matches) == 0:
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matches, totals)) / MAX_ORDER
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_p)


@dataclass
class EvalRecord:
    example_id: str
    experiment_id: str
    candidate_text: str
    tree_pass: bool = False
    reason: str = ""


@dataclass
class RunReport:
    experiment_id: str
    tree_accuracy: float
    bleu: float | None
    n_examples: int
    passes: dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "tree_accuracy": self.tree_accuracy,
            "bleu": self.bleu,
            "n_examples": self.n_examples,
            "passes": self.passes,
        }


def aggregate(
    records: Sequence[EvalRecord],
    references: Mapping[str, str] | None = None,
    expected_ids: Iterable[str] | None = None,
    keep_structure: bool = False,
) -> RunReport:
    """Tree accuracy (percent) and, given references, corpus BLEU for one experiment."""
    if not records:
        raise MissingCandidates(expected_ids or [])
    experiments = {r.experiment_id for r in records}
    if len(experiments) != 1:
        raise ValueError(f"records span several experiments: {sorted(experiments)}")
    ids = [r.example_id for r in records]
    if len(set(ids)) != len(ids):
        dupes = sorted(i for i, c in Counter(ids).items() if c > 1)
        raise ValueError(f"duplicate records for {dupes[:5]}")
    if expected_ids is not None:
        missing = set(expected_ids) - set(ids)
        if missing:
            raise MissingCandidates(missing)
    passed = sum(r.tree_pass for r in records)
    bleu = None
    if references is not None:
        scored = [r for r in records if references.get(r.example_id) is not None]
        if scored:
            bleu = corpus_bleu(
                (bleu_tokens(r.candidate_text, keep_structure),
                 bleu_tokens(references[r.example_id], keep_structure))
                for r in scored
            )
    return RunReport(
        experiment_id=records[0].experiment_id,
        tree_accuracy=100.0 * passed / len(records),
        bleu=bleu,
        n_examples=len(records),
        passes={r.example_id: r.tree_pass for r in sorted(records, key=lambda r: r.example_id)},
    )


def robustness(reports: Sequence[RunReport | float]) -> tuple[float, float]:
    """(best tree accuracy, population standard deviation) over repeated runs."""
    accs = [r.tree_accuracy if isinstance(r, RunReport) else float(r) for r in reports]
    if len(accs) < 2:
        raise TooFewRuns(f"robustness needs at least 2 runs, got {len(accs)}")
    return max(accs), statistics.pstdev(accs)


def select_differentiating(
    test_set: Sequence[Example],
    pass_matrix: Mapping[str, Mapping[str, bool]],
    config: DomainConfig,
    k: int = 150,
) -> list[str]:
    """Hardest still-solvable example per FB bucket, hardest buckets first.

    Within a bucket the example with the fewest passing experiments (at
    least one) wins; ties go to the smaller example id.  Buckets are ranked
    by that count, ties again broken by example id.
    """
    best: dict[str, tuple[int, str]] = {}
    for ex in test_set:
        if ex.id not in pass_matrix:
            raise MissingCandidates([ex.id])
        n_pass = sum(bool(v) for v in pass_matrix[ex.id].values())
        if n_pass == 0:
            continue
        key = bucket_key(ex, config, Granularity.FB).key
        cand = (n_pass, ex.id)
        if key not in best or cand < best[key]:
            best[key] = cand
    ranked = sorted(best.values())
    return [ex_id for _, ex_id in ranked[:k]]
