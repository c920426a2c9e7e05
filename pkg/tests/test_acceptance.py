"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (also collected into the
terminal summary).  Criteria that need the published datasets read them from
``$BUCKETNLG_DATA_DIR/<domain>/{train,val,test}.tsv``; the column mapping can
be overridden with ``$BUCKETNLG_DATA_MAPPING`` (default
``id=0,query=1,scenario=2,reference=3``).  Without the data those criteria
fail and say why.
"""

from __future__ import annotations

import io
import json
import os
import random
import time
from pathlib import Path

import pytest

from bucketnlg.bucketing import Granularity, bucket_key, partition
from bucketnlg.cli import main
from bucketnlg.config import SHIPPED_DOMAINS, shipped_config
from bucketnlg.curation import data_reduction
from bucketnlg.dataset import example_from_record, import_raw, parse_mapping
from bucketnlg.dda import AugmentationStream, stream
from bucketnlg.delex import delexicalize, relexicalize
from bucketnlg.fidelity import kd_filter, tree_accuracy
from bucketnlg.metrics import corpus_bleu, select_differentiating
from bucketnlg.mr import NodeKind, canonical_form, has_structure, parse, serialize, skeleton

from bleu_oracle import oracle_bleu
from conftest import WEEKEND_REFERENCE, WEEKEND_SCENARIO
from synth import forests_equal_modulo_order, mutate, random_dataset, random_forest, shuffle_forest

RESULTS: list[str] = []

PUBLISHED_COUNTS = {
    #            train  CB    MB    FBQ    FB     val   test
    "weather": (25390, 2240, 6406, 20343, 15456, 3078, 3121),
    "reminder": (9716, 68, 562, 1907, 739, 2794, 1397),
    "time": (5530, 18, 288, 863, 330, 1529, 790),
    "alarm": (7163, 26, 126, 286, 188, 2024, 1024),
}
SPLITS = ("train", "val", "test")
DEFAULT_MAPPING = "id=0,query=1,scenario=2,reference=3"


def record(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail}"
    RESULTS.append(line)
    print(line)


def _data_dir() -> Path | None:
    d = os.environ.get("BUCKETNLG_DATA_DIR")
    return Path(d) if d and Path(d).is_dir() else None


_cache: dict = {}


def load_split(domain: str, split: str):
    """(examples, import report) for one published split, or None when absent."""
    root = _data_dir()
    if root is None:
        return None
    key = (domain, split)
    if key not in _cache:
        path = next((p for p in (root / domain / f"{split}.tsv", root / domain.capitalize() / f"{split}.tsv")
                     if p.is_file()), None)
        if path is None:
            return None
        mapping = parse_mapping(os.environ.get("BUCKETNLG_DATA_MAPPING", DEFAULT_MAPPING))
        _cache[key] = import_raw(path, mapping, shipped_config(domain), treenlg=True)
    return _cache[key]


NO_DATA = "published datasets not available (set BUCKETNLG_DATA_DIR)"


def test_criterion_01_ingestion_counts():
    if _data_dir() is None:
        record(1, False, NO_DATA)
        pytest.fail(NO_DATA)
    t0 = time.perf_counter()
    problems = []
    for domain, row in PUBLISHED_COUNTS.items():
        expected = dict(zip(SPLITS, (row[0], row[5], row[6])))
        for split in SPLITS:
            got = load_split(domain, split)
            n = None if got is None else len(got[0])
            if n != expected[split]:
                problems.append(f"{domain}/{split}: {n} != {expected[split]}")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 30
    record(1, ok, f"split sizes {'match' if not problems else problems}; {elapsed:.1f}s (< 30s)")
    assert ok


def test_criterion_02_bucket_counts():
    if _data_dir() is None:
        record(2, False, NO_DATA)
        pytest.fail(NO_DATA)
    loaded = {d: load_split(d, "train") for d in PUBLISHED_COUNTS}
    if any(v is None for v in loaded.values()):
        record(2, False, "training split missing for some domain")
        pytest.fail("missing training data")
    t0 = time.perf_counter()
    deviations = []
    for domain, row in PUBLISHED_COUNTS.items():
        cfg = shipped_config(domain)
        targets = dict(zip((Granularity.CB, Granularity.MB, Granularity.FBQ, Granularity.FB), row[1:5]))
        for g, target in targets.items():
            got = len(partition(loaded[domain][0], cfg, g))
            dev = (got - target) / target
            print(f"  {domain:8s} {g.value.upper():3s} {got:6d} vs {target:6d} ({100 * dev:+.1f}%)")
            deviations.append((abs(dev), domain, g.value, got, target))
    elapsed = time.perf_counter() - t0
    worst = max(deviations)
    ok = worst[0] <= 0.15 and elapsed < 10
    record(2, ok, f"worst deviation {100 * worst[0]:.1f}% ({worst[1]} {worst[2]}: {worst[3]} vs {worst[4]}); "
                  f"{elapsed:.1f}s (< 10s)")
    assert ok


def test_criterion_03_data_reduction():
    cases = [
        ("weather 1PerMB", PUBLISHED_COUNTS["weather"][0], PUBLISHED_COUNTS["weather"][2], 74.8),
        ("alarm 1PerFB", PUBLISHED_COUNTS["alarm"][0], PUBLISHED_COUNTS["alarm"][4], 97.4),
        ("alarm 1PerFBQ", PUBLISHED_COUNTS["alarm"][0], PUBLISHED_COUNTS["alarm"][3], 96.1),
        ("reminder 1PerFB", PUBLISHED_COUNTS["reminder"][0], PUBLISHED_COUNTS["reminder"][4], 92.5),
    ]
    got = [(name, data_reduction(full, n), want) for name, full, n, want in cases]
    ok = all(abs(g - w) <= 0.1 + 1e-9 for _, g, w in got)
    record(3, ok, ", ".join(f"{name} {g} (published {w})" for name, g, w in got))
    assert ok


def _refinement_violations(examples, cfg) -> int:
    chain = (Granularity.CB, Granularity.MB, Granularity.FB, Granularity.FBQ)
    violations = 0
    for coarse, fine in zip(chain, chain[1:]):
        seen: dict[str, str] = {}
        for ex in examples:
            f, c = bucket_key(ex, cfg, fine).key, bucket_key(ex, cfg, coarse).key
            violations += seen.setdefault(f, c) != c
    return violations


def test_criterion_04_refinement():
    rng = random.Random(4)
    synthetic = 0
    for domain in SHIPPED_DOMAINS:
        cfg = shipped_config(domain)
        synthetic += _refinement_violations(random_dataset(rng, cfg, 2500, prefix=f"{domain}-"), cfg)
    detail = f"synthetic 10,000 examples: {synthetic} violations"
    real = None
    if _data_dir() is not None:
        real = 0
        for domain in PUBLISHED_COUNTS:
            for split in SPLITS:
                got = load_split(domain, split)
                if got is None:
                    real = None
                    break
                real += _refinement_violations(got[0], shipped_config(domain))
            if real is None:
                break
    detail += "; datasets: " + (f"{real} violations" if real is not None else NO_DATA)
    ok = synthetic == 0 and real == 0
    record(4, ok, detail)
    assert ok


def test_criterion_05_tree_accuracy_oracle():
    rng = random.Random(5)
    pairs = []
    for _ in range(5000):
        a = random_forest(rng, max_depth=4, max_siblings=6)
        roll = rng.random()
        if roll < 0.4:
            b = shuffle_forest(rng, a)
        elif roll < 0.8:
            b = shuffle_forest(rng, mutate(rng, a))
        else:
            b = random_forest(rng, max_depth=4, max_siblings=6)
        pairs.append((a, b))
    t0 = time.perf_counter()
    disagreements = equal = 0
    for a, b in pairs:
        same = forests_equal_modulo_order(a, b)
        equal += same
        disagreements += (canonical_form(a) == canonical_form(b)) != same
    elapsed = time.perf_counter() - t0
    # the tree check itself: skeletons must agree, and bracket-free text always fails
    check_disagreements = sum(
        tree_accuracy(a, serialize(b), require_indices=True)
        != (has_structure(serialize(b)) and forests_equal_modulo_order(skeleton(a), skeleton(b)))
        for a, b in pairs
    )
    weather = shipped_config("weather")
    scen = parse(WEEKEND_SCENARIO, weather)
    gold = tree_accuracy(scen, WEEKEND_REFERENCE, weather)
    dropped = not tree_accuracy(scen, WEEKEND_REFERENCE.replace("temp_high[ 45 ]", "45"), weather)
    relabeled = not tree_accuracy(scen, WEEKEND_REFERENCE.replace("condition[ rain ]", "precip[ rain ]"), weather)
    ok = disagreements == 0 and check_disagreements == 0 and gold and dropped and relabeled and elapsed < 10
    record(5, ok, f"{disagreements} canonical-form disagreements over 5,000 pairs ({equal} equal), "
                  f"{check_disagreements} tree-check disagreements; weekend reference pass={gold}, "
                  f"dropped fails={dropped}, relabeled fails={relabeled}; {elapsed:.1f}s (< 10s)")
    assert ok


def _round_trip_failures(examples, cfg):
    failures = flagged = 0
    for ex in examples:
        dex = delexicalize(ex, cfg)
        flagged += bool(dex.flagged)
        failures += relexicalize(dex, dex.original_values()) != ex
    return failures, flagged


def test_criterion_06_delex_round_trip():
    rng = random.Random(6)
    syn_fail = syn_flag = 0
    for domain in SHIPPED_DOMAINS:
        cfg = shipped_config(domain)
        f, g = _round_trip_failures(random_dataset(rng, cfg, 1000, inflect=0.05), cfg)
        syn_fail += f
        syn_flag += g
    detail = f"synthetic 4,000 examples: {syn_fail} failures, {syn_flag} flagged inflected references"
    real = None
    if _data_dir() is not None:
        real_fail = real_flag = n = 0
        for domain in PUBLISHED_COUNTS:
            for split in SPLITS:
                got = load_split(domain, split)
                if got is None:
                    break
                f, g = _round_trip_failures(got[0], shipped_config(domain))
                real_fail, real_flag, n = real_fail + f, real_flag + g, n + len(got[0])
            else:
                continue
            break
        else:
            real = real_fail
            detail += f"; datasets {n} examples: {real_fail} failures, {real_flag} flagged"
    if real is None:
        detail += "; datasets: " + NO_DATA
    ok = syn_fail == 0 and real == 0
    record(6, ok, detail)
    assert ok


def _stream_bytes(dexes, cfg, seed, epochs) -> tuple[bytes, list]:
    buf = io.StringIO()
    items = []
    for epoch, ex in stream(AugmentationStream(dexes, cfg, epochs=epochs, seed=seed)):
        items.append(ex)
        buf.write(json.dumps({"epoch": epoch, **ex.to_record()}, sort_keys=True, ensure_ascii=False) + "\n")
    return buf.getvalue().encode(), items


def test_criterion_07_dda_stability():
    hash_violations = consistency_violations = 0
    identical = True
    for domain in SHIPPED_DOMAINS:
        cfg = shipped_config(domain)
        dexes = [delexicalize(ex, cfg) for ex in random_dataset(random.Random(7), cfg, 100, prefix=domain)]
        by_id = {d.base.id: d for d in dexes}
        blob, items = _stream_bytes(dexes, cfg, seed=11, epochs=10)
        assert len(items) == 1000
        for ex in items:
            src = by_id[ex.id]
            hash_violations += bucket_key(ex, cfg, Granularity.FB) != bucket_key(src.base, cfg, Granularity.FB)
            again = delexicalize(ex, cfg)
            consistency_violations += (
                again.delex_scenario != src.delex_scenario
                or again.delex_reference != src.delex_reference
                or again.delex_query.lower() != src.delex_query.lower()
            )
        identical &= blob == _stream_bytes(dexes, cfg, seed=11, epochs=10)[0]
    ok = hash_violations == 0 and consistency_violations == 0 and identical
    record(7, ok, f"4 x 1,000 draws: {hash_violations} fb_hash violations, "
                  f"{consistency_violations} placeholder inconsistencies, same-seed runs identical={identical}")
    assert ok


def test_criterion_08_bleu():
    from test_metrics import fixture_pairs
    pairs = fixture_pairs(0, 20)
    diff = abs(corpus_bleu(pairs) - oracle_bleu(pairs))
    identical = corpus_bleu([(r, r) for _, r in pairs])
    zero = corpus_bleu([("a b c d e".split(), "a x b y c".split())])
    ok = diff < 1e-6 and abs(identical - 1.0) < 1e-12 and zero == 0.0
    record(8, ok, f"|bleu - oracle| = {diff:.2e} on 20 pairs; identical corpus {identical}; "
                  f"zero bigram precision -> {zero}")
    assert ok


def _failing_variant(rng, reference: str) -> str:
    kind = rng.randrange(4)
    if kind == 0:
        return " ".join(t for t in reference.split() if not t.endswith("[") and t != "]")
    if kind == 1:
        return reference + " INFORM_99[ extra_arg[ x ] ]"
    if kind == 2:
        return reference + " ]"
    tokens = reference.split()
    i = next(j for j, t in enumerate(tokens) if t.endswith("[") and t[0].islower())
    tokens[i] = "bogus_" + tokens[i]
    return " ".join(tokens)


def test_criterion_09_kd_filter():
    rng = random.Random(9)
    cfg = shipped_config("reminder")
    data = [ex for ex in random_dataset(rng, cfg, 400)
            if any(n.kind is NodeKind.ARGUMENT for n in ex.scenario.walk())]
    correct = total = 0
    for ex in data:
        width = rng.choice((1, 5, 10))
        passing = sorted(rng.sample(range(width), rng.randint(0, min(3, width))))
        ref = serialize(ex.reference)
        cands = [ref if i in passing else _failing_variant(rng, ref) for i in range(width)]
        want = (passing[0], ref) if passing else None
        total += 1
        correct += kd_filter(ex.scenario, cands, cfg) == want
    ok = correct == total
    record(9, ok, f"{correct}/{total} planted minimal ranks recovered (incl. all-fail cases)")
    assert ok


# bucket -> per-example pass counts over four experiments
SELECTOR_FIXTURE = {
    0: [3, 1], 1: [0, 0], 2: [4], 3: [2, 2], 4: [0, 2],
    5: [1], 6: [0], 7: [3, 4], 8: [1, 1, 3], 9: [2],
}
# ranked by (pass count, id); buckets 1 and 6 have no passing example
SELECTOR_EXPECTED = ["e0_1", "e5_0", "e8_0", "e3_0", "e4_1", "e9_0", "e7_0", "e2_0"]


def test_criterion_10_selector():
    cfg = shipped_config("reminder")
    test_set, matrix = [], {}
    exps = ["w", "x", "y", "z"]
    for b, counts in SELECTOR_FIXTURE.items():
        scen = " ".join(f"INFORM_{i + 1}[ todo[ t{i} ] ]" for i in range(b + 1))
        for j, c in enumerate(counts):
            ex_id = f"e{b}_{j}"
            test_set.append(example_from_record({"id": ex_id, "query": "", "scenario": scen}, cfg))
            rot = (b + j) % 4
            matrix[ex_id] = {e: ((k - rot) % 4) < c for k, e in enumerate(exps)}
    assert len(partition(test_set, cfg, Granularity.FB)) == 10
    full = select_differentiating(test_set, matrix, cfg, k=150)
    top5 = select_differentiating(test_set, matrix, cfg, k=5)
    ok = full == SELECTOR_EXPECTED and top5 == SELECTOR_EXPECTED[:5]
    record(10, ok, f"selected {full}; expected {SELECTOR_EXPECTED}")
    assert ok


def test_criterion_11_end_to_end(tmp_path):
    cfg = shipped_config("reminder")
    rng = random.Random(11)
    train = random_dataset(rng, cfg, 3000, prefix="tr")
    test = random_dataset(rng, cfg, 1000, prefix="te")
    t0 = time.perf_counter()
    raw = tmp_path / "train.tsv"
    raw.write_text("".join(f"{e.id}\t{e.query}\t{serialize(e.scenario)}\t{serialize(e.reference)}\n"
                           for e in train), encoding="utf-8")
    test_path = tmp_path / "test.jsonl"
    test_path.write_text("".join(json.dumps(e.to_record()) + "\n" for e in test), encoding="utf-8")
    cands = tmp_path / "cands.jsonl"
    with open(cands, "w", encoding="utf-8") as fh:
        for i, e in enumerate(test):
            cand = serialize(e.reference) if i % 10 else " ".join(t.text for t in e.reference.walk()
                                                                     if t.is_terminal)
            fh.write(json.dumps({"example_id": e.id, "candidate": cand}) + "\n")
    steps = [
        ["import", str(raw), "--domain", "reminder", "--mapping", DEFAULT_MAPPING,
         "--out", str(tmp_path / "train.jsonl")],
        ["bucket", "--domain", "reminder", "--in", str(tmp_path / "train.jsonl"), "--out-dir", str(tmp_path / "b")],
        ["sample", "--domain", "reminder", "--in", str(tmp_path / "train.jsonl"), "--plan", "1PerFB",
         "--out", str(tmp_path / "s.jsonl")],
        ["augment", "--domain", "reminder", "--in", str(tmp_path / "s.jsonl"), "--epochs", "3",
         "--out", str(tmp_path / "aug.jsonl")],
        ["eval", "--domain", "reminder", "--test", str(test_path), "--candidates", str(cands),
         "--out", str(tmp_path / "eval.json")],
    ]
    codes = [main(s) for s in steps]
    elapsed = time.perf_counter() - t0
    acc = json.loads((tmp_path / "eval.json").read_text())["experiments"]["cands"]["tree_accuracy"]
    ok = codes == [0] * 5 and elapsed < 60 and acc == pytest.approx(90.0)
    record(11, ok, f"import/bucket/sample/augment/eval exit codes {codes}; tree accuracy {acc}; "
                   f"{elapsed:.1f}s (< 60s)")
    assert ok
