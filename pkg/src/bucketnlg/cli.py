"""Command-line entry point: ``bucketnlg <subcommand> ...``.

Every artifact-writing subcommand also writes ``<artifact>.provenance.json``
recording inputs (with SHA-256), the config digest, the seed and the tool
version.  Errors go to stderr as one JSON object and the exit status is
non-zero.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from collections import defaultdict
from pathlib import Path

from . import __version__
from .bucketing import Granularity, partition, size_histogram
from .config import SHIPPED_DOMAINS, DomainConfig, load_config, shipped_config
from .curation import data_reduction, parse_plan, sample
from .dataset import import_raw, iter_jsonl, load_examples, parse_mapping, save_examples, write_jsonl
from .dda import AugmentationStream, StreamReport, materialize, stream
from .delex import delexicalize
from .errors import BucketNLGError, ParseError
from .fidelity import Mode, check_tree, kd_filter
from .metrics import EvalRecord, aggregate, robustness, select_differentiating
from .mr import parse, serialize
from .seeding import DEFAULT_SEED

logger = logging.getLogger("bucketnlg")

# U+27C2 PERPENDICULAR; does not occur in any of the four datasets' text
DEFAULT_CONCAT_SEP = "⟂"

_RUN_SUFFIX = re.compile(r"^(?P<exp>.+?)[._-]run\d+$")


class CommandFailed(BucketNLGError):
    """Artifacts were written but the report contains errors."""


# --- helpers ------------------------------------------------------------------

def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: str | Path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                          encoding="utf-8")


def _provenance(artifact: Path, command: str, inputs, config: DomainConfig | None, seed=None, **params) -> None:
    _write_json(artifact.with_name(artifact.name + ".provenance.json"), {
        "tool": "bucketnlg",
        "version": __version__,
        "command": command,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "config": None if config is None else {"name": config.name, "sha256": config.digest()},
        "seed": seed,
        "params": params,
    })


def _config(args) -> DomainConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    if getattr(args, "domain", None):
        return shipped_config(args.domain)
    raise BucketNLGError("either --config or --domain is required")


def _with_concat(rec: dict, sep: str | None) -> dict:
    if sep is not None:
        rec["model_input"] = f"{rec['query']} {sep} {rec['scenario']}"
    return rec


def _records(examples, sep):
    return (_with_concat(ex.to_record(), sep) for ex in examples)


def _print_table(header: list[str], rows: list[list]) -> None:
    cells = [header] + [[("-" if v is None else str(v)) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for n, row in enumerate(cells):
        print(" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if n == 0:
            print("-+-".join("-" * w for w in widths))


# --- subcommands -----------------------------------------------------------

def cmd_import(args) -> int:
    config = _config(args)
    mapping = parse_mapping(args.mapping)
    delimiter = "\t" if args.delimiter in ("tab", "\\t") else args.delimiter
    examples, report = import_raw(
        args.raw, mapping, config, delimiter=delimiter, header=args.header, treenlg=args.treenlg,
    )
    out = Path(args.out)
    save_examples(out, examples)
    _write_json(out.with_name(out.name + ".report.json"), report.to_dict())
    _provenance(out, "import", [args.raw], config, mapping=mapping, treenlg=args.treenlg)
    print(f"{args.raw}: {report.n_records} records, {len(report.failures)} failures -> {out}")
    if report.failures:
        raise CommandFailed(f"{len(report.failures)} line(s) failed to parse",
                            failures=report.failures[:20])
    return 0


def cmd_parse(args) -> int:
    config = _config(args)
    failures = []
    n = 0
    for lineno, rec in iter_jsonl(args.inp):
        n += 1
        for fld in ("scenario", "reference"):
            text = rec.get(fld)
            if not text:
                continue
            try:
                again = serialize(parse(text, config))
            except ParseError as exc:
                failures.append({"id": rec.get("id"), "line": lineno, "field": fld, "error": str(exc)})
                continue
            if again != " ".join(text.split()):
                failures.append({"id": rec.get("id"), "line": lineno, "field": fld,
                                 "error": "round trip changed the text"})
    report = {"records": n, "failures": failures}
    if args.report:
        _write_json(args.report, report)
    print(f"{args.inp}: {n} records, {len(failures)} failures")
    if failures:
        raise CommandFailed(f"{len(failures)} field(s) failed validation", failures=failures[:20])
    return 0


def cmd_bucket(args) -> int:
    config = _config(args)
    examples = load_examples(args.inp, config)
    grans = list(Granularity) if args.granularity == "all" else [Granularity.parse(args.granularity)]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    keys: dict[str, dict[str, str]] = defaultdict(dict)
    report = {"dataset": str(args.inp), "examples": len(examples), "granularities": {}}
    rows = []
    for g in grans:
        buckets = partition(examples, config, g)
        for key, ids in buckets.items():
            for i in ids:
                keys[i][g.value] = key.key
        report["granularities"][g.value] = {
            "buckets": len(buckets),
            "size_histogram": {str(s): c for s, c in size_histogram(buckets).items()},
        }
        rows.append([g.value.upper(), len(buckets)])
    write_jsonl(out_dir / "keys.jsonl", ({"id": i, **keys[i]} for i in sorted(keys)))
    _write_json(out_dir / "report.json", report)
    _provenance(out_dir / "report.json", "bucket", [args.inp], config, granularity=args.granularity)
    _print_table(["granularity", "buckets"], rows)
    return 0


def cmd_sample(args) -> int:
    config = _config(args)
    plan = parse_plan(args.plan, seed=args.seed, sources=[(config.name, str(args.inp))])
    print(f"seed: {plan.seed}")
    examples = load_examples(args.inp, config)
    picked = sample(examples, config, plan)
    out = Path(args.out)
    write_jsonl(out, _records(picked, args.concat_sep))
    _write_json(out.with_name(out.name + ".plan.json"), plan.to_dict())
    _provenance(out, "sample", [args.inp], config, seed=plan.seed, plan=plan.label)
    print(f"{plan.label}: {len(picked)} of {len(examples)} examples "
          f"(data reduction {data_reduction(len(examples), len(picked))}%) -> {out}")
    return 0


def cmd_augment(args) -> int:
    config = _config(args)
    print(f"seed: {args.seed}")
    examples = load_examples(args.inp, config)
    source = [delexicalize(ex, config, include_query=True) for ex in examples]
    spec = AugmentationStream(source, config, args.epochs, args.seed)
    report = StreamReport()
    if args.materialize is not None:
        items = materialize(spec, args.materialize)
        report.emitted = len(items)
        report.flagged_ids = sorted(d.base.id for d in source if d.flagged)
    else:
        items = stream(spec, report)
    out = Path(args.out)

    def rows():
        for epoch, ex in items:
            rec = _with_concat(ex.to_record(), args.concat_sep)
            rec["epoch"] = epoch
            yield rec

    n = write_jsonl(out, rows())
    _write_json(out.with_name(out.name + ".report.json"),
                {"emitted": n, "flagged_reference_ids": report.flagged_ids})
    _provenance(out, "augment", [args.inp], config, seed=args.seed,
                epochs=args.epochs, materialize=args.materialize)
    print(f"{n} augmented instances ({len(report.flagged_ids)} source examples flagged) -> {out}")
    return 0


def cmd_kd_filter(args) -> int:
    config = _config(args)
    scenarios = {ex.id: ex for ex in load_examples(args.scenarios, config)}
    kept: list[dict] = []
    dropped: list[str] = []
    seen: set[str] = set()
    for _, rec in iter_jsonl(args.candidates):
        ex_id = rec["example_id"]
        if ex_id not in scenarios:
            raise BucketNLGError(f"candidates for unknown example {ex_id!r}")
        seen.add(ex_id)
        ex = scenarios[ex_id]
        hit = kd_filter(ex.scenario, rec.get("candidates", []), config, args.mode, args.require_indices)
        if hit is None:
            dropped.append(ex_id)
            continue
        rank, cand = hit
        out_rec = ex.to_record()
        out_rec.update(reference=" ".join(cand.split()), origin="synthetic", rank=rank)
        kept.append(_with_concat(out_rec, args.concat_sep))
    missing = sorted(set(scenarios) - seen)
    out = Path(args.out)
    write_jsonl(out, sorted(kept, key=lambda r: r["id"]))
    _write_json(out.with_name(out.name + ".report.json"),
                {"kept": len(kept), "dropped": sorted(dropped), "no_candidates": missing})
    _provenance(out, "kd-filter", [args.scenarios, args.candidates], config,
                mode=args.mode, require_indices=args.require_indices)
    print(f"kept {len(kept)}, dropped {len(dropped)}, without candidates {len(missing)} -> {out}")
    return 0


def _experiment_of(path: Path) -> tuple[str, str]:
    stem = path.name[:-len(".jsonl")] if path.name.endswith(".jsonl") else path.stem
    m = _RUN_SUFFIX.match(stem)
    return (m.group("exp") if m else stem), stem


def _parse_sizes(items: list[str]) -> dict[str, tuple[int, int]]:
    sizes = {}
    for item in items or ():
        try:
            exp, counts = item.split("=", 1)
            full, sampled = counts.split(":", 1)
            sizes[exp] = (int(full), int(sampled))
        except ValueError:
            raise BucketNLGError(f"bad --train-size {item!r}; expected EXP=FULL:SAMPLED") from None
    return sizes


def cmd_eval(args) -> int:
    config = _config(args)
    test = load_examples(args.test, config)
    by_id = {ex.id: ex for ex in test}
    references = {ex.id: serialize(ex.reference) for ex in test if ex.reference is not None}
    sizes = _parse_sizes(args.train_size)
    primary = Mode(args.mode)

    runs: dict[str, list] = defaultdict(list)
    pass_matrix: dict[str, dict[str, bool]] = {ex.id: {} for ex in test}
    run_reports = {}
    for path in map(Path, args.candidates):
        exp, run = _experiment_of(path)
        records = {m: [] for m in Mode}
        for _, rec in iter_jsonl(path):
            ex = by_id.get(rec["example_id"])
            if ex is None:
                raise BucketNLGError(f"{path}: unknown example {rec['example_id']!r}")
            for m in Mode:
                ok, why = check_tree(ex.scenario, rec["candidate"], config, m, args.require_indices)
                records[m].append(EvalRecord(ex.id, run, rec["candidate"], ok, why))
        reports = {m: aggregate(records[m], references, by_id, args.keep_structure) for m in Mode}
        for ex_id, ok in reports[primary].passes.items():
            pass_matrix[ex_id][run] = ok
        runs[exp].append(reports)
        run_reports[run] = {m.value: reports[m].to_dict() for m in Mode}

    rows = []
    summary = {}
    for exp, reps in runs.items():
        best = max(reps, key=lambda r: r[primary].tree_accuracy)
        accs = [r[primary].tree_accuracy for r in reps]
        stdev = robustness(accs)[1] if len(accs) >= 2 else None
        red = data_reduction(*sizes[exp]) if exp in sizes else None
        bleu = best[primary].bleu
        summary[exp] = {
            "runs": len(reps),
            "bleu": bleu,
            "tree_accuracy": max(accs),
            "tree_accuracy_strict": max(r[Mode.STRICT].tree_accuracy for r in reps),
            "tree_accuracy_lenient": max(r[Mode.LENIENT].tree_accuracy for r in reps),
            "data_reduction": red,
            "tree_accuracy_stdev": stdev,
        }
        rows.append([
            exp,
            None if bleu is None else f"{100 * bleu:.1f}",
            f"{summary[exp]['tree_accuracy_strict']:.1f}",
            f"{summary[exp]['tree_accuracy_lenient']:.1f}",
            None if red is None else f"{red:.1f}",
            None if stdev is None else f"{stdev:.1f}",
        ])
    report = {"test": str(args.test), "mode": primary.value, "experiments": summary,
              "runs": run_reports, "pass_matrix": pass_matrix}
    if args.out:
        out = Path(args.out)
        _write_json(out, report)
        _provenance(out, "eval", [args.test, *args.candidates], config,
                    mode=primary.value, require_indices=args.require_indices)
    _print_table(["Experiment", "BLEU Score", "Tree Accuracy", "Tree Acc (lenient)",
                  "Data Reduction", "TreeAcc STDev"], rows)
    return 0


def cmd_select(args) -> int:
    config = _config(args)
    test = load_examples(args.test, config)
    data = json.loads(Path(args.pass_matrix).read_text(encoding="utf-8"))
    matrix = data.get("pass_matrix", data)
    ids = select_differentiating(test, matrix, config, args.k)
    out = Path(args.out)
    by_id = {ex.id: ex for ex in test}
    write_jsonl(out, (by_id[i].to_record() for i in ids))
    _provenance(out, "select-eval-set", [args.test, args.pass_matrix], config, k=args.k)
    print(f"selected {len(ids)} differentiating examples -> {out}")
    return 0


# --- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bucketnlg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--config", help="domain config JSON")
        g.add_argument("--domain", choices=SHIPPED_DOMAINS, help="use a bundled domain config")
        return sp

    def concat(sp):
        sp.add_argument("--concat-sep", nargs="?", const=DEFAULT_CONCAT_SEP, default=None,
                        help="add a 'model_input' field joining query and MR with this token")

    s = common(sub.add_parser("import", help="convert a raw delimited dataset to JSONL"))
    s.add_argument("raw")
    s.add_argument("--mapping", required=True, help="e.g. id=0,query=1,scenario=2,reference=3")
    s.add_argument("--delimiter", default="tab")
    s.add_argument("--header", action="store_true", help="first line names the columns")
    s.add_argument("--treenlg", action="store_true", help="rewrite [__DG_X__ style openers")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_import)

    s = common(sub.add_parser("parse", help="validate MRs and check the round trip"))
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--report")
    s.set_defaults(func=cmd_parse)

    s = common(sub.add_parser("bucket", help="bucket counts and id->key maps"))
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--granularity", default="all", choices=["all"] + [g.value for g in Granularity])
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_bucket)

    s = common(sub.add_parser("sample", help="per-bucket sampling, e.g. 1PerFB or 0.25PerFB"))
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--plan", required=True)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--out", required=True)
    concat(s)
    s.set_defaults(func=cmd_sample)

    s = common(sub.add_parser("augment", help="dynamic data augmentation"))
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--epochs", type=int, default=1)
    s.add_argument("--materialize", type=int, metavar="N",
                   help="emit exactly N instances instead of whole epochs")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--out", required=True)
    concat(s)
    s.set_defaults(func=cmd_augment)

    s = common(sub.add_parser("kd-filter", help="keep the first ranked candidate passing tree accuracy"))
    s.add_argument("--scenarios", required=True)
    s.add_argument("--candidates", required=True, help="JSONL of {example_id, candidates: [...]}")
    s.add_argument("--mode", default="strict", choices=[m.value for m in Mode])
    s.add_argument("--require-indices", action="store_true")
    s.add_argument("--out", required=True)
    concat(s)
    s.set_defaults(func=cmd_kd_filter)

    s = common(sub.add_parser("eval", help="tree accuracy / BLEU table over experiments"))
    s.add_argument("--test", required=True)
    s.add_argument("--candidates", nargs="+", required=True,
                   help="one JSONL of {example_id, candidate} per experiment run (exp.runN groups runs)")
    s.add_argument("--mode", default="strict", choices=[m.value for m in Mode])
    s.add_argument("--require-indices", action="store_true")
    s.add_argument("--keep-structure", action="store_true", help="BLEU over bracketed text")
    s.add_argument("--train-size", action="append", metavar="EXP=FULL:SAMPLED")
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)

    s = common(sub.add_parser("select-eval-set", help="most differentiating examples for human review"))
    s.add_argument("--test", required=True)
    s.add_argument("--pass-matrix", required=True, help="eval report JSON or a bare pass matrix")
    s.add_argument("-k", type=int, default=150)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BucketNLGError as exc:
        print(json.dumps(exc.to_dict(), ensure_ascii=False, sort_keys=True), file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
