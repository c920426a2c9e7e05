"""Example records, JSONL interchange and raw-dataset import."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DatasetError, MappingError, ParseError
from .mr import MrForest, parse, serialize

logger = logging.getLogger(__name__)

ORIGINS = ("golden", "synthetic")


@dataclass(frozen=True)
class Example:
    id: str
    domain: str
    query: str
    scenario: MrForest
    reference: MrForest | None = None
    origin: str | None = None

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "domain": self.domain,
            "query": self.query,
            "scenario": serialize(self.scenario),
            "reference": None if self.reference is None else serialize(self.reference),
        }
        if self.origin is not None:
            rec["origin"] = self.origin
        return rec


def example_from_record(rec: dict, config=None) -> Example:
    for key in ("id", "scenario"):
        if not isinstance(rec.get(key), str):
            raise ParseError(f"record lacks string field {key!r}")
    origin = rec.get("origin")
    if origin is not None and origin not in ORIGINS:
        raise ParseError(f"bad origin {origin!r}")
    ref = rec.get("reference")
    return Example(
        id=rec["id"],
        domain=rec.get("domain") or (config.name if config is not None else ""),
        query=" ".join((rec.get("query") or "").split()),
        scenario=parse(rec["scenario"], config),
        reference=None if ref in (None, "") else parse(ref, config),
        origin=origin,
    )


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                yield lineno, json.loads(line)


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            n += 1
    return n


def load_examples(path: str | Path, config=None) -> list[Example]:
    """Read a JSONL dataset; every bad line is collected before raising."""
    examples: list[Example] = []
    failures: list[tuple[str, str]] = []
    seen: set[str] = set()
    for lineno, rec in iter_jsonl(path):
        ident = str(rec.get("id", f"line {lineno}"))
        try:
            ex = example_from_record(rec, config)
        except ParseError as exc:
            failures.append((ident, str(exc)))
            continue
        if ex.id in seen:
            failures.append((ident, "duplicate id"))
            continue
        seen.add(ex.id)
        examples.append(ex)
    if failures:
        raise DatasetError(f"{len(failures)} bad record(s) in {path}", failures)
    return examples


def save_examples(path: str | Path, examples: Iterable[Example]) -> int:
    return write_jsonl(path, (ex.to_record() for ex in examples))


# --- raw import -----------------------------------------------------------

# TreeNLG-style bracket tokens: "[__DG_INFORM_1__", "[__ARG_TEMP_LOW__", "[__DS_CONTRAST__"
_TREENLG_OPEN = re.compile(r"^\[__(?:DG|DS|ARG)_([A-Za-z0-9_]+?)__$")


def normalize_treenlg(text: str) -> str:
    """Rewrite ``[__DG_INFORM_1__`` style openers into ``INFORM_1[`` form."""
    out = []
    for tok in text.split():
        m = _TREENLG_OPEN.match(tok)
        if m:
            label = m.group(1)
            if tok.startswith("[__ARG_"):
                label = label.lower()
            out.append(label + "[")
        else:
            out.append(tok)
    return " ".join(out)


FIELDS = ("id", "query", "scenario", "reference")


def parse_mapping(spec: str) -> dict[str, str]:
    """``"query=1,scenario=2,reference=3"`` -> field -> column (index or header name)."""
    mapping: dict[str, str] = {}
    for part in filter(None, (p.strip() for p in spec.split(","))):
        if "=" not in part:
            raise MappingError(f"bad mapping entry {part!r}; expected field=column")
        key, col = (s.strip() for s in part.split("=", 1))
        if key not in FIELDS:
            raise MappingError(f"unknown field {key!r}; expected one of {', '.join(FIELDS)}")
        mapping[key] = col
    if "scenario" not in mapping:
        raise MappingError("mapping must name the scenario column")
    return mapping


@dataclass
class ImportReport:
    source: str
    n_lines: int = 0
    n_records: int = 0
    failures: list = None

    def to_dict(self) -> dict:
        return {"source": self.source, "lines": self.n_lines, "records": self.n_records,
                "failures": self.failures or []}


def import_raw(
    path: str | Path,
    mapping: dict[str, str],
    config,
    *,
    delimiter: str = "\t",
    header: bool = False,
    treenlg: bool = False,
    id_prefix: str | None = None,
) -> tuple[list[Example], ImportReport]:
    """Convert a delimited raw file into Examples.

    Lines that fail to parse are listed in the report, never silently
    dropped.  A mapping that cannot address the file's columns raises
    MappingError with the offending line.
    """
    path = Path(path)
    prefix = id_prefix if id_prefix is not None else path.stem
    report = ImportReport(str(path), failures=[])
    examples: list[Example] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh, delimiter=delimiter, quoting=csv.QUOTE_NONE)
        columns: dict[str, int] = {}
        for lineno, row in enumerate(rows, 1):
            if header and lineno == 1:
                names = [c.strip() for c in row]
                for key, col in mapping.items():
                    if col.isdigit():
                        columns[key] = int(col)
                    elif col in names:
                        columns[key] = names.index(col)
                    else:
                        raise MappingError(f"no column named {col!r}", delimiter.join(row))
                continue
            if not columns:
                try:
                    columns = {k: int(v) for k, v in mapping.items()}
                except ValueError:
                    raise MappingError("column names need --header; use indices otherwise",
                                       delimiter.join(row)) from None
            if not any(cell.strip() for cell in row):
                continue
            report.n_lines += 1
            if max(columns.values()) >= len(row):
                raise MappingError(
                    f"line {lineno} has {len(row)} column(s), mapping needs {max(columns.values()) + 1}",
                    delimiter.join(row),
                )
            cell = {k: row[i] for k, i in columns.items()}
            ident = cell.get("id") or f"{prefix}-{lineno}"
            scenario = cell["scenario"]
            reference = cell.get("reference") or None
            if treenlg:
                scenario = normalize_treenlg(scenario)
                reference = normalize_treenlg(reference) if reference else None
            try:
                if ident in seen:
                    raise ParseError("duplicate id")
                ex = example_from_record(
                    {"id": ident, "domain": config.name, "query": cell.get("query", ""),
                     "scenario": scenario, "reference": reference},
                    config,
                )
            except ParseError as exc:
                report.failures.append({"line": lineno, "id": ident, "error": str(exc)})
                continue
            seen.add(ident)
            examples.append(ex)
    report.n_records = len(examples)
    if report.n_lines == 0:
        logger.warning("%s: no records", path)
    return examples, report
