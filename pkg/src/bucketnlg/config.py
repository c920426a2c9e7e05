"""Per-domain label sets, argument rules and value pools."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import ConflictingLabel, SchemaError

__all__ = [
    "RuleKind", "NumericBand", "ArgRule", "IntRange", "DomainConfig",
    "load_config", "config_from_dict", "rule_for", "shipped_config", "SHIPPED_DOMAINS",
]

SHIPPED_DOMAINS = ("weather", "reminder", "time", "alarm")


class RuleKind(enum.Enum):
    RETAIN = "retain"
    DELEX = "delex"
    NUMERIC_GROUP = "numeric_group"


@dataclass(frozen=True)
class NumericBand:
    name: str
    lo: int
    hi: int | None = None  # inclusive; None = unbounded

    def __contains__(self, n: int) -> bool:
        return n >= self.lo and (self.hi is None or n <= self.hi)


DEFAULT_BANDS = (NumericBand("eq1", 1, 1), NumericBand("gr1", 2, None))


@dataclass(frozen=True)
class ArgRule:
    kind: RuleKind
    bands: tuple[NumericBand, ...] = ()

    def group_of(self, value: str) -> str | None:
        """Band name for a numeric value; None if it is not a positive integer in any band."""
        try:
            n = int(value.strip())
        except ValueError:
            return None
        for band in self.bands:
            if n in band:
                return band.name
        return None

    def band(self, name: str) -> NumericBand:
        for band in self.bands:
            if band.name == name:
                return band
        raise KeyError(name)


RETAIN = ArgRule(RuleKind.RETAIN)
DELEX = ArgRule(RuleKind.DELEX)
NUMERIC = ArgRule(RuleKind.NUMERIC_GROUP, DEFAULT_BANDS)


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int  # inclusive

    def values(self) -> range:
        return range(self.lo, self.hi + 1)


@dataclass(frozen=True, eq=True)
class DomainConfig:
    name: str
    relation_labels: frozenset[str]
    act_labels: frozenset[str]
    rules: Mapping[str, ArgRule] = field(default_factory=dict)
    default_rule: ArgRule = DELEX
    value_retaining_for_mb: frozenset[str] = frozenset()
    value_pools: Mapping[str, tuple[str | IntRange, ...]] = field(default_factory=dict)

    def __hash__(self) -> int:
        return hash(self.digest())

    def rule_for(self, arg_name: str) -> ArgRule:
        return self.rules.get(arg_name, self.default_rule)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "relation_labels": sorted(self.relation_labels),
            "act_labels": sorted(self.act_labels),
            "rules": {k: _rule_to_dict(v) for k, v in sorted(self.rules.items())},
            "default_rule": _rule_to_dict(self.default_rule),
            "mb_value_retaining": sorted(self.value_retaining_for_mb),
            "value_pools": {
                k: [{"int_range": [p.lo, p.hi]} if isinstance(p, IntRange) else p for p in pool]
                for k, pool in sorted(self.value_pools.items())
            },
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def pool_values(self, arg_name: str) -> list[str]:
        """Flattened pool for ``arg_name``; integer ranges are expanded to strings."""
        out: list[str] = []
        for item in self.value_pools.get(arg_name, ()):
            if isinstance(item, IntRange):
                out.extend(str(n) for n in item.values())
            else:
                out.append(item)
        return out


def rule_for(config: DomainConfig, arg_name: str) -> ArgRule:
    return config.rule_for(arg_name)


def _rule_to_dict(rule: ArgRule) -> dict:
    d: dict = {"kind": rule.kind.value}
    if rule.kind is RuleKind.NUMERIC_GROUP and rule.bands != DEFAULT_BANDS:
        d["groups"] = [{"name": b.name, "min": b.lo, "max": b.hi} for b in rule.bands]
    return d


def _parse_rule(where: str, raw) -> ArgRule:
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, dict) or "kind" not in raw:
        raise SchemaError(where, "expected an object with a 'kind' key")
    try:
        kind = RuleKind(raw["kind"])
    except ValueError:
        raise SchemaError(where, f"unknown rule kind {raw['kind']!r}") from None
    if kind is not RuleKind.NUMERIC_GROUP:
        if "groups" in raw:
            raise SchemaError(where, "'groups' only applies to numeric_group rules")
        return RETAIN if kind is RuleKind.RETAIN else DELEX
    groups = raw.get("groups")
    if groups is None:
        return NUMERIC
    try:
        bands = tuple(NumericBand(str(g["name"]), int(g["min"]),
                                  None if g.get("max") is None else int(g["max"]))
                      for g in groups)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(where + ".groups", f"malformed group: {exc}") from None
    _check_bands(where + ".groups", bands)
    return ArgRule(kind, bands)


def _check_bands(where: str, bands: tuple[NumericBand, ...]) -> None:
    """Bands must tile the positive integers exactly."""
    if not bands:
        raise SchemaError(where, "no groups")
    if len({b.name for b in bands}) != len(bands):
        raise SchemaError(where, "duplicate group names")
    ordered = sorted(bands, key=lambda b: b.lo)
    expect = 1
    for b in ordered:
        if b.lo != expect:
            raise SchemaError(where, f"groups not contiguous/disjoint at {expect}")
        if b.hi is None:
            if b is not ordered[-1]:
                raise SchemaError(where, "unbounded group must be last")
            return
        if b.hi < b.lo:
            raise SchemaError(where, f"group {b.name!r} is empty")
        expect = b.hi + 1
    raise SchemaError(where, "groups do not cover all positive integers")


def _str_set(data: dict, key: str) -> frozenset[str]:
    val = data.get(key, [])
    if not isinstance(val, list) or not all(isinstance(v, str) and v for v in val):
        raise SchemaError(key, "expected a list of non-empty strings")
    return frozenset(val)


def config_from_dict(data: dict) -> DomainConfig:
    if not isinstance(data, dict):
        raise SchemaError("<root>", "expected a JSON object")
    known = {"name", "relation_labels", "act_labels", "rules", "default_rule",
             "mb_value_retaining", "value_pools"}
    unknown = set(data) - known
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown key")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "required non-empty string")
    relations = _str_set(data, "relation_labels")
    acts = _str_set(data, "act_labels")
    if not acts:
        raise SchemaError("act_labels", "at least one dialog act is required")
    clash = relations & acts
    if clash:
        raise ConflictingLabel(sorted(clash)[0])

    raw_rules = data.get("rules", {})
    if not isinstance(raw_rules, dict):
        raise SchemaError("rules", "expected an object")
    rules = {k: _parse_rule(f"rules.{k}", v) for k, v in raw_rules.items()}
    default_rule = _parse_rule("default_rule", data.get("default_rule", "delex"))

    mb = _str_set(data, "mb_value_retaining")
    for arg in sorted(mb):
        # a value kept by MB but delexicalized by FB would break FB => MB refinement
        if rules.get(arg, default_rule).kind is not RuleKind.RETAIN:
            raise SchemaError(f"mb_value_retaining.{arg}", "value-retaining arguments need a retain rule")

    raw_pools = data.get("value_pools", {})
    if not isinstance(raw_pools, dict):
        raise SchemaError("value_pools", "expected an object")
    pools: dict[str, tuple[str | IntRange, ...]] = {}
    for arg, raw in raw_pools.items():
        where = f"value_pools.{arg}"
        items = raw if isinstance(raw, list) else [raw]
        parsed: list[str | IntRange] = []
        for item in items:
            if isinstance(item, str) and item.strip():
                parsed.append(" ".join(item.split()))
            elif isinstance(item, dict) and set(item) == {"int_range"}:
                try:
                    lo, hi = (int(x) for x in item["int_range"])
                except (TypeError, ValueError):
                    raise SchemaError(where, "int_range must be [lo, hi]") from None
                if hi < lo:
                    raise SchemaError(where, "int_range is empty")
                parsed.append(IntRange(lo, hi))
            else:
                raise SchemaError(where, f"bad pool entry {item!r}")
        pools[arg] = tuple(parsed)

    config = DomainConfig(
        name=name,
        relation_labels=relations,
        act_labels=acts,
        rules=rules,
        default_rule=default_rule,
        value_retaining_for_mb=mb,
        value_pools=pools,
    )
    _check_pools(config)
    return config


def _check_pools(config: DomainConfig) -> None:
    for arg, rule in config.rules.items():
        if arg not in config.value_pools:
            continue
        values = config.pool_values(arg)
        if not values:
            raise SchemaError(f"value_pools.{arg}", "empty pool")
        if rule.kind is RuleKind.NUMERIC_GROUP:
            # every band used by augmentation needs at least one candidate
            for band in rule.bands:
                if not any(rule.group_of(v) == band.name for v in values):
                    raise SchemaError(f"value_pools.{arg}", f"no values in group {band.name!r}")


def load_config(path: str | Path) -> DomainConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from None
    return config_from_dict(data)


def shipped_config(domain: str) -> DomainConfig:
    """One of the bundled weather/reminder/time/alarm configs."""
    if domain not in SHIPPED_DOMAINS:
        raise KeyError(domain)
    text = resources.files("bucketnlg").joinpath("configs").joinpath(f"{domain}.json").read_text("utf-8")
    return config_from_dict(json.loads(text))
