"""Exception hierarchy shared by every module."""

from __future__ import annotations


class BucketNLGError(Exception):
    """Base class; ``details`` is serialized into CLI error reports."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), **self.details}


# parsing
class ParseError(BucketNLGError):
    pass


class UnbalancedBrackets(ParseError):
    def __init__(self, position: int, message: str = "unbalanced brackets"):
        super().__init__(f"{message} at token {position}", position=position)
        self.position = position


class EmptyLabel(ParseError):
    def __init__(self, position: int):
        super().__init__(f"empty label at token {position}", position=position)
        self.position = position


# configuration
class ConfigError(BucketNLGError):
    pass


class SchemaError(ConfigError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}", field=field, reason=reason)
        self.field = field
        self.reason = reason


class ConflictingLabel(ConfigError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} is both a relation and a dialog act", label=label)
        self.label = label


# delexicalization / augmentation
class MissingBinding(BucketNLGError):
    def __init__(self, placeholder: str):
        super().__init__(f"no value for placeholder {placeholder!r}", placeholder=placeholder)
        self.placeholder = placeholder


class EmptyPool(BucketNLGError):
    def __init__(self, placeholder: str):
        super().__init__(f"empty value pool for placeholder {placeholder!r}", placeholder=placeholder)
        self.placeholder = placeholder


class PoolExhausted(BucketNLGError):
    def __init__(self, arg_name: str, needed: int, available: int):
        super().__init__(
            f"pool for {arg_name!r} has {available} distinct values, {needed} needed",
            arg_name=arg_name, needed=needed, available=available,
        )
        self.arg_name = arg_name
        self.needed = needed
        self.available = available


# datasets
class DatasetError(BucketNLGError):
    """Aggregated per-record failures; ``failures`` is a list of (id or line, message)."""

    def __init__(self, message: str, failures: list[tuple[str, str]]):
        super().__init__(message, failures=[list(f) for f in failures])
        self.failures = failures


class MappingError(BucketNLGError):
    def __init__(self, reason: str, sample_line: str | None = None):
        super().__init__(reason, sample_line=sample_line)
        self.sample_line = sample_line


class EmptyDataset(BucketNLGError):
    pass


class DuplicateId(BucketNLGError):
    def __init__(self, domain: str, example_id: str):
        super().__init__(f"duplicate id {example_id!r} in {domain!r}", domain=domain, id=example_id)
        self.domain = domain
        self.example_id = example_id


class InvalidCounts(BucketNLGError):
    pass


# metrics
class EmptyCorpus(BucketNLGError):
    pass


class MissingCandidates(BucketNLGError):
    def __init__(self, example_ids):
        ids = sorted(example_ids)
        super().__init__(f"missing candidates for {len(ids)} example(s)", example_ids=ids)
        self.example_ids = ids


class TooFewRuns(BucketNLGError):
    pass
