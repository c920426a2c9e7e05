"""Bucketing, delexicalization, augmentation and fidelity tooling for tree-structured NLG data."""

__version__ = "0.1.0"
