"""Parallelization adviser for fine-grained task parallelism on SMT cores."""

__version__ = "0.1.0"
