"""Hybrid probabilistic logic programs with sampling inference.

The package parses distributional-clause programs, analyzes their
random-variable and dependency structure, and answers queries with
likelihood weighting, context-specific likelihood weighting (ground and
first-order), or exact enumeration.
"""

from .engine import QueryResult, run_query
from .parser import parse_evidence, parse_program, parse_query, validate
from .syntax import Program

__all__ = ["Program", "QueryResult", "parse_evidence", "parse_program",
           "parse_query", "run_query", "validate"]

__version__ = "0.1.0"
