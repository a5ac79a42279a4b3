"""Safety verifier for constrained Horn clauses over linear real arithmetic."""

from .analysis import AbstractModel, analyze, check_safety, is_inductive_model
from .cex import TraceTerm, build_and_tree, extract_trace, feasible, tree_interpolants
from .chc_ast import Atom, Clause, ParseError, Program, parse_clause, parse_program
from .driver import Config, Verdict, verify
from .linalg import ConstraintSet, LinearConstraint, ResourceLimitError
from .polyhedra import Polyhedron
from .qa import qa_transform
from .refine import polyvariant_specialise, split_facts
from .specialise import early_safe, strengthen

__version__ = "0.1.0"

__all__ = [
    "AbstractModel", "Atom", "Clause", "Config", "ConstraintSet",
    "LinearConstraint", "ParseError", "Polyhedron", "Program",
    "ResourceLimitError", "TraceTerm", "Verdict", "analyze",
    "build_and_tree", "check_safety", "early_safe", "extract_trace",
    "feasible", "is_inductive_model", "parse_clause", "parse_program",
    "polyvariant_specialise", "qa_transform", "split_facts", "strengthen",
    "tree_interpolants", "verify",
]
