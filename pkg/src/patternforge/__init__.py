"""Design patterns as typed graphs with replicable regions."""

from .counts import EquationSystem, enumerate_solutions, minimal_solutions, parse_system
from .dsl import parse_model, parse_pattern, parse_pattern_file
from .expansion import Expansion, expand
from .graph import GraphMorphism, TypedGraph, find_injective_morphisms
from .matcher import (
    MatchConfig, Occurrence, check_constraints, check_root_cardinality, check_sync, find_occurrences, satisfies,
)
from .pattern import Pattern, validate_pattern

__version__ = "0.1.0"

__all__ = [
    "EquationSystem", "Expansion", "GraphMorphism", "MatchConfig", "Occurrence", "Pattern", "TypedGraph",
    "check_constraints", "check_root_cardinality", "check_sync", "enumerate_solutions", "expand",
    "find_injective_morphisms", "find_occurrences", "minimal_solutions", "parse_model", "parse_pattern",
    "parse_pattern_file", "parse_system", "satisfies", "validate_pattern",
]
