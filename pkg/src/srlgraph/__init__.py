"""Span-based semantic role labeling as second-order semantic graph parsing."""

from .core import (
    Argument,
    CompositeLabel,
    Edge,
    LabelInventory,
    PredicateFrame,
    SemGraph,
    Sentence,
    Span,
    SrlError,
    SrlStructure,
    Token,
    validate_srl,
)
from .transform import dep_srl_to_graph, detect_conflicts, graph_to_dep_srl, graph_to_srl, srl_to_graph

__version__ = "0.1.0"
