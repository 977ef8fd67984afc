"""Inquiry-driven modeling workbench.

Build a conceptual model of an ecological (or other agent-based)
phenomenon, compile it into a runnable simulation, seed its parameters
from species traits, run it stochastically or as a mean-field ODE, and
reconcile it against imported observations.
"""

from .model import (
    ConceptualModel,
    Entity,
    EntityKind,
    EntityParameters,
    InteractionParameters,
    Relation,
    RelationKind,
    apply_delta,
    complexity,
    diff_models,
    model_from_dict,
    model_from_json,
    model_to_dict,
    model_to_json,
    structural_equal,
    validate_model,
)

__version__ = "0.1.0"
