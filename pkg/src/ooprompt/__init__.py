"""ooprompt: prompts as structured, versioned, deployable objects."""

from .model import (
    Polarity,
    PromptObject,
    Property,
    PropertySpec,
    Provenance,
    Relation,
    Tier,
    Value,
    validate_object,
)
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [
    "Polarity",
    "PromptObject",
    "Property",
    "PropertySpec",
    "Provenance",
    "Relation",
    "Tier",
    "Value",
    "Workspace",
    "validate_object",
    "__version__",
]
