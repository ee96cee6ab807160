"""Workbench for finite structures, amalgamation and Fraïssé-style constructions."""

from .classes import ClassSpec, catalog, get_class, validate
from .errors import (ChainError, ConstructionError, ParseError, RejectedInput, ResourceLimit,
                     WorkbenchError)
from .morphisms import Embedding, automorphisms, find_embeddings, homogeneity_check
from .structures import FinStructure, OnePointExtension, deserialize, serialize

__all__ = [
    "ClassSpec", "catalog", "get_class", "validate",
    "ChainError", "ConstructionError", "ParseError", "RejectedInput", "ResourceLimit",
    "WorkbenchError",
    "Embedding", "automorphisms", "find_embeddings", "homogeneity_check",
    "FinStructure", "OnePointExtension", "deserialize", "serialize",
]
