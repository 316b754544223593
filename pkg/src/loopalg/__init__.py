"""loopalg: exact rational string-topology computations on Sullivan models."""

from .core import FreeCDGA, Generator, Element, Derivation, AlgebraMap, AlgebraError
from .loop_models import LoopModel, CyclicModel, build_L, build_E
from .model_io import parse_model, parse_element, ParseError

__all__ = [
    "FreeCDGA", "Generator", "Element", "Derivation", "AlgebraMap", "AlgebraError",
    "LoopModel", "CyclicModel", "build_L", "build_E",
    "parse_model", "parse_element", "ParseError",
]

__version__ = "0.1.0"
