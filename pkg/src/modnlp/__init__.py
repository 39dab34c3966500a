"""modnlp: a modular solver for nonlinearly constrained nonconvex optimization.

Solvers are assembled from four interchangeable ingredients: a constraint
relaxation strategy, a subproblem method, a globalization strategy, and a
globalization mechanism.
"""

from .corpus import corpus_get, corpus_names
from .driver import Options, SolveResult, preset_options, solve
from .model import Model, check_derivatives, evaluate

__version__ = "0.1.0"

__all__ = [
    "Model",
    "Options",
    "SolveResult",
    "check_derivatives",
    "corpus_get",
    "corpus_names",
    "evaluate",
    "preset_options",
    "solve",
    "__version__",
]
