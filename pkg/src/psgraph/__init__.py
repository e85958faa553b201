"""Patterson-Sullivan, Wigner and Ruelle distributions on finite regular graphs."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .graph_core import RegularGraph, build_graph, named_graph, random_regular  # noqa: F401
from .spectral import SpectralParameter, eigh_decompose, spectral_parameter  # noqa: F401
from .resonant import coresonant_state, resonant_state  # noqa: F401
from .symbols import CylinderSymbol, symbol_constant, symbol_random  # noqa: F401
from .distributions import (  # noqa: F401
    make_context,
    patterson_sullivan,
    ruelle_projector,
    wigner,
)
