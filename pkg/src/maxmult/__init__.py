"""maxmult: dyadic-grid experiments for maximal multiplier operators."""

from .grid import DyadicGrid, DyadicInterval, Signal, dft, idft, lp_norm
from .variation import VarSequence, rvar_norm, rvar_seminorm
from .multipliers import (MultiplierFamily, build_family, build_system,
                          maximal_projection)
from .windows import WindowSystem, coefficient_field, max_exp_sum
from .tiles import Tile, TileSet, Tree, random_convex_tileset, size_decompose
from .harness import (ExperimentConfig, run_decomposition_audit,
                      run_entropy_scaling, run_lower_bound, run_upper_scaling)

__version__ = "0.1.0"

__all__ = [
    "DyadicGrid", "DyadicInterval", "Signal", "dft", "idft", "lp_norm",
    "VarSequence", "rvar_norm", "rvar_seminorm",
    "MultiplierFamily", "build_family", "build_system", "maximal_projection",
    "WindowSystem", "coefficient_field", "max_exp_sum",
    "Tile", "TileSet", "Tree", "random_convex_tileset", "size_decompose",
    "ExperimentConfig", "run_decomposition_audit", "run_entropy_scaling",
    "run_lower_bound", "run_upper_scaling",
]
