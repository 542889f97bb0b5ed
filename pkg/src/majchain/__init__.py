"""Majorization order on grid densities and certification of majorized chains."""

from .chain import (ChainReport, verify_all, verify_chain, verify_lemma1_equivalence,
                    verify_msl, verify_sandwich)
from .convex import (Battery, ConvexTestFn, icx_battery, lambda_phi, schur_samples,
                     standard_battery)
from .core import (Density, Grid, GridMismatch, LengthMismatch, Relation, Verdict,
                   compare_continuous, compare_discrete, compare_weak,
                   decreasing_rearrangement, hinge_witness)
from .trajectory import Trajectory, load_trajectory, save_trajectory

__version__ = "0.1.0"

__all__ = [
    "Battery", "ChainReport", "ConvexTestFn", "Density", "Grid", "GridMismatch",
    "LengthMismatch", "Relation", "Trajectory", "Verdict", "compare_continuous",
    "compare_discrete", "compare_weak", "decreasing_rearrangement", "hinge_witness",
    "icx_battery", "lambda_phi", "load_trajectory", "save_trajectory", "schur_samples",
    "standard_battery", "verify_all", "verify_chain", "verify_lemma1_equivalence",
    "verify_msl", "verify_sandwich",
]
