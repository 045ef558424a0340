"""Exactly solvable two-dimensional Schrodinger operators from Moutard and
nonlocal Darboux transformations, with numerical verification."""

from .errors import *  # noqa: F401,F403
from .fields import GridData, GridSpec, Point2, ScalarField2, sample
from .moutard import SchrodingerPair, TransformRecord
from .recovery import NonlocalPotential, recover_q
from .catalog import CatalogEntry, build

__all__ = ["GridData", "GridSpec", "Point2", "ScalarField2", "sample", "SchrodingerPair",
           "TransformRecord", "NonlocalPotential", "recover_q", "CatalogEntry", "build"]
__version__ = "0.1.0"
