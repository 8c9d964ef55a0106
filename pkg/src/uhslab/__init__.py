"""Desk-scale laboratory for an ultrahyperbolic Schrodinger evolution.

Subpackages cover the structured grid substrate, the exponential weight
machinery, the conjugated differential operators, implicit time evolution,
weighted-energy (Carleman) sweeps and the inverse-source experiments, plus a
CSV/JSON experiment runner.
"""

from uhslab.grid import ComplexField, GridSpec, Region, integrate
from uhslab.weight import WeightParams

__version__ = "0.1.0"

__all__ = [
    "ComplexField",
    "GridSpec",
    "Region",
    "WeightParams",
    "integrate",
    "__version__",
]
