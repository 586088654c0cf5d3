"""Numerical laboratory for weighted Fock spaces F^p_{alpha,w} on C^n.

Submodules
----------
numerics   points, cubes, balls, lattices and truncated quadrature
weights    weights, set masses and restricted Muckenhoupt diagnostics
measures   atom and density measures with ball and cube masses
spaces     entire functions built from Fock kernels, Fock quasi-norms
operators  Berezin-type, Toeplitz-type and projection operators
criteria   criterion functionals, lattice surrogates and decay tests
harness    two-sided norm estimates and the equivalence-band sweep
config, report, cli   configuration files, reports and the command line
"""

from focklab.errors import (
    ConfigError,
    DivergenceError,
    FockLabError,
    InvalidArgumentError,
    InvalidWeightError,
    NumericalDomainError,
)
from focklab.measures import Measure
from focklab.numerics import Ball, Cube, QuadratureGrid, lattice_points, point
from focklab.operators import BerezinParams
from focklab.spaces import EntireFunction, FockParams
from focklab.weights import Weight

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "BerezinParams",
    "ConfigError",
    "Cube",
    "DivergenceError",
    "EntireFunction",
    "FockLabError",
    "FockParams",
    "InvalidArgumentError",
    "InvalidWeightError",
    "Measure",
    "NumericalDomainError",
    "QuadratureGrid",
    "Weight",
    "lattice_points",
    "point",
]
