"""Entanglement entropy of free-fermion Fermi seas on the lattice."""

from .bounds import fejer_kernel, fhm_bound_exact, fhm_bound_quadrature, kernel_integral_constants
from .constructor import (
    GrowthTarget,
    build_exotic_sea,
    construct_for_target,
    growth_profile,
    lift_to_dimension,
    verify_entropy_target,
    verify_lambda_minorant,
)
from .errors import FermiSeaError, SpecError
from .fermi_sea import Grid, IntervalUnion, Product, lambda_measure, measure, overlap, translate
from .seaspec import dump_sea_spec, parse_sea_spec
from .spectrum import binary_entropy_eta, eigenvalues, entropy_of_state, trace_purity_bound
from .symbol import coefficient_table, fourier_coefficient, restricted_symbol

__version__ = "0.1.0"
