"""Spectral asymptotics of polynomially compact boundary operators.

The package computes, by two independent routes, the rate at which
discrete eigenvalues of a zero order polynomially compact operator
accumulate at the points of its essential spectrum:

* a symbol route that manipulates two-term matrix symbols, extracts the
  order 0 and order -1 symbols of the elastic Neumann-Poincare operator
  from its kernel, and integrates signed power traces over the cosphere
  bundle;
* a spectral route that discretizes the operator on a closed surface
  with a singularity-corrected Nystrom rule, clusters eigenvalues near
  the essential spectrum and fits counting-function power laws.

The worked case is the Neumann-Poincare operator of 3D linear
elasticity, whose essential spectrum is {0, +k, -k} with
k = mu / (2 (2 mu + lambda)).
"""

from .symbols import (
    TwoTermSymbol,
    SpectralPolynomial,
    identity_symbol,
    compose,
    shift,
    projector_polynomial,
    degenerate_polynomial,
    build_bi_symbol,
    subprincipal,
    detect_degeneracy,
)
from .elasticity import (
    LameParams,
    kelvin_matrix,
    np_kernel,
    single_layer_kernel,
    np_principal_symbol,
    single_layer_symbol,
    lambda_projector,
    symmetrizer_symbols,
    essential_spectrum,
    sphere_exact_eigenvalues,
)
from .surfaces import (
    ParametrizedSurface,
    CCoordinateChart,
    make_surface,
    principal_curvatures,
    c_chart,
    consistent_chart,
    surface_quadrature,
)
from .extraction import (
    HomogeneousKernelPart,
    SymbolField,
    chart_kernel,
    homogeneous_parts,
    angular_fourier_symbol,
    np_symbol_field,
)
from .asymptotics import (
    AsymptoticReport,
    signed_power_trace,
    coefficient_integral,
    counting_to_sequence,
)
from .spectral import (
    SpectralSample,
    assemble_np_matrix,
    assemble_single_layer_matrix,
    spectrum,
    symmetrize,
    cluster_and_count,
    fit_power_law,
    compactness_check,
)

__all__ = [
    "TwoTermSymbol",
    "SpectralPolynomial",
    "identity_symbol",
    "compose",
    "shift",
    "projector_polynomial",
    "degenerate_polynomial",
    "build_bi_symbol",
    "subprincipal",
    "detect_degeneracy",
    "LameParams",
    "kelvin_matrix",
    "np_kernel",
    "single_layer_kernel",
    "np_principal_symbol",
    "single_layer_symbol",
    "lambda_projector",
    "symmetrizer_symbols",
    "essential_spectrum",
    "sphere_exact_eigenvalues",
    "ParametrizedSurface",
    "CCoordinateChart",
    "make_surface",
    "principal_curvatures",
    "c_chart",
    "consistent_chart",
    "surface_quadrature",
    "HomogeneousKernelPart",
    "SymbolField",
    "chart_kernel",
    "homogeneous_parts",
    "angular_fourier_symbol",
    "np_symbol_field",
    "AsymptoticReport",
    "signed_power_trace",
    "coefficient_integral",
    "counting_to_sequence",
    "SpectralSample",
    "assemble_np_matrix",
    "assemble_single_layer_matrix",
    "spectrum",
    "symmetrize",
    "cluster_and_count",
    "fit_power_law",
    "compactness_check",
]

__version__ = "0.1.0"
