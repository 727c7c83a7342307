"""Spectral geometry on compact manifolds and a numerical check of the
Weak Weyl Law: eigenvalue counts versus metric-lattice cardinalities."""

__version__ = "0.1.0"

from .errors import (
    FitFailure,
    InvalidInputError,
    NotASamplingSetError,
    NumericalFailure,
    OutOfBandError,
    ParseError,
    SearchFailure,
    TruncationUnsafeError,
    UnsupportedModelError,
    WeylSamplError,
)
from .kernels import (
    SpectralMultiplier,
    counting_identity_check,
    gaussian_bound_fit,
    heat_diag,
    heat_diagnostics,
    heat_trace,
    kernel_diag,
    kernel_monotonicity_check,
    spectral_function,
    spectral_function_bounds,
)
from .lattices import Lattice, build_lattice, lattice_diagnostics, lattice_extremes, lattice_from_points
from .manifolds import (
    Circle,
    FlatTorus,
    Mesh,
    Sphere2,
    ball_constants,
    ball_volume,
    candidate_pool,
    geodesic_distance,
    make_manifold,
    quadrature,
)
from .sampling import find_gamma, poincare_constant, pp_constant, reconstruct, sampling_operator
from .spectra import (
    BandlimitedFunction,
    SpectralBasis,
    analytic_basis,
    bernstein_ratio,
    count_eigenvalues,
    mesh_basis,
    random_bandlimited,
)
from .weyl import WeylScanReport, weyl_asymptotic_check, weyl_scan
