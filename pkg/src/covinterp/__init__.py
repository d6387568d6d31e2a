"""Uplink-to-downlink covariance interpolation for uniform linear arrays."""
from .chebyshev import cheb_coeffs, g_alpha, g_inverse, f_alpha, width_bound
from .covariance import (
    PowerDistribution,
    ToeplitzCovariance,
    captured_power,
    covariance_from_psf,
    distortion,
    eigen_power,
    los_attenuation,
    toeplitzify,
)
from .estimators import SolverConfig, build_dictionary, group_l21_solve, nnls_solve
from .interpolate import dof_tradeoff, feasible_index_set, interpolate_dl, run_algorithm1
from .manifold import DL, UL, ArrayConfig, ArrayGeometry, difference_set, steering_vector, ula_lattice
from .psf import AngularPSF, psf_fourier, standard_rect_psf
from .simchannel import generate_snapshots, sample_covariance

__version__ = "0.1.0"
