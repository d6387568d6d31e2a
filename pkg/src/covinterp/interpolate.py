"""UL-to-DL interpolation: robust index set, DL column synthesis and width oracles."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .chebyshev import g_alpha, g_inverse
from .covariance import ToeplitzCovariance
from .estimators import SolverConfig, build_dictionary, measure_from_nnls, nnls_solve, stack_real
from .manifold import DL, UL, ula_lattice
from .psf import psf_fourier

__all__ = [
    "AliasingWarning",
    "TruncationMode",
    "InterpolationResult",
    "parse_mode",
    "feasible_index_set",
    "dof_tradeoff",
    "interpolate_dl",
    "run_algorithm1",
    "empirical_width_lower_bound",
    "empirical_minimax_error",
    "write_result_csv",
]


class AliasingWarning(UserWarning):
    """Raised (as a warning) when the array spacing violates ``rho < 1``."""


@dataclass(frozen=True)
class TruncationMode:
    """``kind="theory"`` keeps the robust index set; ``kind="fraction"`` drops the last fraction."""

    kind: str = "theory"
    fraction: float = 0.0

    def __post_init__(self):
        if self.kind not in ("theory", "fraction"):
            raise ValueError("mode kind must be 'theory' or 'fraction'")
        if not 0.0 <= self.fraction < 1.0:
            raise ValueError("fraction must lie in [0, 1)")

    def __str__(self):
        return "theory" if self.kind == "theory" else f"fraction={self.fraction:g}"


def parse_mode(mode):
    """Accept a :class:`TruncationMode`, ``"theory"`` or ``"fraction=<x>"``."""
    if isinstance(mode, TruncationMode):
        return mode
    text = str(mode).strip().lower()
    if text == "theory":
        return TruncationMode("theory")
    if text.startswith("fraction"):
        _, _, val = text.partition("=")
        return TruncationMode("fraction", float(val) if val else 0.1)
    raise ValueError(f"unknown truncation mode {mode!r}")


@dataclass
class InterpolationResult:
    sigma_dl_full: np.ndarray
    sigma_dl_truncated: np.ndarray
    kept_indices: np.ndarray
    mode: TruncationMode
    solver_report: object = None

    @property
    def kept_mask(self):
        mask = np.zeros(self.sigma_dl_full.size, dtype=bool)
        mask[self.kept_indices] = True
        return mask


def feasible_index_set(cfg):
    """Indices ``k <= M nu`` with ``sin(pi rho / 2) g(k / (M nu)) < 1``, capped at ``M - 1``.

    For ``rho >= 1`` only ``{0}`` is returned, with an :class:`AliasingWarning`.
    """
    M, nu, rho = cfg.num_antennas, cfg.carrier_ratio, cfg.oversampling
    if rho >= 1.0:
        warnings.warn(f"rho={rho} >= 1: no DL index is stably interpolable", AliasingWarning, stacklevel=2)
        return np.array([0])
    eta = math.sin(math.pi * rho / 2)
    kept = [0]
    for k in range(1, M):
        if k > M * nu:
            break
        if eta * g_alpha(min(k / (M * nu), 1.0)) < 1.0:
            kept.append(k)
    return np.array(kept)


def dof_tradeoff(M, nu, rho):
    """Robust fraction ``alpha``, DL coefficient count ``N`` and robust DoF ``D``.

    Returns:
        ``(alpha, N, D)`` with ``alpha = g^{-1}(1 / sin(pi rho / 2))``,
        ``N = M nu alpha`` and ``D = rho alpha``.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    alpha = g_inverse(1.0 / math.sin(math.pi * rho / 2))
    return alpha, M * nu * alpha, rho * alpha


def _kept_indices(cfg, mode):
    M = cfg.num_antennas
    if mode.kind == "theory":
        return feasible_index_set(cfg)
    n = max(1, int(math.ceil((1.0 - mode.fraction) * M - 1e-9)))
    return np.arange(n)


def interpolate_dl(mu, cfg, mode="theory"):
    """DL first column ``mu_check(k rho / nu)`` for all ``k``, then truncation per ``mode``."""
    mode = parse_mode(mode)
    full = np.asarray(psf_fourier(mu, ula_lattice(cfg, DL).points), dtype=complex)
    kept = _kept_indices(cfg, mode)
    trunc = np.zeros_like(full)
    trunc[kept] = full[kept]
    return InterpolationResult(full, trunc, kept, mode)


def run_algorithm1(sigma_ul, cfg, solver_cfg=None, mode="theory", x0=None):
    """UL first column to DL covariance through an NNLS-feasible measure.

    Args:
        sigma_ul: UL first column with ``sigma_ul[0] = 1``.
        cfg: :class:`ArrayConfig`.
        solver_cfg: :class:`SolverConfig` (dictionary size ``grid_factor * M``).
        mode: truncation mode.
        x0: optional NNLS starting point (used with ``method="apg"``).

    Returns:
        ``(InterpolationResult, ToeplitzCovariance)`` where the covariance is
        built from the truncated column. The NNLS report is attached to the
        result; a non-converged solve is reported, not raised.
    """
    sigma_ul = np.asarray(sigma_ul, dtype=complex).ravel()
    if sigma_ul.size != cfg.num_antennas:
        raise ValueError("sigma_ul length must equal M")
    if abs(sigma_ul[0] - 1.0) > 1e-9:
        raise ValueError("sigma_ul must be normalized so that sigma_ul[0] = 1")
    solver_cfg = solver_cfg or SolverConfig()
    dic = build_dictionary(cfg, solver_cfg.grid_factor * cfg.num_antennas)
    report = nnls_solve(dic, sigma_ul, tol=solver_cfg.tol, max_iter=solver_cfg.max_iter,
                        method=solver_cfg.method, x0=x0)
    mu = measure_from_nnls(report.solution, dic)
    result = interpolate_dl(mu, cfg, mode)
    result.solver_report = report
    return result, ToeplitzCovariance(result.sigma_dl_truncated)


def _width_lp(A, sigma, probe, feas_tol, directions):
    # Extreme values of Re(e^{-j phi} p^T s) over feasible s >= 0, sum s = 1.
    Aeq, beq = stack_real(A, sigma)
    G = A.shape[1]
    A_ub = np.vstack([Aeq, -Aeq, np.ones((1, G)), -np.ones((1, G))])
    b_ub = np.concatenate([beq + feas_tol, -beq + feas_tol, [1 + feas_tol], [-1 + feas_tol]])
    best, solved = 0.0, 0
    for phi in np.linspace(0.0, math.pi, directions, endpoint=False):
        c = np.real(np.exp(-1j * phi) * probe)
        ends = []
        for sign in (-1.0, 1.0):
            res = None
            for method in ("highs-ds", "highs-ipm"):
                res = linprog(sign * c, A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method=method)
                if res.status != 4:
                    break
            if res.status == 2:
                raise ValueError("UL samples are infeasible on the oracle grid")
            if res.status != 0:
                ends = None
                break
            ends.append(res.x)
        if ends is None:
            continue
        solved += 1
        best = max(best, abs(probe @ ends[0] - probe @ ends[1]))
    if solved == 0:
        raise ValueError("width LP failed in every direction")
    return best


def empirical_width_lower_bound(gamma, cfg, s, G=64, feas_tol=1e-9, directions=8):
    """Lower estimate of the width of the consistent set at probe ``s``.

    Searches over measures ``sum_i s_i delta(xi - xi_i)`` on a ``G``-point grid
    whose UL samples match those of ``gamma`` to ``feas_tol`` and returns the
    largest ``|mu1_check(s) - mu2_check(s)|`` found, obtained by maximizing and
    minimizing ``Re(e^{-j phi} mu_check(s))`` with linear programs.

    Raises:
        ValueError: if ``s`` is outside ``[0, M rho]`` or no feasible grid
            measure exists.
    """
    M, rho = cfg.num_antennas, cfg.oversampling
    if s < 0 or s > M * rho * (1 + 1e-12):
        raise ValueError(f"probe s must lie in [0, {M * rho}]")
    dic = build_dictionary(cfg, G)
    sigma = np.asarray(psf_fourier(gamma, ula_lattice(cfg, UL).points), dtype=complex)
    probe = np.exp(1j * math.pi * s * dic.grid)
    return _width_lp(dic.matrix, sigma, probe, feas_tol, directions)


def empirical_minimax_error(M, rho, s, part="real", G=2001):
    """Best worst-case error of a linear estimator on a fine ``xi`` grid.

    ``part="real"`` fits ``cos(pi s xi)`` with ``cos(pi k rho xi)``, ``k < M``;
    ``part="imag"`` fits ``sin(pi s xi)`` with ``sin(pi k rho xi)``. Solved as
    a Chebyshev (minimax) LP on ``G`` points of ``[-1, 1]``.
    """
    if part not in ("real", "imag"):
        raise ValueError("part must be 'real' or 'imag'")
    xi = np.linspace(-1.0, 1.0, G)
    k = np.arange(M)
    if part == "real":
        target = np.cos(math.pi * s * xi)
        basis = np.cos(math.pi * rho * np.outer(xi, k))
    else:
        target = np.sin(math.pi * s * xi)
        basis = np.sin(math.pi * rho * np.outer(xi, k[1:]))
        if basis.shape[1] == 0:
            return float(np.max(np.abs(target)))
    n = basis.shape[1]
    # Variables (c, t): minimize t subject to |target - basis c| <= t.
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    ones = np.ones((G, 1))
    A_ub = np.vstack([np.hstack([-basis, -ones]), np.hstack([basis, -ones])])
    b_ub = np.concatenate([-target, target])
    bounds = [(None, None)] * n + [(0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"minimax LP failed: {res.message}")
    return float(res.x[-1])


def write_result_csv(path, result, truth=None):
    """Rows ``k,re_full,im_full,re_trunc,im_trunc,kept_flag,abs_error_if_truth_known``.

    The error column compares the truncated column with ``truth`` and is
    left empty when no truth is given.
    """
    mask = result.kept_mask
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "re_full", "im_full", "re_trunc", "im_trunc", "kept_flag", "abs_error_if_truth_known"])
        for k, (f, t) in enumerate(zip(result.sigma_dl_full, result.sigma_dl_truncated)):
            err = "" if truth is None else repr(float(abs(t - truth[k])))
            w.writerow([k, repr(float(f.real)), repr(float(f.imag)), repr(float(t.real)),
                        repr(float(t.imag)), int(mask[k]), err])
