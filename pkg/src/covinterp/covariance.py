"""Toeplitz covariance matrices, eigen-power profiles and the distortion metric."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, toeplitz

from .manifold import UL, ula_lattice
from .psf import sample_on_lattice

__all__ = [
    "ToeplitzCovariance",
    "PowerDistribution",
    "covariance_from_psf",
    "toeplitzify",
    "eigen_power",
    "eigen_basis",
    "captured_power",
    "distortion",
    "los_attenuation",
    "write_covariance_csv",
    "read_covariance_csv",
    "write_matrix_csv",
]

HERMITIAN_TOL = 1e-8
PSD_TOL = 1e-8
UNITARY_TOL = 1e-8


@dataclass(frozen=True)
class ToeplitzCovariance:
    """Hermitian Toeplitz matrix stored by its first column ``sigma``."""

    first_column: np.ndarray

    def __post_init__(self):
        col = np.array(self.first_column, dtype=complex).ravel()
        if col.size == 0:
            raise ValueError("first column must be non-empty")
        if not np.all(np.isfinite(col)):
            raise ValueError("first column must be finite")
        if abs(col[0].imag) > HERMITIAN_TOL * max(1.0, abs(col[0])):
            raise ValueError("sigma[0] must be real")
        col[0] = col[0].real
        col.setflags(write=False)
        object.__setattr__(self, "first_column", col)

    @property
    def size(self):
        return self.first_column.size

    @property
    def trace(self):
        return float(self.size * self.first_column[0].real)

    def matrix(self):
        """Dense matrix with ``T[k, l] = sigma[k - l]`` and ``sigma[-m] = conj(sigma[m])``."""
        c = self.first_column
        return toeplitz(c, c.conj())


@dataclass(frozen=True)
class PowerDistribution:
    """Normalized non-negative power profile.

    Profiles derived from a matrix's own eigenvalues are sorted
    non-increasing. Captured-power profiles keep the order of the basis
    they were measured in; ``is_sorted`` tells the two apart.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("power distribution must be non-empty")
        if np.any(v < 0):
            raise ValueError("power values must be non-negative")
        if abs(v.sum() - 1.0) > 1e-10:
            raise ValueError("power values must sum to one")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def is_sorted(self):
        return bool(np.all(np.diff(self.values) <= 0))

    def cumulative(self):
        """``eta(k) = sum_{i <= k} p_i`` for ``k = 1..M``."""
        return np.cumsum(self.values)

    @classmethod
    def from_weights(cls, w):
        w = np.asarray(w, dtype=float)
        total = w.sum()
        if not total > 0:
            raise ValueError("weights have no positive mass")
        return cls(w / total)


def covariance_from_psf(psf, cfg, band=UL):
    """Covariance whose first column is the PSF transform on the ``band`` lattice."""
    return ToeplitzCovariance(sample_on_lattice(psf, ula_lattice(cfg, band)).values)


def toeplitzify(sample_cov):
    """Project a Hermitian matrix onto Toeplitz form by averaging subdiagonals.

    Raises:
        ValueError: if the input is not square or not Hermitian to 1e-8
            (relative to its largest entry).
    """
    C = np.asarray(sample_cov, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("sample covariance must be square")
    scale = max(1.0, float(np.max(np.abs(C))))
    if np.max(np.abs(C - C.conj().T)) > HERMITIAN_TOL * scale:
        raise ValueError("sample covariance is not Hermitian")
    M = C.shape[0]
    col = np.array([np.mean(np.diagonal(C, -m)) for m in range(M)])
    return ToeplitzCovariance(col)


def _as_matrix(cov):
    if isinstance(cov, ToeplitzCovariance):
        return cov.matrix()
    return np.asarray(cov, dtype=complex)


def _fix_phase(U):
    # Make the first entry of magnitude > 1e-12 in each column real positive.
    U = U.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            U[:, j] = col / ph
    return U


def eigen_basis(cov):
    """Eigenvalues and eigenvectors sorted by signed eigenvalue, largest first.

    Works for indefinite matrices (e.g. truncated estimates); eigenvector
    phases are normalized so that results are reproducible.
    """
    S = _as_matrix(cov)
    w, U = eigh(S)
    order = np.argsort(-w, kind="stable")
    return w[order], _fix_phase(U[:, order])


def eigen_power(cov):
    """Eigenbasis and normalized eigen-power profile of a PSD covariance.

    Returns:
        ``(U, p)`` where the columns of ``U`` are orthonormal eigenvectors
        and ``p`` is the sorted :class:`PowerDistribution`.

    Raises:
        ValueError: when an eigenvalue is below ``-1e-8 * trace / M``.
    """
    S = _as_matrix(cov)
    w, U = eigen_basis(S)
    scale = max(abs(np.trace(S).real) / S.shape[0], np.finfo(float).tiny)
    if w[-1] < -PSD_TOL * scale:
        raise ValueError(f"covariance is indefinite (min eigenvalue {w[-1]:.3e})")
    return U, PowerDistribution.from_weights(np.clip(w, 0.0, None))


def captured_power(true_cov, estimated_basis):
    """Power ``q_i = u_i^H Sigma u_i`` captured by each basis vector, normalized.

    The result keeps the column order of ``estimated_basis``.
    """
    S = _as_matrix(true_cov)
    U = np.asarray(estimated_basis, dtype=complex)
    if U.shape != S.shape:
        raise ValueError("basis and covariance dimensions differ")
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[1]))) > UNITARY_TOL:
        raise ValueError("estimated basis is not unitary")
    q = np.real(np.einsum("ik,ij,jk->k", U.conj(), S, U))
    tol = PSD_TOL * max(abs(np.trace(S).real) / S.shape[0], np.finfo(float).tiny)
    if np.any(q < -tol):
        raise ValueError("true covariance is indefinite")
    return PowerDistribution.from_weights(np.clip(q, 0.0, None))


def distortion(p, p_hat):
    """Worst relative loss of cumulative power, ``max_k (eta_p(k) - eta_phat(k)) / eta_p(k)``."""
    a = p.values if isinstance(p, PowerDistribution) else np.asarray(p, dtype=float)
    b = p_hat.values if isinstance(p_hat, PowerDistribution) else np.asarray(p_hat, dtype=float)
    if a.shape != b.shape:
        raise ValueError("power distributions have different lengths")
    ea, eb = np.cumsum(a), np.cumsum(b)
    gap = np.max((ea - eb) / ea)
    return float(min(max(gap, 0.0), 1.0))


def los_attenuation(nu, M, theta0, theta_max, oversampling=None):
    """Beamforming gain loss ``|a_ul^H a_dl| / M`` for a single line-of-sight path.

    With the default ``oversampling=None`` this is the closed form
    ``|sin(M pi (1-nu) r)| / (M |sin(pi (1-nu) r)|)``, ``r = sin(theta0)/sin(theta_max)``,
    which corresponds to an element spacing of ``lambda_dl / sin(theta_max)``
    (``rho = 2 nu``). Passing ``oversampling`` evaluates the same Dirichlet
    kernel for a general spacing.
    """
    if abs(theta0) > theta_max + 1e-15:
        raise ValueError("theta0 must lie in [-theta_max, theta_max]")
    if M < 1:
        raise ValueError("M must be positive")
    r = math.sin(theta0) / math.sin(theta_max)
    if oversampling is None:
        half = math.pi * (1.0 - nu) * r
    else:
        half = 0.5 * math.pi * oversampling * (1.0 / nu - 1.0) * r
    den = M * math.sin(half)
    if abs(den) < 1e-300 or abs(half) < 1e-12:
        return 1.0
    # Exact multiples of pi in the denominator: the kernel is 1 there too.
    if abs(math.sin(half)) < 1e-14:
        return 1.0
    return min(abs(math.sin(M * half)) / abs(den), 1.0)


def write_covariance_csv(path, cov):
    """Write a first column as CSV rows ``index,re,im``."""
    col = cov.first_column if isinstance(cov, ToeplitzCovariance) else np.asarray(cov, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for k, v in enumerate(col):
            w.writerow([k, repr(float(v.real)), repr(float(v.imag))])


def read_covariance_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no rows")
    rows.sort(key=lambda r: int(r["index"]))
    if [int(r["index"]) for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: indices must be 0..M-1")
    return np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])


def write_matrix_csv(path, mat):
    """Full matrix dump for debugging: one CSV row per matrix row, ``re+imj`` cells."""
    mat = _as_matrix(mat)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in mat:
            w.writerow([f"{v.real!r}{v.imag:+}j" for v in row])
