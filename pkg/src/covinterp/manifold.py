"""Array configurations, steering vectors and spatial sampling sets.

All angular quantities live in the normalized coordinate
``xi = sin(theta) / sin(theta_max)`` in ``[-1, 1]``; positions are measured
in units of half the UL wavelength.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "UL",
    "DL",
    "ArrayConfig",
    "ArrayGeometry",
    "SamplingSet",
    "steering_vector",
    "steering_matrix",
    "ula_lattice",
    "difference_set",
    "scale_sampling_set",
]

UL = "ul"
DL = "dl"

DEDUP_TOL = 1e-9


def _check_band(band):
    band = str(band).lower()
    if band not in (UL, DL):
        raise ValueError(f"band must be 'ul' or 'dl', got {band!r}")
    return band


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array operated on an UL and a DL carrier.

    Args:
        num_antennas: number of elements ``M``.
        oversampling: spatial oversampling factor ``rho`` in ``(0, 2)``. Values
            ``>= 1`` violate the sampling condition and are flagged by
            :attr:`aliasing`, but are accepted so that grating-lobe
            experiments can be expressed.
        carrier_ratio: ``nu = f_ul / f_dl`` in ``(0, 2)``.
        theta_max: half-width of the scanned angular range (radians).
    """

    num_antennas: int
    oversampling: float
    carrier_ratio: float = 0.9
    theta_max: float = math.pi / 3

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise ValueError("num_antennas must be a positive integer")
        object.__setattr__(self, "num_antennas", int(self.num_antennas))
        if not 0.0 < self.oversampling < 2.0:
            raise ValueError("oversampling must lie in (0, 2)")
        if not 0.0 < self.carrier_ratio < 2.0:
            raise ValueError("carrier_ratio must lie in (0, 2)")
        if not 0.0 < self.theta_max <= math.pi / 2 + 1e-15:
            raise ValueError("theta_max must lie in (0, pi/2]")

    @property
    def spacing(self):
        """Physical antenna spacing in UL wavelengths."""
        return self.oversampling / (2.0 * math.sin(self.theta_max))

    @property
    def aliasing(self):
        """True when ``rho >= 1`` (grating lobes in the UL band)."""
        return self.oversampling >= 1.0

    @property
    def warnings(self):
        flags = []
        if self.aliasing:
            flags.append("oversampling>=1: spatial sampling condition violated")
        if self.oversampling > self.carrier_ratio:
            flags.append("oversampling>carrier_ratio: grating lobes in the DL band")
        return tuple(flags)

    def lattice_step(self, band):
        """Distance between consecutive Fourier samples for ``band``."""
        band = _check_band(band)
        if band == UL:
            return self.oversampling
        return self.oversampling / self.carrier_ratio

    def to_dict(self):
        return {
            "num_antennas": self.num_antennas,
            "oversampling": self.oversampling,
            "carrier_ratio": self.carrier_ratio,
            "theta_max": self.theta_max,
        }


def steering_vector(cfg, xi, band=UL):
    """Normalized array response ``a(xi)`` with entries ``exp(j k pi step xi)``.

    ``step`` is ``rho`` for the UL and ``rho / nu`` for the DL.
    """
    xi = float(xi)
    if abs(xi) > 1.0:
        raise ValueError(f"xi must lie in [-1, 1], got {xi}")
    step = cfg.lattice_step(band)
    k = np.arange(cfg.num_antennas)
    return np.exp(1j * math.pi * step * xi * k)


def steering_matrix(cfg, grid, band=UL):
    """Columns are steering vectors evaluated on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if np.any(np.abs(grid) > 1.0):
        raise ValueError("grid points must lie in [-1, 1]")
    step = cfg.lattice_step(band)
    k = np.arange(cfg.num_antennas)
    return np.exp(1j * math.pi * step * np.outer(k, grid))


@dataclass(frozen=True)
class SamplingSet:
    """Deduplicated set of Fourier sampling positions.

    ``points`` has shape ``(n,)`` for 1-D lattices and ``(n, 3)`` for
    difference sets of general geometries.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def is_symmetric(self, tol=1e-8):
        pts = self.points.reshape(len(self), -1)
        dist, _ = cKDTree(pts).query(-pts)
        return bool(np.all(dist <= tol))


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna positions ``r_k`` (3-vectors, units of ``lambda_ul / 2``)."""

    positions: np.ndarray = field(repr=False)

    def __post_init__(self):
        pos = np.atleast_2d(np.array(self.positions, dtype=float))
        if pos.size == 0:
            raise ValueError("geometry must contain at least one antenna")
        if pos.shape[1] != 3:
            raise ValueError("positions must be 3-vectors")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def num_antennas(self):
        return self.positions.shape[0]

    @classmethod
    def ula(cls, num_antennas, oversampling, axis=(1.0, 0.0, 0.0)):
        """ULA with positions ``k * rho * axis``."""
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        k = np.arange(num_antennas)[:, None]
        return cls(k * oversampling * axis[None, :])

    @classmethod
    def circular(cls, num_antennas, radius):
        """Uniform circular array in the xy-plane."""
        phi = 2 * np.pi * np.arange(num_antennas) / num_antennas
        pos = np.stack([radius * np.cos(phi), radius * np.sin(phi), np.zeros_like(phi)], axis=1)
        return cls(pos)

    def translated(self, offset):
        return ArrayGeometry(self.positions + np.asarray(offset, dtype=float)[None, :])


def ula_lattice(cfg, band=UL):
    """Fourier sampling positions ``{k * step : k in [M]}`` of a ULA."""
    return SamplingSet(np.arange(cfg.num_antennas) * cfg.lattice_step(band))


def _dedup(points, tol):
    # Union-find over tol-close pairs; representative is the lowest index.
    tree = cKDTree(points)
    parent = np.arange(points.shape[0])

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in tree.query_pairs(tol):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(points.shape[0])])
    return points[np.unique(roots)]


def difference_set(geom, tol=DEDUP_TOL):
    """Minkowski difference ``{r_k - r_l}`` of an array geometry.

    Points closer than ``tol`` are merged. The result is sorted
    lexicographically and always contains the origin.
    """
    pos = geom.positions
    diffs = (pos[:, None, :] - pos[None, :, :]).reshape(-1, 3)
    # Exact zeros for the diagonal so the origin survives dedup verbatim.
    diffs[:: pos.shape[0] + 1] = 0.0
    pts = _dedup(diffs, tol)
    order = np.lexsort(pts.T[::-1])
    return SamplingSet(pts[order])


def scale_sampling_set(sset, factor):
    """Multiply every sampling position by ``factor`` (e.g. ``1/nu`` for DL)."""
    if not factor > 0:
        raise ValueError("factor must be positive")
    return SamplingSet(sset.points * factor)
