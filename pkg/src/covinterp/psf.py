"""Angular power spread functions and their Fourier transforms."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .manifold import SamplingSet

__all__ = [
    "AngularPSF",
    "FourierSamples",
    "psf_fourier",
    "sample_on_lattice",
    "standard_rect_psf",
]


@dataclass(frozen=True)
class AngularPSF:
    """Positive measure on ``[-1, 1]`` made of point masses and flat densities.

    ``atoms`` is an ``(n, 2)`` array of ``(xi, mass)`` rows and ``rects`` an
    ``(m, 3)`` array of ``(a, b, density)`` rows. The measure is normalized
    to unit total mass at construction.
    """

    atoms: np.ndarray
    rects: np.ndarray

    def __init__(self, atoms=(), rects=(), normalize=True):
        atoms = np.array(atoms, dtype=float).reshape(-1, 2)
        rects = np.array(rects, dtype=float).reshape(-1, 3)
        if np.any(np.abs(atoms[:, 0]) > 1.0):
            raise ValueError("atom locations must lie in [-1, 1]")
        if np.any(atoms[:, 1] <= 0.0):
            raise ValueError("atom masses must be positive")
        if np.any(rects[:, 0] < -1.0) or np.any(rects[:, 1] > 1.0):
            raise ValueError("rect intervals must lie in [-1, 1]")
        if np.any(rects[:, 1] <= rects[:, 0]):
            raise ValueError("rect intervals must be non-degenerate")
        if np.any(rects[:, 2] <= 0.0):
            raise ValueError("rect densities must be positive")
        total = atoms[:, 1].sum() + np.sum(rects[:, 2] * (rects[:, 1] - rects[:, 0]))
        if not total > 0:
            raise ValueError("measure has zero total mass")
        if normalize:
            atoms[:, 1] /= total
            rects[:, 2] /= total
        atoms.setflags(write=False)
        rects.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "rects", rects)

    @property
    def total_mass(self):
        return float(self.atoms[:, 1].sum() + np.sum(self.rects[:, 2] * (self.rects[:, 1] - self.rects[:, 0])))

    @classmethod
    def from_atoms(cls, locations, masses):
        return cls(atoms=np.column_stack([locations, masses]))

    def to_dict(self):
        return {
            "atoms": [{"xi": float(x), "mass": float(m)} for x, m in self.atoms],
            "rects": [{"a": float(a), "b": float(b), "density": float(c)} for a, b, c in self.rects],
        }

    @classmethod
    def from_dict(cls, data):
        atoms = [(d["xi"], d["mass"]) for d in data.get("atoms", [])]
        rects = [(d["a"], d["b"], d["density"]) for d in data.get("rects", [])]
        return cls(atoms=atoms, rects=rects)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def fourier(self, x):
        return psf_fourier(self, x)


@dataclass(frozen=True)
class FourierSamples:
    points: np.ndarray
    values: np.ndarray


def psf_fourier(psf, x):
    """Evaluate ``int exp(j pi xi x) psf(d xi)`` at scalar or array ``x``.

    Each flat piece on ``[a, b]`` with density ``c`` contributes
    ``c (b - a) exp(j pi m x) sinc(h x)`` with midpoint ``m`` and half-width
    ``h``, which equals ``c (e^{j pi b x} - e^{j pi a x}) / (j pi x)`` but
    stays accurate as ``x -> 0``.
    """
    x_arr = np.asarray(x, dtype=float)
    out = np.zeros(x_arr.shape, dtype=complex)
    for xi, mass in psf.atoms:
        out += mass * np.exp(1j * math.pi * xi * x_arr)
    for a, b, c in psf.rects:
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        out += c * (b - a) * np.exp(1j * math.pi * mid * x_arr) * np.sinc(half * x_arr)
    if np.ndim(x) == 0:
        return complex(out)
    return out


def sample_on_lattice(psf, lattice):
    """Fourier samples on the points of a 1-D :class:`SamplingSet`."""
    pts = lattice.points if isinstance(lattice, SamplingSet) else np.asarray(lattice, dtype=float)
    if pts.ndim != 1:
        raise ValueError("sample_on_lattice expects a 1-D sampling set")
    if not np.all(np.isfinite(pts)):
        raise ValueError("lattice points must be finite")
    return FourierSamples(points=pts.copy(), values=psf_fourier(psf, pts))


def standard_rect_psf():
    """Piecewise-constant PSF ``rect[0.6, 0.8] + 4 rect[0.8, 1]`` (unit mass)."""
    return AngularPSF(rects=[(0.6, 0.8, 1.0), (0.8, 1.0, 4.0)])
