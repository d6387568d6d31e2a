"""Synthetic channel snapshots under the uncorrelated-scattering model.

Randomness comes from numpy's PCG64 bit generator. Snapshots are drawn in
fixed blocks of ``BLOCK`` and block ``b`` uses ``default_rng([seed, b])``,
so a batch depends only on its inputs. Complex Gaussians are built as
``(N(0,1) + j N(0,1)) * sqrt(var / 2)`` from ``Generator.standard_normal``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .estimators import GridDictionary, SketchConfig
from .manifold import UL, steering_matrix

__all__ = [
    "SnapshotBatch",
    "SketchedSnapshots",
    "generate_snapshots",
    "sample_covariance",
    "sketch_snapshots",
    "write_batch_csv",
    "read_batch_csv",
]

BLOCK = 256


@dataclass(frozen=True)
class SnapshotBatch:
    """``T x M`` array of channel vectors ``h(t)`` plus provenance."""

    snapshots: np.ndarray
    seed: int
    snr_db: float
    band: str = UL
    noise_var: float = 0.0

    @property
    def num_snapshots(self):
        return self.snapshots.shape[0]

    @property
    def num_antennas(self):
        return self.snapshots.shape[1]


@dataclass(frozen=True)
class SketchedSnapshots:
    """Sketched dictionaries and observations ``x(t) = B(t) h(t) + n(t)``.

    ``dicts`` is a shared ``m x G`` matrix for the identity sketch and a
    ``(T, m, G)`` stack otherwise.
    """

    dicts: np.ndarray
    observations: np.ndarray
    sketches: np.ndarray | None

    def pairs(self):
        T = self.observations.shape[0]
        if self.dicts.ndim == 2:
            return [(self.dicts, self.observations[t]) for t in range(T)]
        return [(self.dicts[t], self.observations[t]) for t in range(T)]


def _discretize(psf, sim_grid_size):
    pts, var = [psf.atoms[:, 0]], [psf.atoms[:, 1]]
    for a, b, c in psf.rects:
        d = (b - a) / sim_grid_size
        pts.append(a + d * (np.arange(sim_grid_size) + 0.5))
        var.append(np.full(sim_grid_size, c * d))
    return np.concatenate(pts), np.concatenate(var)


def _cgauss(rng, shape, var):
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z * np.sqrt(np.asarray(var) / 2.0)


def generate_snapshots(psf, cfg, T, snr_db=math.inf, seed=0, band=UL, sim_grid_size=4096):
    """Draw ``T`` i.i.d. snapshots ``h(t) = sum_i w_i(t) a(xi_i) + n(t)``.

    Args:
        psf: :class:`AngularPSF`; flat pieces are split into
            ``sim_grid_size`` midpoints carrying variance ``density * dxi``.
        cfg: :class:`ArrayConfig`.
        T: number of snapshots.
        snr_db: ``10 log10(trace(Sigma) / (M noise_var))``; ``inf`` disables noise.
        seed: integer seed.
        band: ``"ul"`` or ``"dl"`` steering vectors.
        sim_grid_size: points per flat piece (at least 256).
    """
    T = int(T)
    if T < 1:
        raise ValueError("T must be at least 1")
    if sim_grid_size < 256:
        raise ValueError("sim_grid_size must be at least 256")
    pts, var = _discretize(psf, int(sim_grid_size))
    A = steering_matrix(cfg, pts, band)
    M = cfg.num_antennas
    trace = M * psf.total_mass
    noise_var = 0.0 if math.isinf(snr_db) and snr_db > 0 else trace / (M * 10.0 ** (snr_db / 10.0))
    H = np.empty((T, M), dtype=complex)
    for b, start in enumerate(range(0, T, BLOCK)):
        n = min(BLOCK, T - start)
        rng = np.random.default_rng([int(seed), b])
        W = _cgauss(rng, (n, pts.size), var)
        Hb = W @ A.T
        if noise_var > 0:
            Hb += _cgauss(rng, (n, M), noise_var)
        H[start:start + n] = Hb
    H.setflags(write=False)
    return SnapshotBatch(snapshots=H, seed=int(seed), snr_db=float(snr_db), band=band, noise_var=noise_var)


def sample_covariance(batch):
    """``(1/T) sum_t h(t) h(t)^H``."""
    H = batch.snapshots if isinstance(batch, SnapshotBatch) else np.asarray(batch, dtype=complex)
    C = H.T @ H.conj() / H.shape[0]
    return 0.5 * (C + C.conj().T)


def sketch_snapshots(batch, sketch_cfg, dictionary, seed=0, noise_var=1.0):
    """Project snapshots with ``B(t)`` and add ``CN(0, noise_var I_m)`` noise.

    Args:
        batch: :class:`SnapshotBatch`.
        sketch_cfg: :class:`SketchConfig`; ``m`` defaults to ``M``.
        dictionary: :class:`GridDictionary` or ``M x G`` matrix ``A``.
        seed: seed for the sketch matrices and the noise.
        noise_var: per-entry noise variance (0 for noiseless sketches).

    Returns:
        SketchedSnapshots with ``dicts = B(t) A``.
    """
    if isinstance(sketch_cfg, dict):
        sketch_cfg = SketchConfig(**sketch_cfg)
    A = dictionary.matrix if isinstance(dictionary, GridDictionary) else np.asarray(dictionary, dtype=complex)
    H = batch.snapshots
    T, M = H.shape
    if A.shape[0] != M:
        raise ValueError("dictionary rows must equal the number of antennas")
    m = M if sketch_cfg.m is None else int(sketch_cfg.m)
    if m > M:
        raise ValueError(f"sketch dimension m={m} exceeds M={M}")
    rng = np.random.default_rng([int(seed), 0x5EED])
    if sketch_cfg.kind == "identity":
        if m != M:
            raise ValueError("identity sketch requires m = M")
        X = np.array(H, dtype=complex)
        dicts, B = A, None
    elif sketch_cfg.kind == "selection":
        idx = np.stack([np.sort(rng.permutation(M)[:m]) for _ in range(T)])
        X = np.take_along_axis(H, idx, axis=1)
        dicts = A[idx]
        B = np.zeros((T, m, M))
        np.put_along_axis(B, idx[:, :, None], 1.0, axis=2)
    else:
        B = _cgauss(rng, (T, m, M), 1.0 / m)
        X = np.einsum("tmk,tk->tm", B, H)
        dicts = np.einsum("tmk,kg->tmg", B, A)
    if noise_var > 0:
        X = X + _cgauss(rng, X.shape, noise_var)
    return SketchedSnapshots(dicts=dicts, observations=X, sketches=B)


def write_batch_csv(path, batch):
    """Long-format CSV with rows ``t,antenna,re,im``."""
    H = batch.snapshots
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "antenna", "re", "im"])
        for t in range(H.shape[0]):
            for k in range(H.shape[1]):
                w.writerow([t, k, repr(float(H[t, k].real)), repr(float(H[t, k].imag))])


def read_batch_csv(path, seed=0, snr_db=math.inf, band=UL):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    T = 1 + max(int(r["t"]) for r in rows)
    M = 1 + max(int(r["antenna"]) for r in rows)
    H = np.zeros((T, M), dtype=complex)
    for r in rows:
        H[int(r["t"]), int(r["antenna"])] = float(r["re"]) + 1j * float(r["im"])
    return SnapshotBatch(snapshots=H, seed=seed, snr_db=snr_db, band=band)
