"""Feasibility solvers: NNLS on a steering dictionary and group-sparse L21 recovery."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls as _scipy_nnls

from .manifold import UL, steering_matrix
from .psf import AngularPSF

__all__ = [
    "GridDictionary",
    "SolverReport",
    "SketchConfig",
    "SolverConfig",
    "build_dictionary",
    "stack_real",
    "nnls_solve",
    "group_l21_solve",
    "measure_from_weights",
    "measure_from_nnls",
]

NNLS_METHODS = ("active_set", "apg")
SKETCH_KINDS = ("identity", "selection", "gaussian")


@dataclass(frozen=True)
class GridDictionary:
    """UL steering vectors on a uniform ``xi`` grid (columns of ``matrix``)."""

    grid: np.ndarray
    matrix: np.ndarray

    @property
    def size(self):
        return self.grid.size


@dataclass
class SolverReport:
    solution: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    method: str = ""
    history: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class SketchConfig:
    kind: str = "identity"
    m: int | None = None

    def __post_init__(self):
        if self.kind not in SKETCH_KINDS:
            raise ValueError(f"sketch kind must be one of {SKETCH_KINDS}")
        if self.m is not None and int(self.m) < 1:
            raise ValueError("sketch dimension m must be positive")


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings, loadable from the JSON object used by the CLI.

    ``max_iter=None`` means ``50 * G`` for NNLS and 5000 for group-L21.
    """

    tol: float = 1e-8
    max_iter: int | None = None
    iota_scale: float = 1.0
    sketch: SketchConfig = SketchConfig()
    method: str = "active_set"
    grid_factor: int = 4

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.method not in NNLS_METHODS:
            raise ValueError(f"method must be one of {NNLS_METHODS}")
        if self.grid_factor < 1:
            raise ValueError("grid_factor must be >= 1")

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        sketch = data.pop("sketch", None)
        known = {"tol", "max_iter", "iota_scale", "method", "grid_factor"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown solver keys: {sorted(unknown)}")
        return cls(sketch=SketchConfig(**(sketch or {})), **data)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        return {
            "tol": self.tol,
            "max_iter": self.max_iter,
            "iota_scale": self.iota_scale,
            "method": self.method,
            "grid_factor": self.grid_factor,
            "sketch": {"kind": self.sketch.kind, "m": self.sketch.m},
        }


def build_dictionary(cfg, G=None):
    """Dictionary on the grid ``xi_i = -1 + 2 i / (G - 1)``; ``G`` defaults to ``4 M``.

    Raises:
        ValueError: if ``G < M``.
    """
    M = cfg.num_antennas
    G = 4 * M if G is None else int(G)
    if G < M:
        raise ValueError(f"grid size G={G} is smaller than M={M}")
    if G == 1:
        grid = np.zeros(1)
    else:
        grid = -1.0 + 2.0 * np.arange(G) / (G - 1)
        grid[-1] = 1.0
    return GridDictionary(grid=grid, matrix=steering_matrix(cfg, grid, UL))


def stack_real(A, b):
    """Real form ``[Re A; Im A] s = [Re b; Im b]`` of a complex system with real unknowns."""
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return np.vstack([A.real, A.imag]), np.concatenate([b.real, b.imag])


def _nnls_kkt(Ar, br, x, scale):
    g = Ar.T @ (Ar @ x - br)
    act = x > 0
    r_act = np.max(np.abs(g[act]), initial=0.0)
    r_in = np.max(np.maximum(-g[~act], 0.0), initial=0.0)
    return max(r_act, r_in) / scale


def _power_lipschitz(Ar, iters=20):
    v = np.ones(Ar.shape[1]) / math.sqrt(Ar.shape[1])
    lam = 0.0
    for _ in range(iters):
        w = Ar.T @ (Ar @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 1.0
        v = w / lam
    return lam


def _apg_nnls(Ar, br, x0, tol, max_iter, scale):
    # Accelerated projected gradient, restarted whenever the objective rises.
    L = 1.05 * _power_lipschitz(Ar)

    def obj(z):
        r = Ar @ z - br
        return 0.5 * float(r @ r)

    x = np.maximum(np.asarray(x0, dtype=float), 0.0)
    fx = obj(x)
    history = [fx]
    y, t = x.copy(), 1.0
    restarts = 0
    kkt = _nnls_kkt(Ar, br, x, scale)
    it = 0
    while it < max_iter and kkt > tol:
        it += 1
        g = Ar.T @ (Ar @ y - br)
        xn = np.maximum(y - g / L, 0.0)
        fn = obj(xn)
        if fn > fx:
            restarts += 1
            if restarts > 1:
                L *= 2.0  # power-iteration estimate was too small
            y, t = x.copy(), 1.0
            continue
        restarts = 0
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = xn + ((t - 1.0) / tn) * (xn - x)
        x, fx, t = xn, fn, tn
        history.append(fx)
        if it % 10 == 0:
            kkt = _nnls_kkt(Ar, br, x, scale)
    kkt = _nnls_kkt(Ar, br, x, scale)
    return x, fx, it, kkt, history


def nnls_solve(A, target, tol=1e-8, max_iter=None, method="active_set", x0=None):
    """Solve ``min_{s >= 0} ||A s - target||_2`` for complex ``A`` and real ``s``.

    Args:
        A: complex ``M x G`` matrix or a :class:`GridDictionary`.
        target: complex vector of length ``M`` (e.g. an UL first column).
        tol: KKT tolerance relative to ``||A||_2 ||target||``.
        max_iter: iteration cap, default ``50 G``.
        method: ``"active_set"`` (Lawson-Hanson via scipy) or ``"apg"``
            (accelerated projected gradient with restart).
        x0: starting point for ``"apg"``; ignored by the active-set method.

    Returns:
        SolverReport. Non-convergence is reported through ``converged``.
    """
    if isinstance(A, GridDictionary):
        A = A.matrix
    A = np.asarray(A, dtype=complex)
    target = np.asarray(target, dtype=complex).ravel()
    if A.ndim != 2 or A.shape[0] != target.size:
        raise ValueError("dictionary and target dimensions differ")
    if method not in NNLS_METHODS:
        raise ValueError(f"method must be one of {NNLS_METHODS}")
    G = A.shape[1]
    max_iter = 50 * G if max_iter is None else int(max_iter)
    Ar, br = stack_real(A, target)
    scale = np.linalg.norm(Ar, 2) * np.linalg.norm(br)
    if scale == 0.0:
        scale = 1.0
    f0 = 0.5 * float(br @ br)

    if method == "active_set":
        try:
            x, _ = _scipy_nnls(Ar, br, maxiter=max_iter)
            kkt = _nnls_kkt(Ar, br, x, scale)
            r = Ar @ x - br
            fx = 0.5 * float(r @ r)
            report = SolverReport(x, fx, max_iter, kkt <= tol, kkt, method, [f0, fx])
        except RuntimeError:
            report = None
        if report is not None and report.converged:
            return report
        # Polish (or recover) with the first-order method.
        start = report.solution if report is not None else np.zeros(G)
        x, fx, it, kkt, hist = _apg_nnls(Ar, br, start, tol, max_iter, scale)
        return SolverReport(x, fx, it, kkt <= tol, kkt, "active_set+apg", [f0] + hist)

    start = np.zeros(G) if x0 is None else x0
    x, fx, it, kkt, hist = _apg_nnls(Ar, br, start, tol, max_iter, scale)
    return SolverReport(x, fx, it, kkt <= tol, kkt, method, hist)


def _as_stack(dicts, T=None):
    if isinstance(dicts, GridDictionary):
        return dicts.matrix, True
    if isinstance(dicts, (list, tuple)):
        mats = [d.matrix if isinstance(d, GridDictionary) else np.asarray(d, dtype=complex) for d in dicts]
        return np.stack(mats), False
    arr = np.asarray(dicts, dtype=complex)
    if arr.ndim == 2:
        return arr, True
    if arr.ndim == 3:
        return arr, False
    raise ValueError("dictionaries must be a matrix or a (T, m, G) stack")


def group_l21_solve(dicts, observations, iota=None, iota_scale=1.0, tol=1e-6, max_iter=5000):
    """Minimize ``0.5 sum_t ||D_t w_t - x_t||^2 + iota ||W||_{2,1}`` over complex ``W``.

    Args:
        dicts: one shared ``m x G`` dictionary or a ``(T, m, G)`` stack of
            per-snapshot sketched dictionaries.
        observations: ``(T, m)`` array of sketched snapshots.
        iota: regularization weight; default ``iota_scale * sqrt(T)``.
        tol: bound on the max-abs proximal fixed-point residual.
        max_iter: iteration cap.

    Returns:
        ``(W, report)`` with ``W`` of shape ``(G, T)``.
    """
    X = np.asarray(observations, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    T = X.shape[0]
    D, shared = _as_stack(dicts)
    if shared:
        if D.shape[0] != X.shape[1]:
            raise ValueError("dictionary rows must match the snapshot length")
        G = D.shape[1]
        L = np.linalg.norm(D, 2) ** 2

        def resid(W):
            return D @ W - X.T

        def grad(R):
            return D.conj().T @ R
    else:
        if D.shape[0] != T or D.shape[1] != X.shape[1]:
            raise ValueError("dictionary stack must be (T, m, G) matching the observations")
        G = D.shape[2]
        L = max(np.linalg.norm(D[t], 2) ** 2 for t in range(T))

        def resid(W):
            return np.einsum("tmg,gt->mt", D, W) - X.T

        def grad(R):
            return np.einsum("tmg,mt->gt", D.conj(), R)

    if T < 1:
        raise ValueError("need at least one snapshot")
    iota = iota_scale * math.sqrt(T) if iota is None else float(iota)
    if iota < 0:
        raise ValueError("iota must be non-negative")
    L = max(L, np.finfo(float).tiny)
    step = 1.0 / L

    def prox(V):
        norms = np.linalg.norm(V, axis=1, keepdims=True)
        shrink = np.maximum(0.0, 1.0 - iota * step / np.where(norms > 0, norms, 1.0))
        return V * shrink

    def obj(W):
        R = resid(W)
        return 0.5 * float(np.sum(np.abs(R) ** 2)) + iota * float(np.sum(np.linalg.norm(W, axis=1)))

    def fixed_point(W):
        return float(np.max(np.abs(W - prox(W - step * grad(resid(W))))))

    W = np.zeros((G, T), dtype=complex)
    fW = obj(W)
    history = [fW]
    Y, t = W.copy(), 1.0
    res = fixed_point(W)
    it = 0
    while it < max_iter and res > tol:
        it += 1
        Wn = prox(Y - step * grad(resid(Y)))
        fn = obj(Wn)
        if fn > fW:
            # Momentum overshot: restart from the last accepted iterate.
            Y, t = W.copy(), 1.0
            continue
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        Y = Wn + ((t - 1.0) / tn) * (Wn - W)
        W, fW, t = Wn, fn, tn
        history.append(fW)
        res = fixed_point(W)
    report = SolverReport(W, fW, it, res <= tol, res, "fista", history)
    return W, report


def _grid_points(grid):
    if isinstance(grid, GridDictionary):
        return grid.grid
    return np.asarray(grid, dtype=float)


def measure_from_weights(W, grid):
    """Discrete PSF with atom masses proportional to the row norms of ``W``."""
    W = np.asarray(W)
    if W.ndim == 1:
        W = W[:, None]
    pts = _grid_points(grid)
    if W.shape[0] != pts.size:
        raise ValueError("W rows must match the grid size")
    if not np.all(np.isfinite(W)):
        raise ValueError("W must be finite")
    norms = np.linalg.norm(W, axis=1)
    keep = norms > 0
    if not np.any(keep):
        raise ValueError("all-zero weights define no measure")
    return AngularPSF.from_atoms(pts[keep], norms[keep])


def measure_from_nnls(s, grid):
    """Discrete PSF ``sum_i s_i delta(xi - xi_i)`` normalized to unit mass."""
    s = np.asarray(s, dtype=float).ravel()
    pts = _grid_points(grid)
    if s.size != pts.size:
        raise ValueError("solution length must match the grid size")
    if np.any(s < 0):
        raise ValueError("NNLS weights must be non-negative")
    keep = s > 0
    if not np.any(keep):
        raise ValueError("all-zero weights define no measure")
    return AngularPSF.from_atoms(pts[keep], s[keep])
