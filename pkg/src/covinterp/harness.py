"""Experiment runner for the reproduction scenarios.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentReport` holding tabular records and named pass/fail checks.
Independent points (per ``M`` or per probe) are evaluated in a thread pool
whose size is capped by the ``COVINTERP_THREADS`` environment variable;
results are always gathered in configuration order.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .chebyshev import exponent_sum, f_alpha, finite_m_exponent, stirling_bracket, width_bound
from .covariance import (
    ToeplitzCovariance,
    captured_power,
    covariance_from_psf,
    distortion,
    eigen_basis,
    eigen_power,
    toeplitzify,
)
from .estimators import SolverConfig
from .interpolate import dof_tradeoff, empirical_width_lower_bound, feasible_index_set, run_algorithm1
from .manifold import DL, UL, ArrayConfig
from .psf import AngularPSF, standard_rect_psf
from .simchannel import generate_snapshots, sample_covariance

__all__ = [
    "SCENARIOS",
    "ExperimentConfig",
    "ExperimentReport",
    "thread_count",
    "run_scenario",
    "run_aliasing",
    "run_interior_error",
    "run_distortion_sweep",
    "run_dof_curves",
    "run_bound_curves",
    "run_width_sandwich",
    "ul_first_column",
]

SCENARIOS = ("aliasing", "interior_error", "distortion_sweep", "dof_curves", "bound_curves", "width_sandwich")

# Per-scenario defaults layered over the dataclass defaults.
SCENARIO_DEFAULTS = {
    "aliasing": {"oversampling": 1.05, "M_list": [50, 100], "contrast_oversampling": 0.9},
    "interior_error": {"oversampling": 0.9, "M_list": [50, 100, 200]},
    "distortion_sweep": {
        "oversampling": 0.9,
        "M_list": [25, 50, 100, 150, 200],
        "ul_source": "snapshots",
        "T": 10000,
        "seeds": [1, 2, 3, 4],
    },
    "dof_curves": {},
    "bound_curves": {"M_list": [200]},
    "width_sandwich": {"oversampling": 0.5, "M_list": [8], "grid_size": 64, "psf": "uniform"},
}


def thread_count():
    """Pool size from ``COVINTERP_THREADS``; unset means the machine default."""
    raw = os.environ.get("COVINTERP_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    n = int(raw)
    if n < 1:
        raise ValueError("COVINTERP_THREADS must be a positive integer")
    return n


def _pool_map(fn, items):
    items = list(items)
    n = min(thread_count(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _uniform_psf():
    return AngularPSF(rects=[(-1.0, 1.0, 0.5)])


def _parse_psf(value):
    if value is None or value == "rect":
        return standard_rect_psf()
    if value == "uniform":
        return _uniform_psf()
    if isinstance(value, AngularPSF):
        return value
    return AngularPSF.from_dict(value)


@dataclass
class ExperimentConfig:
    """Scenario settings; unspecified fields take per-scenario defaults.

    ``ul_source`` selects the UL first column fed to the interpolator:
    ``"exact"`` samples the PSF directly, ``"snapshots"`` averages over
    ``seeds`` of ``T`` noisy snapshots through sample covariance and
    Toeplitz projection.
    """

    scenario: str
    M_list: list = field(default_factory=lambda: [100])
    oversampling: float = 0.9
    carrier_ratio: float = 0.9
    theta_max: float = math.pi / 3
    psf: AngularPSF = field(default_factory=standard_rect_psf)
    solver: SolverConfig = field(default_factory=SolverConfig)
    T: int = 2000
    snr_db: float = 20.0
    seeds: list = field(default_factory=lambda: [1])
    mode: str = "fraction=0.1"
    ul_source: str = "exact"
    sim_grid_size: int = 4096
    contrast_oversampling: float = 0.9
    alias_ratio: float = 0.5
    interior_threshold: float = 1e-2
    boundary_ratio: float = 10.0
    num_probes: int = 20
    grid_size: int = 64
    rho_step: float = 1e-3
    exponent_tol: float = 0.05

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.ul_source not in ("exact", "snapshots"):
            raise ValueError("ul_source must be 'exact' or 'snapshots'")
        if not self.M_list or any(int(m) < 1 for m in self.M_list):
            raise ValueError("M_list must hold positive integers")
        self.M_list = [int(m) for m in self.M_list]
        self.seeds = [int(s) for s in self.seeds]

    @classmethod
    def from_dict(cls, scenario, data=None):
        merged = dict(SCENARIO_DEFAULTS.get(scenario, {}))
        merged.update(data or {})
        merged.pop("scenario", None)
        if "seed" in merged:
            merged["seeds"] = [merged.pop("seed")]
        names = {f.name for f in fields(cls)}
        unknown = set(merged) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged["psf"] = _parse_psf(merged.get("psf"))
        solver = merged.get("solver")
        if not isinstance(solver, SolverConfig):
            merged["solver"] = SolverConfig.from_dict(solver)
        return cls(scenario=scenario, **merged)

    @classmethod
    def from_json_file(cls, scenario, path):
        with open(path) as fh:
            return cls.from_dict(scenario, json.load(fh))

    def array(self, M, oversampling=None):
        rho = self.oversampling if oversampling is None else oversampling
        return ArrayConfig(M, rho, self.carrier_ratio, self.theta_max)

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, AngularPSF):
                v = v.to_dict()
            elif isinstance(v, SolverConfig):
                v = v.to_dict()
            out[f.name] = v
        return out


@dataclass
class ExperimentReport:
    scenario: str
    columns: list
    rows: list
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def check(self, name, ok, detail=""):
        self.checks[name] = bool(ok)
        self.details[name] = detail

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def write(self, out_dir, figures=True):
        """Write ``<scenario>.csv``, ``<scenario>_checks.csv`` and optional PNGs.

        Returns:
            list of written paths.
        """
        os.makedirs(out_dir, exist_ok=True)
        data_path = os.path.join(out_dir, f"{self.scenario}.csv")
        with open(data_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt(v) for v in row])
        checks_path = os.path.join(out_dir, f"{self.scenario}_checks.csv")
        with open(checks_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["check", "passed", "detail"])
            for name in self.checks:
                w.writerow([name, int(self.checks[name]), self.details.get(name, "")])
        paths = [data_path, checks_path]
        if figures:
            from .plotting import plot_report

            paths.extend(plot_report(self, out_dir))
        return paths

    def text_summary(self):
        lines = [f"scenario: {self.scenario}"]
        for k, v in self.summary.items():
            lines.append(f"  {k}: {_fmt(v)}")
        for name, ok in self.checks.items():
            lines.append(f"  [{'PASS' if ok else 'FAIL'}] {name}: {self.details.get(name, '')}")
        lines.append(f"  wall time: {self.wall_time:.2f} s")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    return v


def ul_first_column(config, cfg, seed):
    """UL first column per ``config.ul_source``, normalized to ``sigma[0] = 1``."""
    if config.ul_source == "exact":
        return covariance_from_psf(config.psf, cfg, UL).first_column
    batch = generate_snapshots(config.psf, cfg, config.T, config.snr_db, seed, UL, config.sim_grid_size)
    col = toeplitzify(sample_covariance(batch)).first_column
    return col / col[0].real


def _timed(fn):
    def wrapper(config):
        t0 = time.perf_counter()
        report = fn(config)
        report.wall_time = time.perf_counter() - t0
        report.config = config.to_dict()
        return report

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _dl_errors(config, M, rho, seed):
    cfg = config.array(M, rho)
    truth = covariance_from_psf(config.psf, cfg, DL).first_column
    result, _ = run_algorithm1(ul_first_column(config, cfg, seed), cfg, config.solver, "fraction=0")
    return cfg, np.abs(result.sigma_dl_full - truth), result.solver_report


def _head_count(M):
    # Indices kept by the 10% truncation, also used as the error window.
    return int(math.ceil(0.9 * M - 1e-9))


@_timed
def run_aliasing(config):
    """DL interpolation error for an aliased spacing and a well-sampled contrast.

    The error metric is the max over the first ``ceil(0.9 M)`` DL indices,
    so that boundary growth in the well-sampled case does not mask the
    comparison.
    """
    rhos = [config.oversampling, config.contrast_oversampling]
    jobs = [(rho, M) for rho in rhos for M in config.M_list]
    out = _pool_map(lambda j: _dl_errors(config, j[1], j[0], config.seeds[0]), jobs)
    rows, peak = [], {}
    for (rho, M), (_, err, _) in zip(jobs, out):
        for k, e in enumerate(err):
            rows.append((rho, M, k, e))
        peak[(rho, M)] = float(err[: _head_count(M)].max())
    report = ExperimentReport("aliasing", ["oversampling", "M", "k", "abs_error"], rows)
    m0, m1 = config.M_list[0], config.M_list[-1]
    for rho in rhos:
        for M in config.M_list:
            report.summary[f"max_error[rho={rho:g},M={M}]"] = peak[(rho, M)]
    ratio_alias = peak[(rhos[0], m1)] / peak[(rhos[0], m0)]
    ratio_ok = peak[(rhos[1], m1)] / peak[(rhos[1], m0)]
    report.check(
        "aliasing_error_persists",
        ratio_alias >= config.alias_ratio,
        f"rho={rhos[0]:g}: err(M={m1})/err(M={m0}) = {ratio_alias:.3g} >= {config.alias_ratio:g}",
    )
    report.check(
        "contrast_error_decays",
        ratio_ok < config.alias_ratio,
        f"rho={rhos[1]:g}: err(M={m1})/err(M={m0}) = {ratio_ok:.3g} < {config.alias_ratio:g}",
    )
    return report


@_timed
def run_interior_error(config):
    """Error over the robust index set versus the last 10% of DL indices."""
    out = _pool_map(lambda M: _dl_errors(config, M, config.oversampling, config.seeds[0]), config.M_list)
    rows, interior, boundary = [], {}, {}
    for M, (cfg, err, _) in zip(config.M_list, out):
        kept = set(feasible_index_set(cfg).tolist())
        head = _head_count(M)
        for k, e in enumerate(err):
            rows.append((M, k, e, int(k in kept), int(k >= head)))
        interior[M] = float(err[sorted(kept)].max())
        boundary[M] = float(err[head:].max()) if head < M else 0.0
    report = ExperimentReport("interior_error", ["M", "k", "abs_error", "in_robust_set", "in_boundary"], rows)
    for M in config.M_list:
        report.summary[f"interior_max[M={M}]"] = interior[M]
        report.summary[f"boundary_max[M={M}]"] = boundary[M]
    ref = 100 if 100 in interior else config.M_list[len(config.M_list) // 2]
    report.check(
        "interior_below_threshold",
        interior[ref] <= config.interior_threshold,
        f"M={ref}: {interior[ref]:.3g} <= {config.interior_threshold:g}",
    )
    report.check(
        "boundary_dominates_interior",
        boundary[ref] >= config.boundary_ratio * interior[ref],
        f"M={ref}: boundary {boundary[ref]:.3g} >= {config.boundary_ratio:g} x interior {interior[ref]:.3g}",
    )
    lo, hi = min(config.M_list), max(config.M_list)
    report.check(
        "boundary_grows_with_M",
        boundary[hi] >= boundary[lo],
        f"boundary(M={hi}) {boundary[hi]:.3g} >= boundary(M={lo}) {boundary[lo]:.3g}",
    )
    return report


def _theta(true_dl, estimate_col):
    _, p = eigen_power(true_dl)
    _, U = eigen_basis(ToeplitzCovariance(estimate_col))
    return distortion(p, captured_power(true_dl, U))


def _distortion_point(config, M):
    cfg = config.array(M)
    true_dl = covariance_from_psf(config.psf, cfg, DL)
    acc = np.zeros(3)
    for seed in config.seeds:
        ul = ul_first_column(config, cfg, seed)
        full, _ = run_algorithm1(ul, cfg, config.solver, "fraction=0")
        trunc, _ = run_algorithm1(ul, cfg, config.solver, config.mode)
        acc += [_theta(true_dl, ul), _theta(true_dl, full.sigma_dl_truncated), _theta(true_dl, trunc.sigma_dl_truncated)]
    return acc / len(config.seeds)


@_timed
def run_distortion_sweep(config):
    """Distortion without interpolation, with interpolation, and with interpolation plus truncation."""
    vals = _pool_map(lambda M: _distortion_point(config, M), config.M_list)
    names = ("no_interp", "interp", "interp_trunc")
    rows = [(M, name, float(v[i])) for M, v in zip(config.M_list, vals) for i, name in enumerate(names)]
    report = ExperimentReport("distortion_sweep", ["M", "scenario", "distortion"], rows)
    d = {M: v for M, v in zip(config.M_list, vals)}
    for M in config.M_list:
        for i, name in enumerate(names):
            report.summary[f"{name}[M={M}]"] = float(d[M][i])
    Ms = config.M_list
    inc = all(d[a][0] < d[b][0] for a, b in zip(Ms, Ms[1:]))
    report.check("no_interp_increasing", inc, " < ".join(f"{d[M][0]:.3g}" for M in Ms))
    big = [M for M in Ms if M >= 100]
    report.check(
        "interp_trunc_beats_no_interp",
        all(d[M][2] < d[M][0] for M in big),
        "; ".join(f"M={M}: {d[M][2]:.3g} < {d[M][0]:.3g}" for M in big),
    )
    report.check(
        "truncation_helps_large_M",
        all(d[M][2] < d[M][1] for M in big),
        "; ".join(f"M={M}: {d[M][2]:.3g} < {d[M][1]:.3g}" for M in big),
    )
    small = min(Ms)
    report.check(
        "truncation_hurts_small_M",
        d[small][2] > d[small][1],
        f"M={small}: {d[small][2]:.3g} > {d[small][1]:.3g}",
    )
    return report


@_timed
def run_dof_curves(config):
    """Ideal (``rho``) and robust (``rho alpha(rho)``) DoF curves."""
    M = config.M_list[0]
    n = int(round(1.0 / config.rho_step))
    rhos = np.arange(1, n) * config.rho_step
    rows = []
    for rho in rhos:
        alpha, N, D = dof_tradeoff(M, config.carrier_ratio, float(rho))
        rows.append((float(rho), alpha, N, float(rho), D))
    report = ExperimentReport("dof_curves", ["oversampling", "alpha", "N", "ideal_dof", "robust_dof"], rows)
    D = np.array([r[4] for r in rows])
    arg = float(rhos[int(np.argmax(D))])
    report.summary["argmax_rho"] = arg
    report.summary["max_robust_dof"] = float(D.max())
    report.check("argmax_near_half", 0.48 <= arg <= 0.52, f"argmax {arg:.3f} in [0.48, 0.52]")
    low = rhos <= 1.0 / 3.0
    gap = float(np.max(np.abs(D[low] - rhos[low])))
    report.check("dof_equal_below_third", gap <= 1e-9, f"max |D - rho| for rho <= 1/3: {gap:.2e}")
    return report


@_timed
def run_bound_curves(config):
    """Asymptotic exponent ``f`` against the finite-M exponent and its bracket."""
    rows = []
    worst, bracket_ok = 0.0, True
    for M in config.M_list:
        for n in range(M):
            s = n + 0.5
            alpha = s / M
            h = finite_m_exponent(s, M)
            f = f_alpha(alpha)
            lo, hi = stirling_bracket(s, M)
            rows.append((M, s, alpha, f, h, exponent_sum(s, M), lo, hi))
            worst = max(worst, abs(h - f))
            bracket_ok &= lo <= h <= hi
    report = ExperimentReport(
        "bound_curves",
        ["M", "s", "alpha", "f_alpha", "finite_m_exponent", "exponent_sum", "bracket_lo", "bracket_hi"],
        rows,
    )
    report.summary["max_abs_exponent_gap"] = worst
    report.check(
        "finite_m_exponent_close",
        worst <= config.exponent_tol,
        f"max |h - f| = {worst:.3g} <= {config.exponent_tol:g}",
    )
    report.check("stirling_bracket_holds", bracket_ok, "bracket with log(.)/(4M) corrections")
    return report


def _width_point(config, cfg, s):
    return empirical_width_lower_bound(config.psf, cfg, s, G=config.grid_size), width_bound(s, cfg.num_antennas, cfg.oversampling)


@_timed
def run_width_sandwich(config):
    """Empirical width lower estimates against the finite-M width bound."""
    M = config.M_list[0]
    cfg = config.array(M)
    rho = cfg.oversampling
    n = config.num_probes
    probes = [(M * rho * (j + 1) / (n + 1), 0) for j in range(n)]
    probes += [(k * rho, 1) for k in range(M)]
    out = _pool_map(lambda p: _width_point(config, cfg, p[0]), probes)
    rows = []
    viol, lattice_max = 0, 0.0
    for (s, lat), (emp, wb) in zip(probes, out):
        rows.append((s, lat, emp, wb.bound, wb.real_part, wb.imag_part, wb.asymptotic))
        if lat:
            lattice_max = max(lattice_max, emp, wb.bound)
        else:
            viol += emp > wb.bound
    report = ExperimentReport(
        "width_sandwich",
        ["s", "on_lattice", "empirical_width", "width_bound", "real_part", "imag_part", "asymptotic"],
        rows,
    )
    report.summary["violations"] = viol
    report.summary["lattice_max"] = lattice_max
    report.check("empirical_below_bound", viol == 0, f"{viol} violations over {n} off-lattice probes")
    report.check("zero_width_on_lattice", lattice_max <= 1e-6, f"max on lattice {lattice_max:.2e} <= 1e-6")
    return report


_RUNNERS = {
    "aliasing": run_aliasing,
    "interior_error": run_interior_error,
    "distortion_sweep": run_distortion_sweep,
    "dof_curves": run_dof_curves,
    "bound_curves": run_bound_curves,
    "width_sandwich": run_width_sandwich,
}


def run_scenario(config):
    return _RUNNERS[config.scenario](config)
