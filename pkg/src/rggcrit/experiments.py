"""Monte Carlo harness for the critical-radius limit theorems.

Each trial draws a fresh point cloud, computes both critical radii exactly
(minimum-degree and k-connectivity), and maps them to the Gumbel c-scale by
inverting the radius formula; one connectivity computation per trial then
yields the whole empirical CDF curve.  Trials are embarrassingly parallel
and reduced in trial-index order, so results are bit-identical for a fixed
master seed regardless of the worker schedule.

Per-trial seeds come from a splitmix64-style mix of (master_seed, index):
    z = (master_seed + index * 0x9E3779B97F4A7C15) mod 2^64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2^64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2^64
    seed = z ^ (z >> 31)
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from .connectivity import connectivity_radius
from .errors import DegenerateInstanceError, DomainError
from .geometry import surface_area
from .rgg import PointCloud, build_graph, degree_count, generate, min_degree_radius
from .theory import (
    IntegralEstimate,
    TheoryParams,
    _log_norm_const,
    critical_radius,
    denom_coeff,
    gumbel_cdf,
    halfspace_ratio,
    integrate_psi,
    loglog_coeff,
)

__all__ = [
    "TrialResult",
    "EmpiricalCdf",
    "PalmCheckResult",
    "trial_seed",
    "run_trial",
    "radius_to_c",
    "run_batch",
    "ks_distance",
    "palm_check",
    "default_c_grid",
    "write_trials_csv",
    "write_summary_csv",
    "write_summary_json",
]

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def trial_seed(master_seed: int, index: int) -> int:
    """Splitmix64-style 64-bit mix of (master_seed, index)."""
    z = (master_seed + index * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return (z ^ (z >> 31)) & _MASK


@dataclass(frozen=True)
class TrialResult:
    """Critical radii of one sampled cloud and derived indicators."""

    index: int
    seed: int
    rho_delta: float
    rho_kappa: float
    equal: bool  # exact float equality: both radii are pairwise distances
    degree_count_at_formula_radius: int


def run_trial(params: TheoryParams, index: int, master_seed: int,
              verify: bool = True) -> TrialResult:
    """One trial: sample, then compute both critical radii exactly."""
    n = int(params.n)
    if n < params.k + 2:
        raise DegenerateInstanceError(f"need n >= k+2, got n={n}, k={params.k}")
    seed = trial_seed(master_seed, index)
    cloud = generate(params.region, n, seed)
    rho_delta = min_degree_radius(cloud, params.k + 1)
    if verify:
        assert build_graph(cloud, rho_delta).degrees.min() >= params.k + 1
        assert build_graph(cloud, rho_delta * (1 - 1e-12)).degrees.min() <= params.k
    rho_kappa = connectivity_radius(cloud, params.k + 1, verify=verify)
    r_ref = critical_radius(params).r_n
    w_k = degree_count(build_graph(cloud, r_ref), params.k)
    return TrialResult(index=index, seed=seed, rho_delta=rho_delta,
                       rho_kappa=rho_kappa, equal=(rho_delta == rho_kappa),
                       degree_count_at_formula_radius=w_k)


def radius_to_c(params: TheoryParams, rho: float) -> float:
    """The c with critical_radius(params at c) == rho (inverse map).

    Computes the implied offset xi_hat from the radius formula, then
    inverts the xi(c) relation of the matching dimension/k branch.
    """
    if rho <= 0:
        raise DomainError(f"radius must be > 0, got {rho}")
    d, k, n = params.d, params.k, params.n
    area = surface_area(params.region)
    if d == 2:
        if k == 0:
            return math.pi * n * rho * rho - math.log(n)
        xi_hat = (math.pi * n * rho * rho - math.log(n)
                  - (2 * k - 1) * math.log(math.log(n)))
        if k == 1:
            return -math.log(math.exp(-xi_hat)
                             + math.exp(-0.5 * xi_hat) * area * math.sqrt(math.pi) / 4.0)
        return 0.5 * (xi_hat - 2.0 * math.log(
            area * math.sqrt(math.pi) / (2.0 ** (k + 1) * math.factorial(k))))
    xi_hat = (denom_coeff(d) * n * rho**d - math.log(n)
              - loglog_coeff(d, k) * math.log(math.log(n)))
    return halfspace_ratio(d) * xi_hat - _log_norm_const(d, k, area)


def default_c_grid() -> np.ndarray:
    """41 uniform points on [-2, 6], covering Gumbel mass 0.0006..0.9975."""
    return np.linspace(-2.0, 6.0, 41)


@dataclass(frozen=True)
class EmpiricalCdf:
    """Empirical distribution of the critical radii on the c-scale."""

    c_grid: np.ndarray
    prob_delta: np.ndarray
    prob_kappa: np.ndarray
    trial_count: int
    params: TheoryParams
    equal_fraction: float
    mean_degree_count: float
    trials: tuple[TrialResult, ...]


def _trial_worker(args) -> TrialResult:
    params, index, master_seed, verify = args
    return run_trial(params, index, master_seed, verify=verify)


def thread_count(requested: int | None = None) -> int:
    """Worker count: explicit argument, else RGGCRIT_THREADS, else cores."""
    if requested is not None and requested > 0:
        return requested
    env = os.environ.get("RGGCRIT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_batch(params: TheoryParams, M: int, master_seed: int,
              c_grid: np.ndarray | None = None, threads: int | None = None,
              verify: bool = True) -> EmpiricalCdf:
    """M independent trials; empirical P(rho <= r_n(c)) on the c-grid.

    Events are evaluated on the c-scale: rho <= r_n(c) iff
    radius_to_c(rho) <= c, so one radius per trial gives every grid point.
    """
    if M < 1:
        raise DomainError(f"need at least one trial, got M={M}")
    grid = default_c_grid() if c_grid is None else np.asarray(c_grid, float)
    jobs = [(params, i, master_seed, verify) for i in range(M)]
    workers = thread_count(threads)
    if workers <= 1 or M == 1:
        trials = [_trial_worker(j) for j in jobs]
    else:
        with Pool(workers) as pool:
            trials = pool.map(_trial_worker, jobs, chunksize=1)
    trials.sort(key=lambda t: t.index)  # reduce in index order
    c_delta = np.array([radius_to_c(params, t.rho_delta) for t in trials])
    c_kappa = np.array([radius_to_c(params, t.rho_kappa) for t in trials])
    prob_delta = (c_delta[None, :] <= grid[:, None]).mean(axis=1)
    prob_kappa = (c_kappa[None, :] <= grid[:, None]).mean(axis=1)
    return EmpiricalCdf(
        c_grid=grid, prob_delta=prob_delta, prob_kappa=prob_kappa,
        trial_count=M, params=params,
        equal_fraction=float(np.mean([t.equal for t in trials])),
        mean_degree_count=float(np.mean([t.degree_count_at_formula_radius
                                         for t in trials])),
        trials=tuple(trials))


def ks_distance(cdf: EmpiricalCdf, which: str = "kappa", target=gumbel_cdf) -> float:
    """Max over the c-grid of |empirical - target(c)|."""
    emp = cdf.prob_kappa if which == "kappa" else cdf.prob_delta
    return float(max(abs(e - target(float(c))) for e, c in zip(emp, cdf.c_grid)))


@dataclass(frozen=True)
class PalmCheckResult:
    """Mean count of degree-k vertices vs. the psi-integral prediction."""

    empirical_mean: float
    empirical_se: float
    integral: float
    integral_se: float

    @property
    def combined_se(self) -> float:
        return math.hypot(self.empirical_se, self.integral_se)

    @property
    def zscore(self) -> float:
        return (self.empirical_mean - self.integral) / self.combined_se


def palm_check(params: TheoryParams, r: float, M: int, master_seed: int = 0,
               budget: int = 1_000_000) -> PalmCheckResult:
    """Expected degree-k vertex count two ways: simulation vs. integral.

    The expectation identity E W'_k = n * integral of psi ties the count of
    degree-k vertices at radius r to the degree-probability integral.
    """
    n = int(params.n)
    counts = np.empty(M)
    for i in range(M):
        cloud = generate(params.region, n, trial_seed(master_seed, i))
        counts[i] = degree_count(build_graph(cloud, r), params.k)
    est: IntegralEstimate = integrate_psi(
        params, r, budget=budget, rng=np.random.default_rng(trial_seed(master_seed, M)))
    se = float(counts.std(ddof=1) / math.sqrt(M)) if M > 1 else float("nan")
    return PalmCheckResult(empirical_mean=float(counts.mean()), empirical_se=se,
                           integral=est.value, integral_se=est.std_error)


# ---------------------------------------------------------------------------
# serialization

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trials_csv(cdf: EmpiricalCdf, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "seed", "rho_delta", "rho_kappa",
                    "c_delta", "c_kappa", "equal"])
        for t in cdf.trials:
            w.writerow([t.index, t.seed, _fmt(t.rho_delta), _fmt(t.rho_kappa),
                        _fmt(radius_to_c(cdf.params, t.rho_delta)),
                        _fmt(radius_to_c(cdf.params, t.rho_kappa)),
                        int(t.equal)])


def write_summary_csv(cdf: EmpiricalCdf, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "empirical_delta", "empirical_kappa", "gumbel_target"])
        for c, pd, pk in zip(cdf.c_grid, cdf.prob_delta, cdf.prob_kappa):
            w.writerow([_fmt(float(c)), _fmt(float(pd)), _fmt(float(pk)),
                        _fmt(gumbel_cdf(float(c)))])


def summary_dict(cdf: EmpiricalCdf, master_seed: int | None = None) -> dict:
    p = cdf.params
    return {
        "params": {"d": p.d, "k": p.k, "c": p.c, "n": p.n,
                   "region": json.loads(p.region.to_json())},
        "trial_count": cdf.trial_count,
        "master_seed": master_seed,
        "ks_delta": ks_distance(cdf, "delta"),
        "ks_kappa": ks_distance(cdf, "kappa"),
        "equal_fraction": cdf.equal_fraction,
        "mean_degree_count": cdf.mean_degree_count,
    }


def write_summary_json(cdf: EmpiricalCdf, path: str,
                       master_seed: int | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(cdf, master_seed), fh, indent=2)
        fh.write("\n")
