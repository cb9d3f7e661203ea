"""Empirical verification engine: CDF distances, sweeps, independence checks.

PASS flags reported here are pure functions of the returned numeric
sequences; thresholds (10x growth for divergence, 10x shrink for decay) are
reporting conventions, re-derivable by any caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from .limits import limit_law_of, normalization
from .model import (
    conditional_cdf_oracle,
    joint_exceedance_oracle,
    sample_conditional,
    solve_b_x,
    solve_b_y,
)
from .numerics import integrate_with_breakpoints

__all__ = [
    "EmpiricalCDF",
    "SweepReport",
    "ConditionCheckReport",
    "DecayReport",
    "empirical_conditional_cdf",
    "ks_distance",
    "oracle_grid_distance",
    "convergence_sweep",
    "independence_condition_check",
    "joint_exceedance_decay",
    "lemma2_integral_check",
    "DEFAULT_X_GRID",
    "DEFAULT_Y_GRID",
]

DEFAULT_X_GRID = (0.5, 1.0, 1.5, 2.0, 2.5)
DEFAULT_Y_GRID = (-2.0, -1.0, 0.0, 1.0, 2.0)


class EmpiricalCDF:
    """Right-continuous step function from weighted points."""

    def __init__(self, points, weights):
        points = np.asarray(points, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if len(points) == 0:
            raise DomainError("empirical CDF requires at least one point")
        total = float(np.sum(weights))
        if not total > 0.0:
            raise DomainError("empirical CDF requires positive total weight")
        order = np.argsort(points, kind="stable")
        pts = points[order]
        wts = weights[order] / total
        # merge duplicate support points
        uniq, start = np.unique(pts, return_index=True)
        sums = np.add.reduceat(wts, start)
        self.points = uniq
        self.cumulative = np.cumsum(sums)
        self.cumulative[-1] = 1.0

    def __call__(self, y):
        idx = np.searchsorted(self.points, np.asarray(y, dtype=float), side="right")
        padded = np.concatenate([[0.0], self.cumulative])
        out = padded[idx]
        return float(out) if np.isscalar(y) else out

    def value_before(self, y):
        idx = np.searchsorted(self.points, np.asarray(y, dtype=float), side="left")
        padded = np.concatenate([[0.0], self.cumulative])
        out = padded[idx]
        return float(out) if np.isscalar(y) else out


def empirical_conditional_cdf(sample, frame):
    """Weighted empirical CDF of the standardized second coordinate."""
    if len(sample) == 0:
        raise DomainError("empty sample")
    standardized = (sample.y - frame.m_t) / frame.a_t
    return EmpiricalCDF(standardized, sample.weights)


def ks_distance(empirical, law):
    """sup |F_hat - F| over the jump points, both one-sided gaps per jump."""
    ref = np.asarray(law.cdf(empirical.points), dtype=float)
    after = empirical.cumulative
    before = np.concatenate([[0.0], after[:-1]])
    return float(max(np.max(np.abs(after - ref)), np.max(np.abs(ref - before))))


def oracle_grid_distance(model, frame, limit, x_grid=DEFAULT_X_GRID, y_grid=DEFAULT_Y_GRID):
    """sup over the grid of |oracle conditional CDF - (1 - e^-x) H(y)|."""
    worst = 0.0
    for x_std in x_grid:
        fac = 1.0 - math.exp(-x_std)
        for y_std in y_grid:
            exact = conditional_cdf_oracle(model, frame, x_std, y_std)
            worst = max(worst, abs(exact - fac * float(limit.cdf(y_std))))
    return worst


@dataclass(frozen=True)
class SweepReport:
    """Per-threshold distances between the conditioned model and its limit."""

    thresholds: list
    ks_distances: list
    effective_sizes: list
    oracle_distances: list

    def __post_init__(self):
        n = len(self.thresholds)
        if not (len(self.ks_distances) == len(self.effective_sizes)
                == len(self.oracle_distances) == n):
            raise DomainError("report columns must have equal lengths")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise DomainError("thresholds must be strictly increasing")

    def to_csv(self, path, metadata=None):
        with open(path, "w") as fh:
            for key, value in (metadata or {}).items():
                fh.write(f"# {key}={value}\n")
            fh.write("threshold,ks,eff_size,oracle_dist\n")
            rows = zip(self.thresholds, self.ks_distances,
                       self.effective_sizes, self.oracle_distances)
            for t, k, e, o in rows:
                fh.write(f"{float(t)!r},{float(k)!r},{float(e)!r},{float(o)!r}\n")

    def to_json_dict(self):
        return {
            "thresholds": list(self.thresholds),
            "ks": list(self.ks_distances),
            "eff_size": list(self.effective_sizes),
            "oracle_dist": list(self.oracle_distances),
        }


def convergence_sweep(model, quantile_levels, n, rng,
                      x_grid=DEFAULT_X_GRID, y_grid=DEFAULT_Y_GRID, workers=1):
    """KS and oracle distances to the limit along rising radial quantiles.

    Each level gets an independent child generator stream and its work is
    self-contained, so levels may run on separate threads (``workers > 1``);
    results are merged in input order either way, making the report
    reproducible for a given seed.
    """
    levels = [float(q) for q in quantile_levels]
    if any(not 0.0 < q < 1.0 for q in levels):
        raise DomainError("quantile levels must lie in (0, 1)")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError("quantile levels must be strictly increasing")
    limit = limit_law_of(model)
    streams = rng.spawn(len(levels))

    def one_level(q, stream):
        t = float(model.radial.quantile_b(1.0 / (1.0 - q)))
        frame = normalization(model, t)
        sample = sample_conditional(model, t, n, stream)
        emp = empirical_conditional_cdf(sample, frame)
        dist = oracle_grid_distance(model, frame, limit, x_grid, y_grid)
        return t, ks_distance(emp, limit), sample.effective_size, dist

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_level, levels, streams))
    else:
        results = [one_level(q, s) for q, s in zip(levels, streams)]
    thresholds, ks_vals, eff_sizes, oracle_vals = map(list, zip(*results))
    return SweepReport(thresholds, ks_vals, eff_sizes, oracle_vals)


@dataclass(frozen=True)
class ConditionCheckReport:
    """Growth of the separation ratio driving asymptotic independence."""

    t_grid: list
    ratios: list
    passed: bool
    psi_y_convention: str = "v_star-scaled radial auxiliary function"


def _check_t_grid(t_grid):
    grid = [float(t) for t in t_grid]
    if any(t <= 1.0 for t in grid):
        raise DomainError("t grid values must exceed 1")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("t grid must be strictly increasing")
    return grid


def independence_condition_check(model, y, t_grid):
    """Separation ratios (b_Y - m(b_X) + psi_Y(b_Y) y) / a(b_X) along t_grid.

    Quantiles come from the oracle marginals, not from tail asymptotics, so
    the check does not assume the formulas it supports.  PASS means the last
    ratio exceeds ten times the first and the second half is monotone.
    """
    grid = _check_t_grid(t_grid)
    v_star = model.curve.v_star
    ratios = []
    for t in grid:
        bx = solve_b_x(model, t)
        by = solve_b_y(model, t)
        frame = normalization(model, bx)
        psi_y = v_star * float(model.radial.aux_psi(by / v_star))
        ratios.append((by - frame.m_t + psi_y * y) / frame.a_t)
    tail = ratios[len(ratios) // 2:]
    monotone_tail = all(b > a for a, b in zip(tail, tail[1:]))
    passed = monotone_tail and ratios[-1] > 10.0 * ratios[0]
    return ConditionCheckReport(grid, ratios, passed)


@dataclass(frozen=True)
class DecayReport:
    """t * P(joint exceedance) along t_grid; vanishing means independence."""

    t_grid: list
    products: list
    passed: bool


def joint_exceedance_decay(model, x_std, y_std, t_grid):
    """t * P(X > b_X + psi x, Y > b_Y + psi_Y y) along t_grid via the oracle.

    Requires finite standardized levels.  PASS means the final product is
    below one tenth of the initial one.
    """
    if not (math.isfinite(x_std) and math.isfinite(y_std)):
        raise DomainError("standardized levels must be finite")
    grid = _check_t_grid(t_grid)
    v_star = model.curve.v_star
    products = []
    for t in grid:
        bx = solve_b_x(model, t)
        by = solve_b_y(model, t)
        psi_x = float(model.radial.aux_psi(bx))
        psi_y = v_star * float(model.radial.aux_psi(by / v_star))
        prob = joint_exceedance_oracle(model, bx + psi_x * x_std, by + psi_y * y_std)
        products.append(t * prob)
    passed = products[-1] < 0.1 * products[0]
    return DecayReport(grid, products, passed)


def lemma2_integral_check(law, angular, z, x):
    """Both sides of the normalized tail-integral convergence statement.

    lhs integrates the radial tail ratio against the one-sided angular
    profile ratio from z upward; rhs is the matching upper incomplete gamma
    value Gamma(tau+1) * Q(tau+1, z).  They agree in the limit of large x.
    """
    z = float(z)
    x = float(x)
    if z < 0.0:
        raise DomainError("z must be nonnegative")
    t0 = angular.t0 if angular.t0 is not None else 0.5
    tau = angular.tau
    psi = float(law.aux_psi(x))
    c = psi / x
    log_base = float(law.log_survival(x))
    # one-sided germ profile of the angular density, extended past the end
    # of the parameter interval by constant continuation
    s_edge = (1.0 - t0) * (1.0 - 1e-9)

    def profile(s):
        return float(angular.density(t0 + min(s, s_edge)))

    g_ref = profile(c)
    if not g_ref > 0.0:
        raise DomainError("angular profile vanishes at the reference offset")

    def integrand(t):
        ratio_r = math.exp(float(law.log_survival(x + psi * t)) - log_base)
        return ratio_r * profile(t * c) / g_ref

    # truncate where the integrand is dead; grow geometrically to be safe
    t_max = 60.0
    while integrand(t_max) > 1e-18 and t_max < 1e6:
        t_max *= 2.0
    breaks = [b for b in ((1.0 - t0) / c if c > 0 else math.inf,) if z < b < t_max]
    window = getattr(angular, "window", None)
    if window is not None and z < window / c < t_max:
        breaks.append(window / c)
    singular = [0.0] if (tau < 0.0 and z == 0.0) else []
    lhs = integrate_with_breakpoints(
        integrand, z, t_max, breakpoints=breaks, abs_scale=1.0,
        singular_points=singular, rel_check=1e-6,
    )
    rhs = float(special.gamma(tau + 1.0) * special.gammaincc(tau + 1.0, z)) if z > 0.0 \
        else float(special.gamma(tau + 1.0))
    return lhs, rhs
