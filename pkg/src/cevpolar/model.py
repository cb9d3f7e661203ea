"""Polar models R(u(T), v(T)): sampling, the quadrature oracle, decomposition.

The oracle evaluates joint probabilities of (X, Y) = R(u(T), v(T)) exactly by
integrating the radial survival along the curve against the angular density,
with explicit case analysis on the signs of u and v.  It is the deterministic
ground truth every asymptotic claim is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import (
    ConstructionError,
    DegenerateWeightsError,
    DomainError,
)
from .geometry import TabulatedAngular, angular_from_dict, curve_from_dict
from .numerics import bisect_monotone, integrate_with_breakpoints, refine_zeros
from .radial import TabulatedRadial, radial_from_dict

__all__ = [
    "PolarModel",
    "MixtureModel",
    "WeightedSample",
    "sample_joint",
    "sample_conditional",
    "survival_x_oracle",
    "survival_y_oracle",
    "joint_exceedance_oracle",
    "joint_cdf_y_oracle",
    "conditional_cdf_oracle",
    "solve_b_x",
    "solve_b_y",
    "decompose_density",
    "mixture_conditional_cdf",
    "standard_normal_profile",
    "quartic_ridge_weight",
    "model_from_dict",
]

_LOG_TINY = -745.0  # below this, double-precision survival underflows


@dataclass(frozen=True)
class PolarModel:
    """Radial law, angular law and curve assembled into one bivariate vector."""

    radial: object
    angular: object
    curve: object

    def __post_init__(self):
        t0 = getattr(self.angular, "t0", None)
        if t0 is not None and abs(t0 - self.curve.t0) > 1e-12:
            raise ConstructionError(
                f"angular law anchored at {t0} but curve peaks at {self.curve.t0}"
            )

    def to_dict(self):
        return {
            "radial": self.radial.to_dict(),
            "curve": self.curve.to_dict(),
            "angular": self.angular.to_dict(),
        }


def model_from_dict(data):
    keys = set(data)
    if keys != {"radial", "curve", "angular"}:
        raise ConstructionError(
            f"model spec must have exactly the keys radial/curve/angular, got {sorted(keys)}"
        )
    return PolarModel(
        radial=radial_from_dict(data["radial"]),
        curve=curve_from_dict(data["curve"]),
        angular=angular_from_dict(data["angular"]),
    )


@dataclass(frozen=True)
class MixtureModel:
    """Two-component Gaussian mixture with distinct regression slopes.

    The optional cone (c1, c2) must contain the primary slope ``rho`` and
    exclude the secondary slope ``tau_mix``.
    """

    p: float
    rho: float
    tau_mix: float
    cone: tuple | None = None

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ConstructionError("mixture weight must lie in (0, 1)")
        for name, val in (("rho", self.rho), ("tau_mix", self.tau_mix)):
            if not -1.0 <= val <= 1.0:
                raise ConstructionError(f"{name} must lie in [-1, 1]")
        if self.rho == self.tau_mix:
            raise ConstructionError("the two slopes must differ")
        if self.cone is not None:
            c1, c2 = self.cone
            if not c1 < c2:
                raise ConstructionError("cone must satisfy c1 < c2")
            if not (c1 <= self.rho <= c2):
                raise ConstructionError("cone must contain the primary slope rho")
            if c1 <= self.tau_mix <= c2:
                raise ConstructionError("cone must exclude the secondary slope tau_mix")

    def to_dict(self):
        out = {"p": self.p, "rho": self.rho, "tau_mix": self.tau_mix}
        if self.cone is not None:
            out["cone"] = list(self.cone)
        return out


@dataclass(frozen=True)
class WeightedSample:
    """Importance-weighted draws of (X, Y) given X > threshold.

    Weights are normalized to sum to one; every emitted x strictly exceeds
    the threshold.
    """

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    threshold: float

    def __len__(self):
        return len(self.x)

    @property
    def effective_size(self):
        if len(self.weights) == 0:
            return 0.0
        return float(1.0 / np.sum(self.weights ** 2))

    @property
    def max_weight_fraction(self):
        if len(self.weights) == 0:
            return 0.0
        return float(np.max(self.weights))

    def to_csv(self, path, metadata=None):
        with open(path, "w") as fh:
            for key, value in (metadata or {}).items():
                fh.write(f"# {key}={value}\n")
            fh.write("x,y,weight\n")
            for xi, yi, wi in zip(self.x, self.y, self.weights):
                fh.write(f"{float(xi)!r},{float(yi)!r},{float(wi)!r}\n")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_joint(model, n, rng):
    """n i.i.d. pairs (R u(T), R v(T)); radius and angle use separate streams."""
    if n < 0:
        raise DomainError("sample size must be nonnegative")
    if n == 0:
        return np.empty((0, 2))
    rng_t, rng_r = rng.spawn(2)
    t = model.angular.sample(n, rng_t)
    r = model.radial.sample(n, rng_r)
    return np.column_stack([r * model.curve.u(t), r * model.curve.v(t)])


def sample_conditional(model, t, n, rng):
    """Exact weighted draws from the law of (X, Y) given X > t.

    Angles are proposed from the angular law; each proposal T gets weight
    proportional to S(t / u(T)) (zero when u(T) <= 0), and the radius is
    drawn from R | R > t/u(T) by inverse transform on the survival scale.
    Zero-weight proposals carry no information and are dropped.
    """
    t = float(t)
    if t <= 0.0:
        raise DomainError("threshold must be positive")
    if float(model.radial.log_survival(t)) < _LOG_TINY:
        raise DegenerateWeightsError(
            "radial survival underflows at the threshold",
            {"threshold": t, "log_survival": float(model.radial.log_survival(t))},
        )
    if n < 0:
        raise DomainError("sample size must be nonnegative")
    if n == 0:
        return WeightedSample(np.empty(0), np.empty(0), np.empty(0), t)
    rng_t, rng_u = rng.spawn(2)
    angles = model.angular.sample(n, rng_t)
    u_vals = np.asarray(model.curve.u(angles), dtype=float)
    keep = u_vals > 0.0
    if not np.any(keep):
        raise DegenerateWeightsError(
            "no proposal fell where u > 0",
            {"threshold": t, "proposals": n},
        )
    angles, u_vals = angles[keep], u_vals[keep]
    uniforms = 1.0 - rng_u.random(n)[keep]  # in (0, 1]
    log_w = np.asarray(model.radial.log_survival(t / u_vals), dtype=float)
    top = float(np.max(log_w))
    if not math.isfinite(top):
        raise DegenerateWeightsError(
            "all importance weights underflowed",
            {"threshold": t, "max_log_weight": top, "proposals": n},
        )
    radii = np.asarray(
        model.radial.inverse_log_survival(np.log(uniforms) + log_w), dtype=float
    )
    x = radii * u_vals
    x = np.where(x <= t, np.nextafter(t, np.inf), x)  # guard 1-ulp roundoff
    y = radii * np.asarray(model.curve.v(angles), dtype=float)
    w = np.exp(log_w - top)
    w /= np.sum(w)
    return WeightedSample(x, y, w, t)


# ---------------------------------------------------------------------------
# quadrature oracle
# ---------------------------------------------------------------------------

def _u_level_hints(model, x):
    """Parameters where the normalized radial argument reaches fixed depths."""
    curve = model.curve
    psi = float(model.radial.aux_psi(x))
    hints = []
    for omega in (4.0, 45.0):
        level = x / (x + omega * psi)
        for side in ("left", "right"):
            try:
                hints.append(curve.u_inverse(level, side))
            except DomainError:
                pass
    return hints


def _v_level_hints(model, y):
    """Parameters where v crosses the levels that localize the Y-tail mass."""
    curve = model.curve
    r0 = y / curve.v_star
    psi = float(model.radial.aux_psi(r0))
    hints = []
    for omega in (4.0, 45.0):
        level = y / (r0 + omega * psi)
        hints.extend(refine_zeros(lambda s: float(curve.v(s)) - level, 0.0, 1.0, n_scan=513))
    return hints


def _crossing_hints(model, x, y):
    """Parameters where x/u(t) and y/v(t) swap order (integrand kinks)."""
    curve = model.curve
    ts = np.linspace(0.0, 1.0, 1025)
    d = x * np.asarray(curve.v(ts), dtype=float) - y * np.asarray(curve.u(ts), dtype=float)
    out = []
    for i in range(len(ts) - 1):
        if d[i] == 0.0:
            out.append(float(ts[i]))
        elif d[i] * d[i + 1] < 0.0:
            lo, hi = ts[i], ts[i + 1]
            fn = lambda s: x * float(curve.v(s)) - y * float(curve.u(s))
            out.append(bisect_monotone(fn, lo, hi, xtol=1e-14))
    return out


def _oracle_integrate(model, integrand, x, extra_breaks=()):
    curve, ang = model.curve, model.angular
    scale = float(model.radial.survival(x))
    if scale == 0.0:
        raise DomainError("threshold beyond double-precision survival")
    breaks = list(curve.breakpoints()) + list(ang.breakpoints()) + list(extra_breaks)
    singular = [ang.t0] if (ang.t0 is not None and ang.tau < 0.0) else []
    return integrate_with_breakpoints(
        integrand, 0.0, 1.0, breakpoints=breaks,
        abs_scale=scale, singular_points=singular,
    )


def survival_x_oracle(model, x):
    """P(X > x) by quadrature of the radial survival along the curve."""
    x = float(x)
    if x <= 0.0:
        raise DomainError("x must be positive")
    curve, ang, radial = model.curve, model.angular, model.radial

    def integrand(t):
        u = float(curve.u(t))
        if u <= 0.0:
            return 0.0
        return float(radial.survival(x / u)) * float(ang.density(t))

    return _oracle_integrate(model, integrand, x, _u_level_hints(model, x))


def survival_y_oracle(model, y):
    """P(Y > y) for y > 0, by quadrature along the region where v > 0."""
    y = float(y)
    if y <= 0.0:
        raise DomainError("the Y-tail oracle requires y > 0")
    curve, ang, radial = model.curve, model.angular, model.radial

    def integrand(t):
        v = float(curve.v(t))
        if v <= 0.0:
            return 0.0
        return float(radial.survival(y / v)) * float(ang.density(t))

    scale = float(radial.survival(y / curve.v_star))
    if scale == 0.0:
        raise DomainError("threshold beyond double-precision survival")
    breaks = (list(curve.breakpoints()) + list(ang.breakpoints())
              + _v_level_hints(model, y))
    singular = [ang.t0] if (ang.t0 is not None and ang.tau < 0.0) else []
    return integrate_with_breakpoints(
        integrand, 0.0, 1.0, breakpoints=breaks,
        abs_scale=scale, singular_points=singular,
    )


def joint_exceedance_oracle(model, x, y):
    """P(X > x, Y > y) with full sign-case handling; y may be -inf or +inf."""
    x = float(x)
    y = float(y)
    if x <= 0.0:
        raise DomainError("x must be positive")
    if y == -math.inf:
        return survival_x_oracle(model, x)
    if y == math.inf:
        return 0.0
    curve, ang, radial = model.curve, model.angular, model.radial

    def integrand(t):
        u = float(curve.u(t))
        if u <= 0.0:
            return 0.0
        g = float(ang.density(t))
        if g == 0.0:
            return 0.0
        v = float(curve.v(t))
        ru = x / u
        if v > 0.0:
            level = max(ru, y / v) if y > 0.0 else ru
            return float(radial.survival(level)) * g
        if v == 0.0:
            return float(radial.survival(ru)) * g if y < 0.0 else 0.0
        if y >= 0.0:
            return 0.0
        rv = y / v
        if rv <= ru:
            return 0.0
        return (float(radial.survival(ru)) - float(radial.survival(rv))) * g

    extra = _u_level_hints(model, x) + _crossing_hints(model, x, y)
    return _oracle_integrate(model, integrand, x, extra)


def joint_cdf_y_oracle(model, x, y):
    """P(X > x, Y <= y) by complementation inside the same integrand."""
    x = float(x)
    y = float(y)
    if x <= 0.0:
        raise DomainError("x must be positive")
    if y == math.inf:
        return survival_x_oracle(model, x)
    if y == -math.inf:
        return 0.0
    curve, ang, radial = model.curve, model.angular, model.radial

    def integrand(t):
        u = float(curve.u(t))
        if u <= 0.0:
            return 0.0
        g = float(ang.density(t))
        if g == 0.0:
            return 0.0
        v = float(curve.v(t))
        ru = x / u
        if v > 0.0:
            if y <= 0.0:
                return 0.0
            level = max(ru, y / v)
            return (float(radial.survival(ru)) - float(radial.survival(level))) * g
        if v == 0.0:
            return float(radial.survival(ru)) * g if y >= 0.0 else 0.0
        if y >= 0.0:
            return float(radial.survival(ru)) * g
        return float(radial.survival(max(ru, y / v))) * g

    extra = _u_level_hints(model, x) + _crossing_hints(model, x, y)
    return _oracle_integrate(model, integrand, x, extra)


def conditional_cdf_oracle(model, frame, x_std, y_std):
    """Exact P(X <= t + psi_t x, Y <= m_t + a_t y | X > t) for a frame.

    Either standardized coordinate may be +inf (marginalized out).
    Nondecreasing in each argument.
    """
    denom = survival_x_oracle(model, frame.t)
    if denom < 1e-300:
        raise DomainError("conditioning event has vanishing double-precision mass")
    y_cut = math.inf if y_std == math.inf else frame.m_t + frame.a_t * y_std
    lower = joint_cdf_y_oracle(model, frame.t, y_cut)
    if x_std == math.inf:
        upper = 0.0
    else:
        upper = joint_cdf_y_oracle(model, frame.t + frame.psi_t * x_std, y_cut)
    return max((lower - upper) / denom, 0.0)


def solve_b_x(model, t_level, rtol=1e-10):
    """Oracle level with P(X > level) = 1/t_level, by monotone bisection."""
    t_level = float(t_level)
    if t_level <= 1.0:
        raise DomainError("t_level must exceed 1")
    target = math.log(t_level)
    cap = float(model.radial.quantile_b(t_level))  # P(X > x) <= S(x) so root <= cap

    def fn(x):
        return -math.log(survival_x_oracle(model, x)) - target

    lo = cap * 0.5
    while fn(lo) > 0.0:
        lo *= 0.5
        if lo < cap * 1e-6:
            raise DomainError("failed to bracket the X-quantile")
    return bisect_monotone(fn, lo, cap * (1.0 + 1e-12), rtol=rtol, xtol=1e-13 * cap)


def solve_b_y(model, t_level, rtol=1e-10):
    """Oracle level with P(Y > level) = 1/t_level, by monotone bisection."""
    t_level = float(t_level)
    if t_level <= 1.0:
        raise DomainError("t_level must exceed 1")
    target = math.log(t_level)
    cap = model.curve.v_star * float(model.radial.quantile_b(t_level))

    def fn(y):
        return -math.log(survival_y_oracle(model, y)) - target

    lo = cap * 0.5
    while fn(lo) > 0.0:
        lo *= 0.5
        if lo < cap * 1e-6:
            raise DomainError("failed to bracket the Y-quantile")
    return bisect_monotone(fn, lo, cap * (1.0 + 1e-12), rtol=rtol, xtol=1e-13 * cap)


# ---------------------------------------------------------------------------
# density decomposition
# ---------------------------------------------------------------------------

def standard_normal_profile(r):
    """Radial profile of the standard bivariate normal density."""
    return math.exp(-0.5 * r * r) / (2.0 * math.pi)


def quartic_ridge_weight(theta):
    """Bounded angular modulation 1 + (theta^2 - (pi/4)^2)^2."""
    return 1.0 + (theta * theta - (math.pi / 4.0) ** 2) ** 2


def decompose_density(radial_profile, curve, angular_weight=None, n_radial_nodes=2049):
    """Split a density with curve-shaped level lines into a polar model.

    The input density is radial_profile(n(x, y)), optionally modulated by a
    bounded angular weight along the curve parameter; n is the 1-homogeneous
    gauge whose unit level set is the curve.  The exact change of variables
    gives a radius with density proportional to r * radial_profile(r) and an
    angle with density proportional to |u v' - u' v| times the weight.
    """
    radial = TabulatedRadial(
        lambda r: r * float(radial_profile(r)), n_nodes=n_radial_nodes
    )

    step = 1e-5

    def jacobian(t):
        lo = min(max(t - step, 0.0), 1.0 - 2.0 * step)
        hi = lo + 2.0 * step
        mid = 0.5 * (lo + hi)
        du = (float(curve.u(hi)) - float(curve.u(lo))) / (hi - lo)
        dv = (float(curve.v(hi)) - float(curve.v(lo))) / (hi - lo)
        return abs(float(curve.u(mid)) * dv - du * float(curve.v(mid)))

    if angular_weight is None:
        dens = jacobian
    else:
        def dens(t):
            return jacobian(t) * float(angular_weight(t))

    angular = TabulatedAngular(dens, t0=curve.t0)
    return PolarModel(radial=radial, angular=angular, curve=curve)


# ---------------------------------------------------------------------------
# Gaussian mixture reference model
# ---------------------------------------------------------------------------

def _truncated_normal_mean(fn, x):
    """E[fn(X) | X > x] for standard normal X, stable at deep thresholds.

    Factoring exp(-x^2/2) out of both numerator and denominator leaves
    integrals of exp(-x e - e^2/2) over the excess e >= 0.
    """
    upper = (math.sqrt(x * x + 160.0) - x) if x > 0.0 else 13.0

    def weight(e):
        return math.exp(-x * e - 0.5 * e * e)

    num = integrate_with_breakpoints(
        lambda e: fn(x + e) * weight(e), 0.0, upper, abs_scale=1.0, rel_check=1e-6,
    )
    den = integrate_with_breakpoints(weight, 0.0, upper, abs_scale=1.0, rel_check=1e-6)
    return num / den


def _interval_normal_prob(lo, hi):
    if hi <= lo:
        return 0.0
    return float(special.ndtr(hi) - special.ndtr(lo))


def mixture_conditional_cdf(mix, x, z):
    """Exact P(Y <= rho x + sqrt(1-rho^2) z | X > x) for the Gaussian mixture.

    With a cone, the probability is additionally conditioned on (X, Y)
    staying between the lines y = c1 x and y = c2 x.  No sampling: both
    numerator and denominator are one-dimensional Gaussian integrals.
    """
    x = float(x)
    if x <= 0.0:
        raise DomainError("threshold must be positive")
    if z == math.inf:
        return 1.0
    if z == -math.inf:
        return 0.0
    rho, tau, p = mix.rho, mix.tau_mix, mix.p
    s_rho = math.sqrt(max(1.0 - rho * rho, 0.0))
    s_tau = math.sqrt(max(1.0 - tau * tau, 0.0))
    y_cut = rho * x + s_rho * z

    def component_cdf(slope, noise):
        if noise == 0.0:
            return lambda s: 1.0 if slope * s <= y_cut else 0.0
        return lambda s: float(special.ndtr((y_cut - slope * s) / noise))

    if mix.cone is None:
        f_rho = component_cdf(rho, s_rho)
        f_tau = component_cdf(tau, s_tau)
        return (p * _truncated_normal_mean(f_rho, x)
                + (1.0 - p) * _truncated_normal_mean(f_tau, x))

    c1, c2 = mix.cone

    def component_interval(slope, noise, capped):
        def fn(s):
            hi = min(c2 * s, y_cut) if capped else c2 * s
            lo = c1 * s
            if noise == 0.0:
                return 1.0 if lo <= slope * s <= hi else 0.0
            return _interval_normal_prob((lo - slope * s) / noise, (hi - slope * s) / noise)
        return fn

    num = (p * _truncated_normal_mean(component_interval(rho, s_rho, True), x)
           + (1.0 - p) * _truncated_normal_mean(component_interval(tau, s_tau, True), x))
    den = (p * _truncated_normal_mean(component_interval(rho, s_rho, False), x)
           + (1.0 - p) * _truncated_normal_mean(component_interval(tau, s_tau, False), x))
    if den <= 0.0:
        raise DomainError("cone carries no conditional mass at this threshold")
    return min(num / den, 1.0)
