"""Curve parametrizations with local germ data, and angular laws on [0, 1].

A curve is a pair of functions (u, v) on [0, 1] where u has a unique maximum
u(t0) = 1.  The local behaviour is summarized by the germ exponents: 1 - u
grows like c_side |t - t0|**kappa and v - rho like lambda_v |t - t0|**delta.
Angular laws are densities of the parameter T, with one-sided power behaviour
of index tau at t0.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize
from scipy.interpolate import PchipInterpolator

from .errors import ConstructionError, DomainError
from .numerics import bisect_monotone, integrate_with_breakpoints, refine_zeros

__all__ = [
    "CurveGerm",
    "AngularLaw",
    "UniformAngular",
    "PowerAngular",
    "TabulatedAngular",
    "elliptical_curve",
    "lp_curve",
    "power_curve",
    "angular_uniform",
    "angular_power",
    "curve_from_dict",
    "angular_from_dict",
]

_TWO_PI = 2.0 * math.pi


class CurveGerm:
    """A parametrized curve on [0, 1] with its local expansion data.

    Attributes
    ----------
    t0 : location of the unique maximum of u, interior to (0, 1)
    rho : v(t0)
    kappa, delta : local growth exponents of 1 - u and v - rho (delta < kappa)
    c_minus, c_plus : leading coefficients of 1 - u on each side of t0
    lambda_v : leading coefficient of v - rho on the right side
    v_star : maximum of v over [0, 1]
    window : half-width of the validity window around t0
    eta_outside : guaranteed gap, u <= 1 - eta_outside outside the window
    """

    def __init__(self, kind, params, u_fn, v_fn, *, t0, rho, kappa, delta,
                 c_minus, c_plus, lambda_v, window, eta_outside,
                 v_star=None, t_at_vstar=None, kinks=()):
        if not 0.0 < t0 < 1.0:
            raise ConstructionError("t0 must be interior to (0, 1)")
        if not 0.0 < delta < kappa:
            raise ConstructionError("germ exponents must satisfy 0 < delta < kappa")
        if min(c_minus, c_plus, lambda_v) <= 0.0:
            raise ConstructionError("germ coefficients must be positive")
        if not (0.0 < window < min(t0, 1.0 - t0)):
            raise ConstructionError("window must fit inside (0, 1) around t0")
        self.kind = kind
        self.params = dict(params)
        self._u_fn = u_fn
        self._v_fn = v_fn
        self.t0 = float(t0)
        self.rho = float(rho)
        self.kappa = float(kappa)
        self.delta = float(delta)
        self.c_minus = float(c_minus)
        self.c_plus = float(c_plus)
        self.lambda_v = float(lambda_v)
        self.window = float(window)
        self.eta_outside = float(eta_outside)
        self._kinks = tuple(kinks)
        if abs(float(u_fn(t0)) - 1.0) > 1e-12:
            raise ConstructionError("u(t0) must equal 1")
        if v_star is None or t_at_vstar is None:
            v_star, t_at_vstar = self._locate_v_max()
        self.v_star = float(v_star)
        self.t_at_vstar = float(t_at_vstar)
        if not self.v_star > self.rho:
            raise ConstructionError("the maximum of v must exceed rho = v(t0)")
        self._zeros_u = refine_zeros(lambda t: float(u_fn(t)), 0.0, 1.0)
        self._zeros_v = refine_zeros(lambda t: float(v_fn(t)), 0.0, 1.0)
        self._invert_lo, self._invert_hi = self._monotone_branch_ends()

    def _monotone_branch_ends(self):
        """Largest interval around t0 where u is one-to-one on each side.

        The right branch stops at the first zero of u (or at 1); within that
        stretch, trim to the longest strictly monotone prefix.
        """
        right_zeros = [z for z in self._zeros_u if z > self.t0]
        left_zeros = [z for z in self._zeros_u if z < self.t0]
        hi_cap = min(right_zeros) if right_zeros else 1.0
        lo_cap = max(left_zeros) if left_zeros else 0.0
        ts = np.linspace(self.t0, hi_cap, 257)
        vals = np.asarray(self._u_fn(ts), dtype=float)
        bad = np.nonzero(np.diff(vals) > 1e-15)[0]
        hi = float(ts[bad[0]]) if len(bad) else float(hi_cap)
        ts = np.linspace(lo_cap, self.t0, 257)
        vals = np.asarray(self._u_fn(ts), dtype=float)
        bad = np.nonzero(np.diff(vals) < -1e-15)[0]
        lo = float(ts[bad[-1] + 1]) if len(bad) else float(lo_cap)
        return lo, hi

    # -- evaluation -----------------------------------------------------------
    def u(self, t):
        return self._u_fn(np.asarray(t, dtype=float))

    def v(self, t):
        return self._v_fn(np.asarray(t, dtype=float))

    def v_over_u(self, t):
        return float(self._v_fn(t)) / float(self._u_fn(t))

    def _locate_v_max(self):
        ts = np.linspace(0.0, 1.0, 8193)
        vals = self._v_fn(ts)
        k = int(np.argmax(vals))
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
        res = optimize.minimize_scalar(
            lambda t: -float(self._v_fn(t)), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-13},
        )
        if -res.fun >= vals[k]:
            return -float(res.fun), float(res.x)
        return float(vals[k]), float(ts[k])

    # -- inverse machinery ------------------------------------------------------
    def u_inverse(self, y, side):
        """Parameter on the requested side of t0 where u equals y.

        Valid for y between the window edge value of u and 1.
        """
        if side not in ("left", "right"):
            raise DomainError("side must be 'left' or 'right'")
        y = float(y)
        if y > 1.0:
            raise DomainError("u never exceeds 1")
        if y == 1.0:
            return self.t0
        if side == "right":
            lo, hi = self.t0, self._invert_hi
        else:
            lo, hi = self._invert_lo, self.t0
        edge = float(self._u_fn(hi if side == "right" else lo))
        if y < edge:
            raise DomainError(
                f"u level {y} outside the local range [{edge}, 1] on the {side} side"
            )
        return bisect_monotone(lambda t: float(self._u_fn(t)) - y, lo, hi, xtol=1e-15)

    @property
    def h_window_max(self):
        """Largest x admissible in h_fn, from the value of u at the end of
        the invertible right branch."""
        edge = float(self._u_fn(self._invert_hi))
        if edge <= 1e-12:
            return 1e12
        return 1.0 / edge - 1.0

    def h_fn(self, x):
        """Gap of v/u above rho along the level u = 1/(1+x), right branch.

        Increasing in x, regularly varying at zero with index delta/kappa,
        h(0+) = 0.
        """
        x = float(x)
        if x < 0.0:
            raise DomainError("h_fn requires x >= 0")
        if x == 0.0:
            return 0.0
        if x > self.h_window_max:
            raise DomainError(
                f"x = {x} outside the validity window (max {self.h_window_max:.6g})"
            )
        t = self.u_inverse(1.0 / (1.0 + x), "right")
        return self.v_over_u(t) - self.rho

    # -- quadrature support ------------------------------------------------------
    def breakpoints(self):
        """Parameter values where oracle integrands kink or change branch."""
        pts = {self.t0, self.t0 - self.window, self.t0 + self.window, self.t_at_vstar}
        pts.update(self._zeros_u)
        pts.update(self._zeros_v)
        pts.update(self._kinks)
        return sorted(p for p in pts if 0.0 <= p <= 1.0)

    def zeros_of_u(self):
        return list(self._zeros_u)

    def zeros_of_v(self):
        return list(self._zeros_v)

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params)}

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.kind}_curve({inner})"


def elliptical_curve(rho):
    """Sheared circle u = cos, v = rho*cos + sqrt(1-rho^2)*sin over one turn.

    The parameter runs through [0, 1] with the maximum of u at t0 = 1/2.
    """
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise ConstructionError("rho must lie in (-1, 1)")
    sigma = math.sqrt(1.0 - rho * rho)

    def u_fn(t):
        return np.cos(_TWO_PI * (np.asarray(t, dtype=float) - 0.5))

    def v_fn(t):
        th = _TWO_PI * (np.asarray(t, dtype=float) - 0.5)
        return rho * np.cos(th) + sigma * np.sin(th)

    window = 0.2
    return CurveGerm(
        "elliptical", {"rho": rho}, u_fn, v_fn,
        t0=0.5, rho=rho, kappa=2.0, delta=1.0,
        c_minus=_TWO_PI ** 2 / 2.0, c_plus=_TWO_PI ** 2 / 2.0,
        lambda_v=_TWO_PI * sigma,
        window=window, eta_outside=1.0 - math.cos(_TWO_PI * window),
        v_star=1.0, t_at_vstar=0.5 + math.atan2(sigma, rho) / _TWO_PI,
    )


def lp_curve(p, rho=0.0):
    """Closed level curve of |x|^p + |y - rho x|^p / (1 - |rho|^p) = 1, p > 1.

    The whole visible half x >= 0 is parametrized at constant speed in the
    unsheared second coordinate: for |s| <= 3/8 the base point is
    (x, y) = ((1 - |8s/3|^p)^(1/p), 8s/3), which makes the germ kappa = p,
    delta = 1 with coefficients (8/3)^p / p and leaves the invertible branch
    of u free of parametrization artifacts.  The hidden half x < 0 closes
    the curve through a generalized-angle arc.
    """
    p = float(p)
    rho = float(rho)
    if not p > 1.0:
        raise ConstructionError("the level-curve exponent must satisfy p > 1")
    if not -1.0 < rho < 1.0:
        raise ConstructionError("rho must lie in (-1, 1)")
    shear = (1.0 - abs(rho) ** p) ** (1.0 / p)
    speed = 8.0 / 3.0

    def base_xy(t):
        t = np.asarray(t, dtype=float)
        mid = (t >= 0.125) & (t <= 0.875)
        s = np.clip(speed * (t - 0.5), -1.0, 1.0)
        x_mid = (1.0 - np.abs(s) ** p) ** (1.0 / p)
        # hidden half: sweep the generalized angle from pi/2 to 3*pi/2
        frac = np.where(t > 0.875, t - 0.875, t + 0.125)
        phi = 0.5 * math.pi + 4.0 * math.pi * frac
        c, sn = np.cos(phi), np.sin(phi)
        x_arc = -np.abs(c) ** (2.0 / p)
        y_arc = np.sign(sn) * np.abs(sn) ** (2.0 / p)
        return np.where(mid, x_mid, x_arc), np.where(mid, s, y_arc)

    def u_fn(t):
        x, _ = base_xy(t)
        return x

    def v_fn(t):
        x, y = base_xy(t)
        return rho * x + shear * y

    window = 0.25
    eta = 1.0 - (1.0 - (speed * window) ** p) ** (1.0 / p)
    return CurveGerm(
        "lp", {"p": p, "rho": rho}, u_fn, v_fn,
        t0=0.5, rho=rho, kappa=p, delta=1.0,
        c_minus=speed ** p / p, c_plus=speed ** p / p, lambda_v=speed * shear,
        window=window, eta_outside=eta,
        kinks=(0.125, 0.875),
    )


def power_curve(t0, kappa, delta, c_minus, c_plus, lambda_v, rho, window=None):
    """Synthetic curve matching a prescribed germ exactly near t0.

    Inside the window 1 - u and v - rho are pure powers with the given
    coefficients; outside, both continue linearly (matching slope) so that u
    stays below 1 - eta, with a floor keeping u above -1/2.
    """
    t0, kappa, delta = float(t0), float(kappa), float(delta)
    if delta >= kappa:
        raise ConstructionError("germ exponents must satisfy delta < kappa")
    if window is None:
        window = 0.5 * min(t0, 1.0 - t0)
    window = float(window)

    def ell(s):
        c = np.where(s >= 0.0, c_plus, c_minus)
        return c * np.abs(s) ** kappa

    def u_fn(t):
        s = np.asarray(t, dtype=float) - t0
        a = np.abs(s)
        c = np.where(s >= 0.0, c_plus, c_minus)
        inside = 1.0 - c * a ** kappa
        outside = 1.0 - c * window ** kappa - kappa * c * window ** (kappa - 1.0) * (a - window)
        return np.where(a <= window, inside, np.maximum(outside, -0.5))

    def v_fn(t):
        s = np.asarray(t, dtype=float) - t0
        a = np.abs(s)
        sgn = np.sign(s)
        inside = rho + lambda_v * sgn * a ** delta
        outside = rho + sgn * (lambda_v * window ** delta
                               + lambda_v * delta * window ** (delta - 1.0) * (a - window))
        return np.where(a <= window, inside, outside)

    eta = float(min(c_minus, c_plus)) * window ** kappa
    return CurveGerm(
        "power",
        {"t0": t0, "kappa": kappa, "delta": delta, "c_minus": c_minus,
         "c_plus": c_plus, "lambda_v": lambda_v, "rho": rho, "window": window},
        u_fn, v_fn,
        t0=t0, rho=rho, kappa=kappa, delta=delta,
        c_minus=c_minus, c_plus=c_plus, lambda_v=lambda_v,
        window=window, eta_outside=eta,
        kinks=(t0 - window, t0 + window),
    )


# ---------------------------------------------------------------------------
# angular laws
# ---------------------------------------------------------------------------

class AngularLaw:
    """Density of the curve parameter T on [0, 1]."""

    kind = "abstract"
    t0 = None          # anchor of the local power behaviour (None: anywhere)
    tau = 0.0
    g_minus = 1.0
    g_plus = 1.0

    def density(self, t):
        raise NotImplementedError

    def cdf(self, t):
        raise NotImplementedError

    def sample(self, n, rng):
        raise NotImplementedError

    def breakpoints(self):
        return []

    def to_dict(self):
        raise NotImplementedError


class UniformAngular(AngularLaw):
    """T uniform on [0, 1]; tau = 0 with unit side coefficients."""

    kind = "uniform"

    def density(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0.0) & (t <= 1.0), 1.0, 0.0)

    def cdf(self, t):
        return np.clip(np.asarray(t, dtype=float), 0.0, 1.0)

    def sample(self, n, rng):
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        return rng.random(n)

    def to_dict(self):
        return {"kind": self.kind}


class PowerAngular(AngularLaw):
    """One-sided power density |t - t0|**tau inside a window, flat tails.

    Exactly normalized; the fraction of total mass on the left of t0 is a
    construction parameter.
    """

    kind = "power"

    def __init__(self, t0, tau, g_minus_frac=0.5, window=0.25):
        if tau <= -1.0:
            raise ConstructionError("tau must exceed -1 for an integrable density")
        if not 0.0 <= g_minus_frac <= 1.0:
            raise ConstructionError("g_minus_frac must lie in [0, 1]")
        if not (0.0 < window < min(t0, 1.0 - t0)):
            raise ConstructionError("window must fit strictly inside [0, 1] around t0")
        self.t0 = float(t0)
        self.tau = float(tau)
        self.window = float(window)
        self.mass_minus = float(g_minus_frac)
        self.mass_plus = 1.0 - self.mass_minus
        w, tau1 = self.window, self.tau + 1.0
        self._side_len = {-1: self.t0, +1: 1.0 - self.t0}
        self._amp = {}
        for sgn, mass in ((-1, self.mass_minus), (+1, self.mass_plus)):
            denom = w ** tau1 / tau1 + w ** self.tau * (self._side_len[sgn] - w)
            self._amp[sgn] = mass / denom if mass > 0.0 else 0.0
        self.g_minus = self._amp[-1]
        self.g_plus = self._amp[+1]

    def density(self, t):
        t = np.asarray(t, dtype=float)
        s = t - self.t0
        a = np.abs(s)
        amp = np.where(s >= 0.0, self._amp[+1], self._amp[-1])
        with np.errstate(divide="ignore"):
            inner = amp * a ** self.tau
        outer = amp * self.window ** self.tau
        out = np.where(a <= self.window, inner, outer)
        return np.where((t >= 0.0) & (t <= 1.0), out, 0.0)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        w, tau1 = self.window, self.tau + 1.0
        a_m, a_p = self._amp[-1], self._amp[+1]
        flat_m = a_m * w ** self.tau
        flat_p = a_p * w ** self.tau
        left_edge = self.t0 - w
        right_edge = self.t0 + w
        conds = [t <= 0.0, t <= left_edge, t <= self.t0, t <= right_edge, t <= 1.0]
        vals = [
            0.0,
            flat_m * t,
            self.mass_minus - a_m * np.abs(self.t0 - t) ** tau1 / tau1,
            self.mass_minus + a_p * np.abs(t - self.t0) ** tau1 / tau1,
            self.mass_minus + a_p * w ** tau1 / tau1 + flat_p * (t - right_edge),
        ]
        return np.select(conds, vals, default=1.0)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        w, tau1 = self.window, self.tau + 1.0
        a_m, a_p = self._amp[-1], self._amp[+1]
        flat_m = a_m * w ** self.tau
        flat_p = a_p * w ** self.tau
        q_left_edge = flat_m * (self.t0 - w)
        q_right_edge = self.mass_minus + a_p * w ** tau1 / tau1
        with np.errstate(divide="ignore", invalid="ignore"):
            in_left_tail = q / np.maximum(flat_m, 1e-300)
            in_left_win = self.t0 - (np.maximum(self.mass_minus - q, 0.0) * tau1 / max(a_m, 1e-300)) ** (1.0 / tau1)
            in_right_win = self.t0 + (np.maximum(q - self.mass_minus, 0.0) * tau1 / max(a_p, 1e-300)) ** (1.0 / tau1)
            in_right_tail = self.t0 + w + (q - q_right_edge) / np.maximum(flat_p, 1e-300)
        conds = [q <= q_left_edge, q <= self.mass_minus, q <= q_right_edge]
        return np.select(conds, [in_left_tail, in_left_win, in_right_win], default=in_right_tail)

    def sample(self, n, rng):
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        return self.quantile(rng.random(n))

    def breakpoints(self):
        return [self.t0 - self.window, self.t0, self.t0 + self.window]

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {
                "t0": self.t0, "tau": self.tau,
                "g_minus_frac": self.mass_minus, "window": self.window,
            },
        }


class TabulatedAngular(AngularLaw):
    """Angular law built from a positive density function by tabulation.

    Used for decomposed models where the density is a curve Jacobian; the
    density is assumed bounded with a positive limit at t0 (tau = 0).
    """

    kind = "tabulated"

    def __init__(self, density_fn, t0, n_nodes=4097):
        self.t0 = float(t0)
        nodes = np.unique(np.concatenate([np.linspace(0.0, 1.0, n_nodes), [self.t0]]))
        raw = np.array([max(float(density_fn(t)), 0.0) for t in nodes])
        if not np.all(np.isfinite(raw)):
            raise ConstructionError("angular density must be finite on [0, 1]")
        # composite Simpson-like mass per panel via three-point evaluation
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        mid_vals = np.array([max(float(density_fn(t)), 0.0) for t in mids])
        panel = (nodes[1:] - nodes[:-1]) * (raw[:-1] + 4.0 * mid_vals + raw[1:]) / 6.0
        total = float(np.sum(panel))
        if not total > 0.0:
            raise ConstructionError("angular density integrates to zero")
        self._nodes = nodes
        self._dens = raw / total
        self._cdf_vals = np.concatenate([[0.0], np.cumsum(panel)]) / total
        self._cdf_vals[-1] = 1.0
        self._cdf = PchipInterpolator(nodes, self._cdf_vals)
        # densities read off the monotone cdf interpolant integrate to one
        # exactly and stay nonnegative
        self._pdf = self._cdf.derivative()
        keep = np.concatenate([[True], np.diff(self._cdf_vals) > 1e-15])
        self._quantile = PchipInterpolator(self._cdf_vals[keep], nodes[keep])
        self.tau = 0.0
        near = 1e-6
        self.g_minus = float(self.density(self.t0 - near))
        self.g_plus = float(self.density(self.t0 + near))

    def density(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0.0) & (t <= 1.0)
        out = np.maximum(self._pdf(np.clip(t, 0.0, 1.0)), 0.0)
        return np.where(inside, out, 0.0)

    def cdf(self, t):
        return np.clip(self._cdf(np.clip(np.asarray(t, dtype=float), 0.0, 1.0)), 0.0, 1.0)

    def sample(self, n, rng):
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        return np.clip(self._quantile(rng.random(n)), 0.0, 1.0)

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {"t0": self.t0},
            "grid": {"t": self._nodes.tolist(), "density": self._dens.tolist()},
        }

    @classmethod
    def from_grid(cls, params, grid):
        nodes = np.asarray(grid["t"], dtype=float)
        dens = np.asarray(grid["density"], dtype=float)
        interp = PchipInterpolator(nodes, dens)
        return cls(lambda t: float(interp(t)), params["t0"], n_nodes=len(nodes))


def angular_uniform():
    """T uniform over [0, 1]."""
    return UniformAngular()


def angular_power(t0, tau, g_minus_frac=0.5, window=0.25):
    """Angular law with one-sided power behaviour of index tau at t0."""
    return PowerAngular(t0, tau, g_minus_frac=g_minus_frac, window=window)


def check_angular_normalization(law, tol=1e-10):
    """Quadrature check that the density integrates to one."""
    singular = [law.t0] if (law.t0 is not None and law.tau < 0.0) else []
    total = integrate_with_breakpoints(
        lambda t: float(law.density(t)), 0.0, 1.0,
        breakpoints=law.breakpoints(), abs_scale=1.0, singular_points=singular,
    )
    if abs(total - 1.0) > tol:
        raise ConstructionError(f"angular density integrates to {total}, not 1")
    return total


def curve_from_dict(data):
    try:
        kind = data["kind"]
    except (TypeError, KeyError):
        raise ConstructionError("curve spec must be a mapping with a 'kind' entry")
    params = dict(data.get("params", {}))
    extra = set(data) - {"kind", "params"}
    if extra:
        raise ConstructionError(f"unknown curve keys: {sorted(extra)}")
    builders = {"elliptical": elliptical_curve, "lp": lp_curve, "power": power_curve}
    if kind not in builders:
        raise ConstructionError(f"unknown curve kind '{kind}'")
    try:
        return builders[kind](**params)
    except TypeError as exc:
        raise ConstructionError(f"bad parameters for curve '{kind}': {exc}")


def angular_from_dict(data):
    try:
        kind = data["kind"]
    except (TypeError, KeyError):
        raise ConstructionError("angular spec must be a mapping with a 'kind' entry")
    params = dict(data.get("params", {}))
    if kind == "uniform":
        if params:
            raise ConstructionError("uniform angular law takes no parameters")
        return UniformAngular()
    if kind == "power":
        extra = set(data) - {"kind", "params"}
        if extra:
            raise ConstructionError(f"unknown angular keys: {sorted(extra)}")
        try:
            return PowerAngular(**params)
        except TypeError as exc:
            raise ConstructionError(f"bad parameters for angular law: {exc}")
    if kind == "tabulated":
        if "grid" not in data:
            raise ConstructionError("serialized tabulated angular law requires its grid")
        return TabulatedAngular.from_grid(params, data["grid"])
    raise ConstructionError(f"unknown angular kind '{kind}'")
