"""Radial laws with light (Gumbel-domain) upper tails.

Every law exposes survival, density, the canonical auxiliary scale
``psi = survival / density``, log-space inversion of the survival function,
and seeded inverse-transform sampling.  Log-space inversion is what keeps
conditional sampling exact at thresholds where the survival function itself
underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import ConstructionError, DomainError
from .numerics import bisect_monotone, integrate_panel

__all__ = [
    "RadialLaw",
    "Exponential",
    "Weibull",
    "Rayleigh",
    "VonMisesRadial",
    "TabulatedRadial",
    "build_von_mises",
    "sample_radial",
    "tail_ratio_bound",
    "TailRatioWitness",
    "radial_from_dict",
]


def _check_nonnegative(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError(f"{name} must be nonnegative")
    return arr


def _check_positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError(f"{name} must be positive")
    return arr


def _maybe_scalar(arr, scalar_input):
    return float(arr) if scalar_input else arr


class RadialLaw:
    """Base class: nonnegative radius with infinite support and light tail."""

    kind: str = "abstract"

    # -- core contract -----------------------------------------------------
    def log_survival(self, x):
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def aux_psi(self, x):
        """Canonical auxiliary scale survival/density, positive for x > 0."""
        raise NotImplementedError

    def inverse_log_survival(self, logq):
        """x such that log survival(x) = logq, for logq <= 0."""
        raise NotImplementedError

    # -- derived operations --------------------------------------------------
    def survival(self, x):
        scalar = np.isscalar(x)
        arr = _check_nonnegative(x)
        out = np.exp(self.log_survival(arr))
        return _maybe_scalar(out, scalar)

    def quantile_b(self, t):
        """Level b(t) with survival(b(t)) = 1/t, defined for t > 1."""
        scalar = np.isscalar(t)
        arr = np.asarray(t, dtype=float)
        if np.any(arr <= 1.0):
            raise DomainError("quantile_b requires t > 1")
        out = self.inverse_log_survival(-np.log(arr))
        return _maybe_scalar(np.asarray(out, dtype=float), scalar)

    def sample(self, n, rng):
        """n i.i.d. draws by inverse transform on the survival scale."""
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        if n == 0:
            return np.empty(0)
        v = 1.0 - rng.random(n)  # in (0, 1]
        return np.asarray(self.inverse_log_survival(np.log(v)), dtype=float)

    # -- serialization -------------------------------------------------------
    def to_dict(self):
        raise NotImplementedError


class Exponential(RadialLaw):
    """Survival exp(-rate * x); auxiliary scale 1/rate."""

    kind = "exponential"

    def __init__(self, rate=1.0):
        if not rate > 0.0:
            raise ConstructionError("rate must be positive")
        self.rate = float(rate)

    def log_survival(self, x):
        return -self.rate * _check_nonnegative(x)

    def density(self, x):
        return self.rate * np.exp(-self.rate * _check_nonnegative(x))

    def aux_psi(self, x):
        arr = _check_positive(x)
        return _maybe_scalar(np.full_like(arr, 1.0 / self.rate), np.isscalar(x))

    def inverse_log_survival(self, logq):
        return -np.asarray(logq, dtype=float) / self.rate

    def to_dict(self):
        return {"kind": self.kind, "params": {"rate": self.rate}}


class Weibull(RadialLaw):
    """Survival exp(-x**shape); auxiliary scale x**(1-shape)/shape."""

    kind = "weibull"

    def __init__(self, shape):
        if not shape > 0.0:
            raise ConstructionError("shape must be positive")
        self.shape = float(shape)

    def log_survival(self, x):
        return -_check_nonnegative(x) ** self.shape

    def density(self, x):
        arr = _check_nonnegative(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.shape * arr ** (self.shape - 1.0) * np.exp(-(arr ** self.shape))
        return out

    def aux_psi(self, x):
        arr = _check_positive(x)
        return _maybe_scalar(arr ** (1.0 - self.shape) / self.shape, np.isscalar(x))

    def inverse_log_survival(self, logq):
        return (-np.asarray(logq, dtype=float)) ** (1.0 / self.shape)

    def to_dict(self):
        return {"kind": self.kind, "params": {"shape": self.shape}}


class Rayleigh(RadialLaw):
    """Survival exp(-x**2/2); auxiliary scale 1/x."""

    kind = "rayleigh"

    def log_survival(self, x):
        arr = _check_nonnegative(x)
        return -0.5 * arr * arr

    def density(self, x):
        arr = _check_nonnegative(x)
        return arr * np.exp(-0.5 * arr * arr)

    def aux_psi(self, x):
        arr = _check_positive(x)
        return _maybe_scalar(1.0 / arr, np.isscalar(x))

    def inverse_log_survival(self, logq):
        return np.sqrt(-2.0 * np.asarray(logq, dtype=float))

    def to_dict(self):
        return {"kind": self.kind, "params": {}}


class VonMisesRadial(RadialLaw):
    """Law defined by survival = scale * exp(-integral of 1/psi), capped at 1.

    The cumulative integral J(x) = int_0^x ds/psi(s) is tabulated on an
    adaptive grid with its exact derivative 1/psi at the nodes, and evaluated
    through a cubic Hermite spline, so survival and quantiles are mutually
    consistent to machine precision.
    """

    kind = "von_mises"

    #: stop tabulating once the law has decayed below double precision
    _J_DEPTH = 750.0
    _MAX_NODES = 200_000

    def __init__(self, psi, x0=0.0, scale=1.0, _grid=None):
        if not 0.0 < scale <= 1.0:
            raise ConstructionError("scale must lie in (0, 1]")
        if x0 < 0.0:
            raise ConstructionError("x0 must be nonnegative")
        self.x0 = float(x0)
        self.scale = float(scale)
        self._psi = psi
        if _grid is not None:
            xs, js, jps = _grid
        else:
            xs, js, jps = self._build_grid(psi)
        self._xs = np.asarray(xs, dtype=float)
        self._js = np.asarray(js, dtype=float)
        self._jps = np.asarray(jps, dtype=float)
        self._spline = CubicHermiteSpline(self._xs, self._js, self._jps)
        self._j_x0 = float(self._spline(self.x0))
        if self.x0 > self._xs[-1]:
            raise ConstructionError("x0 beyond tabulated range")

    # -- construction ---------------------------------------------------------
    def _build_grid(self, psi):
        def inv_psi(x):
            p = float(psi(x))
            if not p > 0.0 or not math.isfinite(p):
                raise ConstructionError(f"psi({x}) = {p} is not a positive finite value")
            return 1.0 / p

        depth = self._J_DEPTH + max(0.0, -math.log(self.scale)) + 1.0
        xs = [0.0]
        jps = [inv_psi(0.0) if self._safe_at_zero(psi) else 0.0]
        js = [0.0]
        x = 0.0
        j = 0.0
        j_ref = 0.0 if self.x0 == 0.0 else None  # J at x0, set when the grid passes it
        history = []  # (x, j) pairs for the divergence heuristic
        while j_ref is None or j - j_ref < depth:
            p = float(psi(max(x, 1e-300)))
            if not p > 0.0 or not math.isfinite(p):
                raise ConstructionError(f"psi({x}) = {p} is not a positive finite value")
            dx = min(max(0.5 * p, 1e-9 * (1.0 + x)), 0.25 * (1.0 + x))
            seg, _ = integrate_panel(inv_psi, x, x + dx, epsrel=1e-12)
            if not math.isfinite(seg):
                raise ConstructionError(
                    "1/psi is not integrable on the grid; psi vanishes or is singular"
                )
            x += dx
            j += seg
            xs.append(x)
            js.append(j)
            jps.append(inv_psi(x))
            history.append((x, j))
            if j_ref is None and x >= self.x0:
                j_ref = j
            if len(xs) >= self._MAX_NODES:
                raise ConstructionError(
                    "integral of 1/psi grows too slowly; the law does not decay "
                    "fast enough to tabulate (is the integral divergent?)"
                )
            if x > 1e13 and len(history) > 64:
                _, j_half = history[len(history) // 2]
                if j - j_half < 1e-6 * max(j, 1.0):
                    raise ConstructionError(
                        "integral of 1/psi appears convergent; not a valid light-tailed law"
                    )
        return xs, js, jps

    @staticmethod
    def _safe_at_zero(psi):
        try:
            p = float(psi(0.0))
            return math.isfinite(p) and p > 0.0
        except (ArithmeticError, ValueError):
            return False

    # -- evaluation ------------------------------------------------------------
    def _j_rel(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.where(
            arr <= self._xs[-1],
            self._spline(np.clip(arr, 0.0, self._xs[-1])),
            self._js[-1] + (arr - self._xs[-1]) * self._jps[-1],
        )
        return out - self._j_x0

    def log_survival(self, x):
        arr = _check_nonnegative(x)
        out = np.minimum(math.log(self.scale) - self._j_rel(arr), 0.0)
        return _maybe_scalar(out, np.isscalar(x))

    def aux_psi(self, x):
        arr = _check_positive(x)
        if self._psi is not None:
            out = np.asarray([float(self._psi(v)) for v in np.atleast_1d(arr)])
            out = out.reshape(np.shape(arr))
        else:
            out = 1.0 / self._spline.derivative()(arr)
        return _maybe_scalar(out, np.isscalar(x))

    def density(self, x):
        return self.survival(x) / self.aux_psi(np.maximum(np.asarray(x, dtype=float), 1e-300))

    def inverse_log_survival(self, logq):
        scalar = np.isscalar(logq)
        arr = np.atleast_1d(np.asarray(logq, dtype=float))
        if np.any(arr > 0.0):
            raise DomainError("log survival levels must be <= 0")
        out = np.array([self._invert_one(v) for v in arr])
        return _maybe_scalar(out if not scalar else out[0], scalar)

    def _invert_one(self, logq):
        target = math.log(self.scale) - logq  # required J(x) - J(x0)
        if target <= 0.0:
            # atom of the capped survival at the left edge of the decay region
            return self._cap_edge()
        j_target = target + self._j_x0
        if j_target > self._js[-1]:
            slope = self._jps[-1]
            if slope <= 0.0:
                raise DomainError("quantile beyond tabulated range")
            return float(self._xs[-1] + (j_target - self._js[-1]) / slope)
        k = int(np.searchsorted(self._js, j_target, side="left"))
        k = max(1, min(k, len(self._js) - 1))
        lo, hi = self._xs[k - 1], self._xs[k]
        return bisect_monotone(lambda v: float(self._spline(v)) - j_target, lo, hi)

    def _cap_edge(self):
        if self.scale < 1.0:
            return self.x0
        k = int(np.searchsorted(self._js, self._j_x0, side="right"))
        return float(self._xs[max(0, k - 1)])

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {"x0": self.x0, "scale": self.scale},
            "grid": {
                "x": self._xs.tolist(),
                "J": self._js.tolist(),
                "Jp": self._jps.tolist(),
            },
        }

    @classmethod
    def from_grid(cls, params, grid):
        return cls(
            psi=None,
            x0=params["x0"],
            scale=params["scale"],
            _grid=(grid["x"], grid["J"], grid["Jp"]),
        )


class TabulatedRadial(RadialLaw):
    """Radial law built from an (unnormalized) density function by tabulation.

    Survival values at the nodes are backward-accumulated tail integrals, so
    they keep full relative accuracy deep into the tail; log-survival between
    nodes is a monotone cubic interpolant.
    """

    kind = "numeric"

    _LOG_DEPTH = 60.0  # tabulate until survival ~ exp(-60)

    def __init__(self, density_fn, n_nodes=2049):
        self._raw_density = density_fn
        r_cap, total = self._find_range(density_fn)
        nodes = np.linspace(0.0, r_cap, n_nodes)
        panels = np.empty(n_nodes - 1)
        for i in range(n_nodes - 1):
            panels[i], _ = integrate_panel(density_fn, nodes[i], nodes[i + 1], epsrel=1e-12)
        beyond = self._tail_mass(density_fn, r_cap)
        total = float(np.sum(panels) + beyond)
        if not (math.isfinite(total) and total > 0.0):
            raise ConstructionError("radial density has zero or divergent mass")
        tails = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]]) + beyond
        surv = np.clip(tails / total, 0.0, 1.0)
        surv[0] = 1.0
        positive = surv > 0.0
        self._total = total
        self._nodes = nodes[positive]
        self._log_surv = np.log(surv[positive])
        self._spline = PchipInterpolator(self._nodes, self._log_surv)
        self._dspline = self._spline.derivative()
        slope = float(self._dspline(self._nodes[-1]))
        self._tail_slope = min(slope, -1e-12)
        # quantile interpolant on the decreasing log-survival values
        keep = np.concatenate([[True], np.diff(self._log_surv) < -1e-14])
        self._quantile = PchipInterpolator(-self._log_surv[keep], self._nodes[keep])

    @classmethod
    def _find_range(cls, density_fn):
        total, _ = integrate_panel(density_fn, 0.0, 1.0, epsrel=1e-12)
        hi = 1.0
        for _ in range(80):
            seg, _ = integrate_panel(density_fn, hi, 2.0 * hi, epsrel=1e-10)
            if not math.isfinite(seg):
                raise ConstructionError("radial density is not integrable")
            total += seg
            hi *= 2.0
            if total > 0.0 and seg < total * 1e-17:
                break
        else:
            raise ConstructionError("radial density mass does not converge")
        if not total > 0.0:
            raise ConstructionError("radial density has zero mass")
        # walk back to the point where the tail is ~ exp(-_LOG_DEPTH) of total
        target = total * math.exp(-cls._LOG_DEPTH)
        lo_r, hi_r = 0.0, hi
        for _ in range(200):
            mid = 0.5 * (lo_r + hi_r)
            tail = cls._tail_mass(density_fn, mid)
            if tail > target:
                lo_r = mid
            else:
                hi_r = mid
            if hi_r - lo_r < 1e-6 * max(hi_r, 1.0):
                break
        return max(hi_r, 1e-6), total

    @staticmethod
    def _tail_mass(density_fn, r):
        total = 0.0
        lo = r
        width = max(r, 1.0)
        for _ in range(200):
            seg, _ = integrate_panel(density_fn, lo, lo + width, epsrel=1e-10)
            total += seg
            lo += width
            width *= 2.0
            if seg < max(total, 1e-300) * 1e-17:
                break
        return total

    def log_survival(self, x):
        arr = _check_nonnegative(x)
        last = self._nodes[-1]
        inside = self._spline(np.clip(arr, 0.0, last))
        beyond = self._log_surv[-1] + self._tail_slope * (arr - last)
        out = np.minimum(np.where(arr <= last, inside, beyond), 0.0)
        return _maybe_scalar(out, np.isscalar(x))

    def density(self, x):
        scalar = np.isscalar(x)
        arr = _check_nonnegative(x)
        out = np.asarray([float(self._raw_density(v)) for v in np.atleast_1d(arr)]) / self._total
        return _maybe_scalar(out.reshape(np.shape(arr)) if not scalar else out[0], scalar)

    def aux_psi(self, x):
        arr = _check_positive(x)
        return self.survival(arr) / np.maximum(self.density(arr), 1e-300)

    def inverse_log_survival(self, logq):
        scalar = np.isscalar(logq)
        arr = np.atleast_1d(np.asarray(logq, dtype=float))
        if np.any(arr > 0.0):
            raise DomainError("log survival levels must be <= 0")
        deepest = -self._log_surv[-1]
        out = np.where(
            -arr <= deepest,
            np.clip(self._quantile(np.minimum(-arr, deepest)), 0.0, None),
            self._nodes[-1] + (arr - self._log_surv[-1]) / self._tail_slope,
        )
        # two Newton sweeps against the forward spline tighten self-consistency
        for _ in range(2):
            inside = out <= self._nodes[-1]
            f = np.where(inside, self._spline(np.clip(out, 0.0, self._nodes[-1])),
                         self._log_surv[-1] + self._tail_slope * (out - self._nodes[-1]))
            df = np.where(inside, self._dspline(np.clip(out, 0.0, self._nodes[-1])),
                          self._tail_slope)
            step = (f - arr) / np.minimum(df, -1e-300)
            out = np.clip(out - step, 0.0, None)
        return _maybe_scalar(out if not scalar else float(out[0]), scalar)

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {},
            "grid": {"x": self._nodes.tolist(), "log_survival": self._log_surv.tolist()},
        }

    @classmethod
    def from_grid(cls, grid):
        self = cls.__new__(cls)
        self._total = 1.0
        self._nodes = np.asarray(grid["x"], dtype=float)
        self._log_surv = np.asarray(grid["log_survival"], dtype=float)
        self._spline = PchipInterpolator(self._nodes, self._log_surv)
        self._dspline = self._spline.derivative()
        self._tail_slope = min(float(self._dspline(self._nodes[-1])), -1e-12)
        keep = np.concatenate([[True], np.diff(self._log_surv) < -1e-14])
        self._quantile = PchipInterpolator(-self._log_surv[keep], self._nodes[keep])
        self._raw_density = lambda r, s=self: (
            -float(s._dspline(min(max(r, 0.0), s._nodes[-1]))) * math.exp(float(s.log_survival(max(r, 0.0))))
        )
        return self


def build_von_mises(psi, x0=0.0, scale=1.0):
    """Assemble a radial law from a positive auxiliary-scale function.

    The survival is scale * exp(-int_{x0}^x ds/psi(s)), capped at one.  The
    integral of 1/psi must diverge; stalling growth raises a construction
    error.
    """
    return VonMisesRadial(psi, x0=x0, scale=scale)


def sample_radial(law, n, rng):
    """n i.i.d. draws from the law, reproducible for a given generator state."""
    return law.sample(n, rng)


@dataclass(frozen=True)
class TailRatioWitness:
    """Smallest grid constant C with S(x + psi(x) t)/S(x) <= C (1+t)**-p."""

    law_kind: str
    p: float
    x: float
    c_bound: float
    argmax_t: float
    ratios: np.ndarray = field(repr=False)


def tail_ratio_bound(law, p, x, t_grid):
    """Witness for the polynomial bound on the normalized tail ratio.

    Returns the smallest constant valid on the given grid; a drift of the
    constant along increasing x is for the caller to judge, never an error.
    """
    if p <= 0.0:
        raise DomainError("p must be positive")
    x = float(x)
    psi_x = law.aux_psi(x)
    ts = np.asarray(t_grid, dtype=float)
    if ts.size == 0:
        raise DomainError("t_grid must be nonempty")
    log_base = law.log_survival(x)
    ratios = np.exp(law.log_survival(x + psi_x * ts) - log_base)
    scaled = ratios * (1.0 + ts) ** p
    k = int(np.argmax(scaled))
    return TailRatioWitness(
        law_kind=law.kind, p=float(p), x=x,
        c_bound=float(scaled[k]), argmax_t=float(ts[k]), ratios=ratios,
    )


_CATALOG = {
    "exponential": lambda params: Exponential(**params),
    "weibull": lambda params: Weibull(**params),
    "rayleigh": lambda params: Rayleigh(**params),
}


def radial_from_dict(data):
    """Rebuild a radial law from its JSON dictionary form."""
    try:
        kind = data["kind"]
    except (TypeError, KeyError):
        raise ConstructionError("radial spec must be a mapping with a 'kind' entry")
    params = data.get("params", {})
    if kind in _CATALOG:
        extra = set(data) - {"kind", "params"}
        if extra:
            raise ConstructionError(f"unknown radial keys: {sorted(extra)}")
        try:
            return _CATALOG[kind](dict(params))
        except TypeError as exc:
            raise ConstructionError(f"bad parameters for radial family '{kind}': {exc}")
    if kind == VonMisesRadial.kind:
        if "grid" not in data:
            raise ConstructionError("serialized von Mises law requires its grid cache")
        return VonMisesRadial.from_grid(params, data["grid"])
    if kind == TabulatedRadial.kind:
        if "grid" not in data:
            raise ConstructionError("serialized numeric law requires its grid cache")
        return TabulatedRadial.from_grid(data["grid"])
    raise ConstructionError(f"unknown radial family '{kind}'")
