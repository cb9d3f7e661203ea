"""Small numerical helpers: guarded adaptive quadrature and root bracketing.

Everything here is deterministic and stateless so the callers stay pure and
thread-safe.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, QuadratureError

#: default relative tolerance for oracle-grade integrals
DEFAULT_REL_TOL = 1e-10


def integrate_panel(fn, lo, hi, *, epsabs=0.0, epsrel=DEFAULT_REL_TOL, limit=200):
    """Integrate ``fn`` on [lo, hi] with QUADPACK, returning (value, abserr).

    Integration warnings are silenced; convergence is judged by the caller
    from the returned error estimate (a roundoff warning on a panel whose
    error is already far below the target is not a failure).
    """
    if hi <= lo:
        return 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(fn, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit)
    return value, abserr


def integrate_with_breakpoints(fn, lo, hi, breakpoints=(), *, epsrel=DEFAULT_REL_TOL,
                               abs_scale=None, singular_points=(), rel_check=1e-7):
    """Piecewise adaptive quadrature with mandatory subdivision points.

    Integrable endpoint singularities must be listed in ``singular_points``
    so they land on panel edges, where the QAGS extrapolation resolves them
    (the edge itself is never evaluated).  ``abs_scale`` sets the magnitude
    against which per-panel absolute tolerances and the final convergence
    check are measured (typically the maximum of the integrand); when
    omitted the check is purely relative to the accumulated value.  Raises
    :class:`QuadratureError` if the summed error estimate is not small
    compared to ``max(|total|, abs_scale)``.
    """
    pts = [lo, hi]
    for p in list(breakpoints) + list(singular_points):
        if lo < p < hi:
            pts.append(p)
    pts = sorted(set(pts))
    singular = {p for p in singular_points if lo <= p <= hi}
    epsabs = 0.0 if abs_scale is None else abs_scale * 1e-13
    total, err = 0.0, 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        limit = 400 if (a in singular or b in singular) else 200
        v, e = integrate_panel(fn, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
        total += v
        err += e
    scale = max(abs(total), abs_scale or 0.0)
    if scale > 0.0 and err > rel_check * scale:
        raise QuadratureError(
            f"quadrature error estimate {err:.3e} exceeds {rel_check:.1e} * scale {scale:.3e}",
            value=total, achieved=err / scale, requested=rel_check,
        )
    return total


def bisect_monotone(fn, lo, hi, *, xtol=1e-13, rtol=1e-12, expand=False, max_expand=60):
    """Root of a monotone scalar function by Brent's method.

    With ``expand=True`` the bracket [lo, hi] is grown geometrically until the
    function changes sign (the caller guarantees a root exists).
    """
    flo = fn(lo)
    fhi = fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    tries = 0
    while flo * fhi > 0.0:
        if not expand:
            raise DomainError("root not bracketed")
        if tries >= max_expand:
            raise DomainError("failed to bracket root after expansion")
        span = hi - lo
        if abs(fhi) < abs(flo):
            hi = hi + 2.0 * span
            fhi = fn(hi)
        else:
            lo = max(lo - 2.0 * span, 0.0) if lo > 0.0 else lo - 2.0 * span
            flo = fn(lo)
        tries += 1
    return float(optimize.brentq(fn, lo, hi, xtol=xtol, rtol=max(rtol, 4.5e-16)))


def sign_changes(values, grid):
    """Intervals (a, b) from ``grid`` where consecutive ``values`` change sign."""
    out = []
    for i in range(len(grid) - 1):
        v0, v1 = values[i], values[i + 1]
        if v0 == 0.0:
            continue
        if v0 * v1 < 0.0:
            out.append((grid[i], grid[i + 1]))
    return out


def refine_zeros(fn, grid_lo, grid_hi, n_scan=1025):
    """All sign-change roots of ``fn`` on [grid_lo, grid_hi] via scan + Brent."""
    ts = np.linspace(grid_lo, grid_hi, n_scan)
    vals = np.array([fn(t) for t in ts])
    zeros = [float(t) for t, v in zip(ts, vals) if v == 0.0]
    for a, b in sign_changes(vals, ts):
        zeros.append(float(optimize.brentq(fn, a, b, xtol=1e-14)))
    return sorted(zeros)


def log_trapz_mean(log_values):
    """log(mean(exp(v))) computed stably."""
    m = max(log_values)
    if math.isinf(m):
        return m
    return m + math.log(np.mean(np.exp(np.asarray(log_values) - m)))
