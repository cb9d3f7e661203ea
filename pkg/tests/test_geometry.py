import math

import numpy as np
import pytest
from scipy.integrate import quad

import cevpolar as cp

TWO_PI = 2.0 * math.pi


def fitted_index(fn, scale, k_lo=3, k_hi=11):
    """Log-log regression slope of fn over a dyadic grid of offsets."""
    ss = scale * 2.0 ** -np.arange(k_lo, k_hi + 1.0)
    vals = np.array([fn(s) for s in ss])
    coef = np.polyfit(np.log(ss), np.log(vals), 1)
    return coef[0]


class TestEllipticalCurve:
    def test_germ_values(self):
        c = cp.elliptical_curve(0.6)
        assert (c.kappa, c.delta, c.rho, c.v_star) == (2.0, 1.0, 0.6, 1.0)

    def test_peak(self):
        c = cp.elliptical_curve(0.0)
        assert float(c.u(c.t0)) == 1.0
        assert float(c.v(c.t0)) == 0.0

    def test_level_set_identity(self):
        c = cp.elliptical_curve(0.6)
        ts = np.linspace(0.0, 1.0, 1000)
        u, v = c.u(ts), c.v(ts)
        resid = u ** 2 + (v - 0.6 * u) ** 2 / (1.0 - 0.36) - 1.0
        assert np.max(np.abs(resid)) < 1e-12

    def test_unique_maximum(self):
        c = cp.elliptical_curve(0.3)
        ts = np.linspace(0.0, 1.0, 2001)
        u = c.u(ts)
        mask = np.abs(ts - c.t0) > 1e-3
        assert np.all(u[mask] < 1.0)

    def test_invalid_rho(self):
        with pytest.raises(cp.ConstructionError):
            cp.elliptical_curve(1.0)


class TestLpCurve:
    def test_p2_is_circle(self):
        c = cp.lp_curve(2.0, 0.0)
        ts = np.linspace(0.0, 1.0, 500)
        u, v = c.u(ts), c.v(ts)
        assert np.max(np.abs(u ** 2 + v ** 2 - 1.0)) < 1e-12

    def test_level_set_with_shear(self):
        p, rho = 3.0, 0.4
        c = cp.lp_curve(p, rho)
        ts = np.linspace(0.0, 1.0, 500)
        u, v = c.u(ts), c.v(ts)
        resid = np.abs(u) ** p + np.abs(v - rho * u) ** p / (1.0 - rho ** p) - 1.0
        assert np.max(np.abs(resid)) < 1e-12

    def test_germ_exponents(self):
        c = cp.lp_curve(1.5, 0.0)
        assert (c.kappa, c.delta) == (1.5, 1.0)

    def test_value_at_small_second_coordinate(self):
        # the point of the cubic level curve at second coordinate 0.1
        c = cp.lp_curve(3.0, 0.0)
        t = c.t0 + 0.1 / c.lambda_v
        assert float(c.u(t)) == pytest.approx((1.0 - 1e-3) ** (1.0 / 3.0), rel=1e-12)
        assert float(c.v(t)) == pytest.approx(0.1, rel=1e-12)

    def test_invalid_p(self):
        with pytest.raises(cp.ConstructionError):
            cp.lp_curve(1.0, 0.0)


class TestPowerCurve:
    def make(self, **kw):
        base = dict(t0=0.5, kappa=2.0, delta=1.0, c_minus=0.5, c_plus=0.5,
                    lambda_v=1.0, rho=0.0)
        base.update(kw)
        return cp.power_curve(**base)

    def test_peak_values(self):
        c = self.make()
        assert float(c.u(0.5)) == 1.0
        assert float(c.v(0.5)) == 0.0

    def test_exact_power_inside_window(self):
        c = self.make()
        for s in (0.01, 0.1, 0.2):
            assert float(c.u(0.5 + s)) == pytest.approx(1.0 - s ** 2 / 2.0, rel=1e-14)
            assert float(c.v(0.5 + s)) == pytest.approx(s, rel=1e-14)

    def test_regular_variation_ratio(self):
        c = self.make(kappa=3.0)
        ell = lambda s: 1.0 - float(c.u(0.5 + s))
        assert ell(0.1) / ell(0.05) == pytest.approx(8.0, rel=1e-12)

    def test_invalid_exponents(self):
        with pytest.raises(cp.ConstructionError):
            self.make(kappa=1.0, delta=1.0)

    def test_asymmetric_sides(self):
        c = self.make(c_minus=0.25, c_plus=0.75)
        s = 0.1
        assert 1.0 - float(c.u(0.5 - s)) == pytest.approx(0.25 * s ** 2, rel=1e-13)
        assert 1.0 - float(c.u(0.5 + s)) == pytest.approx(0.75 * s ** 2, rel=1e-13)


ALL_CURVES = [
    lambda: cp.elliptical_curve(0.6),
    lambda: cp.lp_curve(3.0, 0.0),
    lambda: cp.power_curve(t0=0.4, kappa=2.5, delta=1.0, c_minus=0.5,
                           c_plus=0.8, lambda_v=1.2, rho=0.2),
]


class TestGermIndices:
    @pytest.mark.parametrize("make", ALL_CURVES, ids=["elliptical", "lp3", "power"])
    def test_ell_index_matches_kappa(self, make):
        c = make()
        for sign in (+1.0, -1.0):
            idx = fitted_index(lambda s: 1.0 - float(c.u(c.t0 + sign * s)), c.window)
            assert idx == pytest.approx(c.kappa, abs=0.02)

    @pytest.mark.parametrize("make", ALL_CURVES, ids=["elliptical", "lp3", "power"])
    def test_v_index_matches_delta(self, make):
        c = make()
        idx = fitted_index(lambda s: float(c.v(c.t0 + s)) - c.rho, c.window, k_lo=5, k_hi=13)
        assert idx == pytest.approx(c.delta, abs=0.02)

    @pytest.mark.parametrize("make", ALL_CURVES, ids=["elliptical", "lp3", "power"])
    def test_ell_leading_coefficients(self, make):
        c = make()
        s = c.window * 2.0 ** -9
        assert (1.0 - float(c.u(c.t0 + s))) / (c.c_plus * s ** c.kappa) == pytest.approx(1.0, abs=2e-3)
        assert (1.0 - float(c.u(c.t0 - s))) / (c.c_minus * s ** c.kappa) == pytest.approx(1.0, abs=2e-3)
        assert (float(c.v(c.t0 + s)) - c.rho) / (c.lambda_v * s ** c.delta) == pytest.approx(1.0, abs=2e-3)


class TestInverseAndGap:
    def test_u_inverse_at_peak(self):
        c = cp.elliptical_curve(0.2)
        assert c.u_inverse(1.0, "right") == c.t0
        assert c.u_inverse(1.0, "left") == c.t0

    def test_u_inverse_closed_form(self):
        c = cp.elliptical_curve(0.0)
        t = c.u_inverse(math.cos(0.3), "right")
        assert t == pytest.approx(c.t0 + 0.3 / TWO_PI, abs=1e-12)
        t = c.u_inverse(math.cos(0.3), "left")
        assert t == pytest.approx(c.t0 - 0.3 / TWO_PI, abs=1e-12)

    def test_u_inverse_residual(self):
        c = cp.lp_curve(3.0, 0.2)
        for y in (0.999, 0.9, 0.4):
            t = c.u_inverse(y, "right")
            assert abs(float(c.u(t)) - y) < 1e-12

    def test_u_inverse_ordering(self):
        c = cp.elliptical_curve(0.0)
        t1 = c.u_inverse(0.9, "right")
        t2 = c.u_inverse(0.8, "right")
        assert t2 > t1 > c.t0

    def test_u_inverse_out_of_range(self):
        c = cp.power_curve(t0=0.5, kappa=2.0, delta=1.0, c_minus=0.5, c_plus=0.5,
                           lambda_v=1.0, rho=0.0)
        with pytest.raises(cp.DomainError):
            c.u_inverse(-0.9, "right")
        with pytest.raises(cp.DomainError):
            c.u_inverse(0.5, "sideways")

    def test_h_gap_circle_closed_form(self):
        c = cp.elliptical_curve(0.0)
        assert c.h_fn(0.02) == pytest.approx(math.sqrt(0.02 ** 2 + 2 * 0.02), rel=1e-10)

    def test_h_near_zero_and_increasing(self):
        for make in ALL_CURVES:
            c = make()
            xs = np.geomspace(1e-6, min(0.5, c.h_window_max * 0.9), 25)
            hs = np.array([c.h_fn(x) for x in xs])
            assert hs[0] < 0.05
            assert np.all(np.diff(hs) > 0.0)
            assert c.h_fn(0.0) == 0.0

    @pytest.mark.parametrize("make", ALL_CURVES, ids=["elliptical", "lp3", "power"])
    def test_h_regular_variation_index(self, make):
        c = make()
        x = 1e-7
        ratio = c.h_fn(x) / c.h_fn(x / 2.0)
        assert ratio == pytest.approx(2.0 ** (c.delta / c.kappa), rel=1e-3)

    def test_h_power_germ_closed_form(self):
        c = cp.power_curve(t0=0.5, kappa=2.0, delta=1.0, c_minus=0.5, c_plus=0.5,
                           lambda_v=1.0, rho=0.0)
        x = 1e-5
        assert c.h_fn(x) == pytest.approx(math.sqrt(2.0 * x), rel=2e-3)

    def test_h_outside_window(self):
        c = cp.power_curve(t0=0.5, kappa=2.0, delta=1.0, c_minus=0.5, c_plus=0.5,
                           lambda_v=1.0, rho=0.0)
        with pytest.raises(cp.DomainError):
            c.h_fn(c.h_window_max * 1e3)


class TestCurveValidation:
    def test_v_max_must_exceed_rho(self):
        # a second coordinate peaking at t0 violates the germ requirements
        with pytest.raises(cp.ConstructionError):
            cp.CurveGerm(
                "custom", {},
                lambda t: np.cos(TWO_PI * (np.asarray(t) - 0.5)),
                lambda t: -np.abs(np.asarray(t) - 0.5),
                t0=0.5, rho=0.0, kappa=2.0, delta=1.0, c_minus=1.0, c_plus=1.0,
                lambda_v=1.0, window=0.2, eta_outside=0.5,
            )

    def test_exponent_order_enforced(self):
        with pytest.raises(cp.ConstructionError):
            cp.power_curve(t0=0.5, kappa=1.0, delta=2.0, c_minus=1.0, c_plus=1.0,
                           lambda_v=1.0, rho=0.0)

    def test_serialization_roundtrip(self):
        for make in ALL_CURVES:
            c = make()
            clone = cp.curve_from_dict(c.to_dict())
            ts = np.linspace(0.0, 1.0, 64)
            assert np.allclose(clone.u(ts), c.u(ts), atol=1e-15)
            assert np.allclose(clone.v(ts), c.v(ts), atol=1e-15)

    def test_unknown_curve_kind(self):
        with pytest.raises(cp.ConstructionError):
            cp.curve_from_dict({"kind": "astroid", "params": {}})


class TestAngularLaws:
    def test_uniform_basics(self):
        g = cp.angular_uniform()
        assert g.tau == 0.0
        assert g.g_minus == g.g_plus == 1.0
        ts = np.linspace(0.0, 1.0, 11)
        assert np.all(g.density(ts) == 1.0)
        total, _ = quad(lambda t: float(g.density(t)), 0.0, 1.0)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_power_ratio(self):
        g = cp.angular_power(0.5, 1.0)
        for s in (0.01, 0.001):
            assert float(g.density(0.5 + s)) / float(g.density(0.5 + s / 2.0)) \
                == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize("tau", [-0.5, -0.2, 0.5, 1.0, 2.0])
    def test_power_normalization(self, tau):
        g = cp.angular_power(0.4, tau, g_minus_frac=0.3, window=0.2)
        total = cp.geometry.check_angular_normalization(g, tol=1e-10)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_power_cdf_quantile_consistency(self):
        g = cp.angular_power(0.5, -0.5, window=0.25)
        qs = np.linspace(0.001, 0.999, 41)
        ts = g.quantile(qs)
        assert np.allclose(g.cdf(ts), qs, atol=1e-12)

    def test_invalid_tau(self):
        with pytest.raises(cp.ConstructionError):
            cp.angular_power(0.5, -1.0)

    def test_mass_split(self):
        g = cp.angular_power(0.5, 0.5, g_minus_frac=0.25, window=0.2)
        assert float(g.cdf(0.5)) == pytest.approx(0.25, abs=1e-13)

    @pytest.mark.parametrize("law,ident", [
        (cp.angular_uniform(), "uniform"),
        (cp.angular_power(0.5, 1.0), "power-steep"),
        (cp.angular_power(0.4, -0.5, g_minus_frac=0.3, window=0.2), "power-singular"),
    ], ids=lambda v: v if isinstance(v, str) else "")
    def test_sampler_matches_cdf(self, law, ident):
        draws = law.sample(1_000_000, np.random.default_rng(3))
        draws = np.sort(draws)
        grid_cdf = np.asarray(law.cdf(draws))
        n = len(draws)
        emp_hi = np.arange(1, n + 1) / n
        emp_lo = np.arange(0, n) / n
        ks = max(np.max(np.abs(emp_hi - grid_cdf)), np.max(np.abs(grid_cdf - emp_lo)))
        assert ks < 0.002

    def test_angular_serialization(self):
        for law in (cp.angular_uniform(), cp.angular_power(0.3, 0.7, 0.4, 0.2)):
            clone = cp.angular_from_dict(law.to_dict())
            ts = np.linspace(0.0, 1.0, 101)
            assert np.allclose(clone.density(ts), law.density(ts), atol=1e-14)
