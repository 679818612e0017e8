import numpy as np
import pytest

from germrec.errors import ArityMismatch, ParameterViolation
from germrec.germ import (
    DensityDistribution,
    DerivativeDistribution,
    DiracDistribution,
    ExponentTriple,
    LinearDistribution,
    LinearGerm,
    constant_germ,
    monomial_germ,
    product_germ,
    taylor_germ,
)
from germrec.grid import Grid, SampledFunction, fd_derivative, integrate
from germrec.signals import SignalSpec, realize
from germrec.testfn import scale_recenter, standard_bump, tweak

GRID = Grid(half_length=8.0, level=12)
BUMP = standard_bump(GRID)
HAT = tweak(BUMP, 3)  # even, unit mass


def sampled(fn, support=None):
    x = GRID.points
    sup = support if support is not None else (-8.0, 8.0)
    v = np.where((x >= sup[0]) & (x <= sup[1]), fn(x), 0.0)
    return SampledFunction(GRID, v, support=sup)


def poly_derivs(coeffs, n):
    p = np.polynomial.Polynomial(coeffs)
    out = []
    for _ in range(n):
        out.append(sampled(p))
        p = p.deriv()
    return out


class TestExponentTriple:
    def test_order_enforced(self):
        with pytest.raises(ParameterViolation):
            ExponentTriple(alpha=1.0, beta=0.0, gamma=0.5)

    def test_order_relaxable(self):
        t = ExponentTriple(alpha=1.0, beta=0.0, gamma=0.5, enforce_order=False)
        assert t.alpha == 1.0


class TestTaylorGerm:
    def test_cubic_reproduced_exactly(self):
        ds = poly_derivs([0, 0, 0, 1], 4)
        F = taylor_germ(ds[0], ds[1:], beta=3.5)
        psi = scale_recenter(HAT, 0.3, 0.25)
        want = integrate(SampledFunction(GRID, GRID.points**3 * psi.values, psi.support))
        for x in (-0.5, 0.0, 0.6875):
            assert F.pair(x, psi) == pytest.approx(want, abs=1e-9)
        # differences vanish for polynomials of degree < beta
        d = F.pair(0.3 + 0.09375, psi) - F.pair(0.3, psi)
        assert abs(d) < 1e-9

    def test_square_difference_closed_form(self):
        ds = poly_derivs([0, 0, 1], 2)
        F = taylor_germ(ds[0], ds[1:], beta=1.5)
        x, h, lam = 0.25, 0.125, 0.25
        psi = scale_recenter(HAT, x, lam)
        got = F.pair(x + h, psi) - F.pair(x, psi)
        assert got == pytest.approx(-(h**2), abs=1e-8)

    def test_constant_function(self):
        ds = poly_derivs([1.0], 1)
        F = taylor_germ(ds[0], [], beta=0.5)
        psi = scale_recenter(HAT, -0.4, 0.5)
        assert F.pair(1.3, psi) == pytest.approx(integrate(psi), abs=1e-12)

    def test_arity_checked(self):
        ds = poly_derivs([0, 0, 1], 2)
        with pytest.raises(ArityMismatch):
            taylor_germ(ds[0], [], beta=1.5)
        with pytest.raises(ParameterViolation):
            taylor_germ(ds[0], ds[1:], beta=2.0)

    def test_pair_scaled_matches_pair(self):
        ds = poly_derivs([0.3, -1.0, 0.5, 0.2], 3)
        F = taylor_germ(ds[0], ds[1:], beta=2.5)
        xs = GRID.snap(np.array([-0.75, -0.1, 0.4, 1.1]))
        h = GRID.snap(0.21)
        lam = 0.25
        fast = F.pair_scaled(xs, h, HAT, lam)
        slow = [F.pair(x + h, scale_recenter(HAT, x, lam)) for x in xs]
        np.testing.assert_allclose(fast, slow, atol=1e-9)

    def test_derivative_table_consistency(self):
        # same germ from analytic and finite-difference derivative tables
        f = sampled(np.cos)
        analytic = sampled(lambda x: -np.sin(x))
        fd = SampledFunction(GRID, fd_derivative(f.values, GRID.spacing), (-8.0, 8.0))
        F1 = taylor_germ(f, [analytic], beta=1.5)
        F2 = taylor_germ(f, [fd], beta=1.5)
        psi = scale_recenter(HAT, 0.2, 0.125)
        assert F1.pair(0.2, psi) == pytest.approx(F2.pair(0.2, psi), abs=1e-6)


class TestProductGerm:
    def test_unit_density_times_one(self):
        g = DensityDistribution(sampled(lambda x: np.ones_like(x)))
        F = taylor_germ(sampled(lambda x: np.ones_like(x)), [], beta=0.5)
        P = product_germ(g, F)
        psi = scale_recenter(HAT, 0.1, 0.5)
        assert P.pair(-0.8, psi) == pytest.approx(integrate(psi), abs=1e-10)

    def test_cos_times_square_oracle(self):
        g = DensityDistribution(sampled(np.cos))
        ds = poly_derivs([0, 0, 1], 3)
        P = product_germ(g, taylor_germ(ds[0], ds[1:], beta=2.5))
        psi = scale_recenter(HAT, 0.0, 0.5)
        oracle = integrate(
            SampledFunction(GRID, np.cos(GRID.points) * GRID.points**2 * psi.values, psi.support)
        )
        assert P.pair(0.0, psi) == pytest.approx(oracle, abs=1e-8)

    def test_linearity_in_distribution(self):
        g1 = DensityDistribution(sampled(np.cos))
        g2 = DensityDistribution(sampled(lambda x: x))
        ds = poly_derivs([0, 1], 2)
        F = taylor_germ(ds[0], ds[1:], beta=1.5)
        a, b = 2.0, -0.7
        combo = product_germ(LinearDistribution([(a, g1), (b, g2)]), F)
        p1 = product_germ(g1, F)
        p2 = product_germ(g2, F)
        psi = scale_recenter(HAT, 0.3, 0.25)
        lhs = combo.pair(0.3, psi)
        rhs = a * p1.pair(0.3, psi) + b * p2.pair(0.3, psi)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_pair_scaled_matches_pair(self):
        g = DensityDistribution(sampled(np.cos))
        ds = poly_derivs([0.0, 1.0, 0.25], 2)
        P = product_germ(g, taylor_germ(ds[0], ds[1:], beta=1.5))
        xs = GRID.snap(np.array([-0.5, 0.0, 0.55]))
        h = GRID.snap(0.11)
        lam = 0.25
        fast = P.pair_scaled(xs, h, HAT, lam)
        slow = [P.pair(x + h, scale_recenter(HAT, x, lam)) for x in xs]
        np.testing.assert_allclose(fast, slow, atol=1e-8)

    def test_smooth_product_scale_limit(self):
        # P_x(psi_x^lam) approaches the pointwise product pairing as lam -> 0;
        # the probe keeps its second moment so the decay is visible above the
        # quadrature floor
        probe = tweak(BUMP, 1)
        g = DensityDistribution(sampled(np.cos))
        f = sampled(np.sin)
        P = product_germ(g, taylor_germ(f, [sampled(np.cos)], beta=1.5))
        gf = DensityDistribution(sampled(lambda x: np.cos(x) * np.sin(x)))
        xs = GRID.snap(np.array([0.1875]))
        errs = []
        for n in range(3, 8):
            lam = 2.0**-n
            got = P.pair_scaled(xs, 0.0, probe, lam)[0]
            target = gf.pair_scaled(xs, probe, lam)[0]
            errs.append(abs(got - target))
        assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


class TestConstantGerm:
    def test_differences_vanish_exactly(self):
        xi = DensityDistribution(sampled(np.cos))
        F = constant_germ(xi)
        psi = scale_recenter(HAT, -0.3, 0.25)
        assert F.pair(0.9, psi) - F.pair(-2.0, psi) == 0.0

    def test_pair_scaled_matches_pair(self):
        xi = DensityDistribution(sampled(lambda x: np.exp(-(x**2))))
        F = constant_germ(xi)
        xs = GRID.snap(np.array([-1.0, 0.2]))
        lam = 2.0**-2
        fast = F.pair_scaled(xs, 0.0, HAT, lam)
        slow = [F.pair(x, scale_recenter(HAT, x, lam)) for x in xs]
        np.testing.assert_allclose(fast, slow, atol=1e-8)

    def test_deep_scale_fast_path_against_refined_grid(self):
        # at scales where the literal grid quadrature degrades, the
        # substitution path must still match a doubly refined grid
        fine = Grid(8.0, 14)
        lam = 2.0**-4
        x0 = 0.1875  # grid-aligned at both levels

        def run(grid):
            from germrec.testfn import standard_bump as sb, tweak as tw

            hat = tw(sb(grid), 3)
            x = grid.points
            xi = DensityDistribution(
                SampledFunction(grid, np.exp(-(x**2)), (-8.0, 8.0))
            )
            return constant_germ(xi).pair_scaled(np.array([x0]), 0.0, hat, lam)[0]

        coarse_val = run(GRID)
        fine_val = run(fine)
        # density interpolation is O(spacing**2), ~1e-8 at level 12
        assert coarse_val == pytest.approx(fine_val, abs=1.5e-8)


class TestMonomialGerm:
    def test_scaled_pairing_is_first_moment(self):
        F = monomial_germ()
        lam = 0.125
        for x in (-0.4, 0.0, 1.3):
            psi = scale_recenter(HAT, x, lam)
            want = lam * HAT.moments[1]
            assert F.pair(x, psi) == pytest.approx(want, abs=1e-9)

    def test_difference_is_minus_h_times_mass(self):
        F = monomial_germ()
        x, h = 0.25, 0.0625
        psi = scale_recenter(HAT, x, 0.25)
        got = F.pair(x + h, psi) - F.pair(x, psi)
        assert got == pytest.approx(-h * integrate(psi), abs=1e-12)
        assert integrate(psi) == pytest.approx(HAT.mass(), abs=1e-9)

    def test_pair_scaled(self):
        F = monomial_germ()
        xs = np.array([0.0, 0.5])
        got = F.pair_scaled(xs, 0.03125, HAT, 0.25)
        want = 0.25 * HAT.moments[1] - 0.03125 * HAT.moments[0]
        np.testing.assert_allclose(got, want, atol=1e-12)


class TestDistributions:
    def test_density_pairing_linear(self):
        xi = DensityDistribution(sampled(np.cos))
        psi1 = scale_recenter(HAT, 0.0, 0.5).values
        psi2 = scale_recenter(HAT, 0.25, 0.25).values
        a, b = 1.7, -0.3
        combo = SampledFunction(GRID, a * psi1 + b * psi2, (-1, 1))
        lhs = xi.pair(combo)
        rhs = a * xi.pair(SampledFunction(GRID, psi1, (-1, 1))) + b * xi.pair(
            SampledFunction(GRID, psi2, (-1, 1))
        )
        assert lhs == pytest.approx(rhs, abs=1e-9 * (abs(a) + abs(b)))

    def test_dirac_closed_form(self):
        d = DiracDistribution(0.0)
        assert d.pair(BUMP.samples) == pytest.approx(np.exp(-1), abs=1e-12)
        lam = 0.25
        xs = GRID.snap(np.array([-0.5, 0.1]))
        got = d.pair_scaled(xs, HAT, lam)
        want = HAT.samples((0.0 - xs) / lam) / lam
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_derivative_distribution_ibp(self):
        # W = sin, so W' = cos as a distribution
        W = sampled(np.sin)
        g = DerivativeDistribution(W)
        psi = scale_recenter(HAT, 0.4, 0.5)
        oracle = integrate(SampledFunction(GRID, np.cos(GRID.points) * psi.values, psi.support))
        assert g.pair(psi) == pytest.approx(oracle, abs=1e-6)

    def test_derivative_profile_matches_pair(self):
        W = sampled(np.sin)
        g = DerivativeDistribution(W)
        lam = 2.0**-3
        xs = GRID.snap(np.array([-0.7, 0.0, 1.2]))
        fast = g.pair_scaled(xs, HAT, lam)
        slow = [g.pair(scale_recenter(HAT, x, lam)) for x in xs]
        np.testing.assert_allclose(fast, slow, atol=1e-6)


class TestLinearGerm:
    def test_combination_pairs_linearly(self):
        ds = poly_derivs([0, 0, 1], 2)
        F = taylor_germ(ds[0], ds[1:], beta=1.5)
        G = monomial_germ()
        combo = LinearGerm([(2.0, F), (-1.0, G)])
        psi = scale_recenter(HAT, 0.3, 0.25)
        want = 2.0 * F.pair(0.3, psi) - G.pair(0.3, psi)
        assert combo.pair(0.3, psi) == pytest.approx(want, rel=1e-12)


class TestSignals:
    def test_poly_realize(self):
        f, ds = realize(SignalSpec("poly", coefficients=(0, 0, 1)), GRID)
        x = GRID.points
        np.testing.assert_allclose(f.values, x**2)
        np.testing.assert_allclose(ds[0].values, 2 * x)
        np.testing.assert_allclose(ds[1].values, 2 + 0 * x)

    def test_weierstrass_value_at_zero(self):
        spec = SignalSpec("weierstrass", a=0.5, b=3.0, depth=12)
        w, _ = realize(spec, GRID)
        want = (1 - 0.5**13) / (1 - 0.5)  # direct finite geometric sum
        assert w.values[GRID.index(0.0)] == pytest.approx(want, abs=1e-12)
        assert spec.holder_index == pytest.approx(np.log(2) / np.log(3))

    def test_dirac_realize(self):
        d, ds = realize(SignalSpec("dirac", location=0.0), GRID)
        assert ds == []
        assert d.pair(BUMP.samples) == pytest.approx(np.exp(-1), abs=1e-12)

    def test_analytic_derivatives_match_fd(self):
        for spec in (
            SignalSpec("trig", frequency=2.0, phase=0.3),
            SignalSpec("bump", center=0.5, width=1.5),
        ):
            f, ds = realize(spec, GRID)
            fd = fd_derivative(f.values, GRID.spacing)
            sl = GRID.window_slice(-2, 2)
            assert np.max(np.abs(ds[0].values[sl] - fd[sl])) < 1e-8

    def test_weierstrass_partial_sums_monotone(self):
        a = 0.5
        prev = None
        full, _ = realize(SignalSpec("weierstrass", a=a, b=3.0, depth=14), GRID)
        for depth in (6, 8, 10):
            w, _ = realize(SignalSpec("weierstrass", a=a, b=3.0, depth=depth), GRID)
            dist = np.max(np.abs(w.values - full.values))
            assert dist <= a ** (depth + 1) / (1 - a) + 1e-12
            if prev is not None:
                assert dist <= prev
            prev = dist

    def test_rough_regime_validated(self):
        with pytest.raises(ParameterViolation):
            SignalSpec("weierstrass", a=0.5, b=1.5)
