"""Germs (families of local distributions) and the distributions they pair with.

A germ assigns to every base point x a distribution F_x; the package only
ever observes it through pairings F_y(psi) where psi is an already scaled
and recentred test function.  Next to the universal per-point ``pair``
call, every concrete germ implements a vectorised ``pair_scaled`` that
evaluates F_{x+shift}(base_x^lam) for a whole array of base points at
once; the scale sweeps in the norm and reconstruction machinery live on
that path.

The vectorised paths never quadrature an under-resolved rescaled profile:
they substitute the integration variable onto the base profile (exact
samples, analytic scale factors), which keeps deep scales accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArityMismatch, ParameterViolation
from .grid import SampledFunction, binned_correlate, fd_derivative, integrate
from .testfn import TestFunction, scale_recenter


@dataclass(frozen=True)
class ExponentTriple:
    """Coherence base exponent, homogeneity exponent and coherence gap exponent."""

    alpha: float
    beta: float
    gamma: float
    enforce_order: bool = True

    def __post_init__(self):
        if self.enforce_order and not (self.alpha <= self.gamma + 1e-12):
            raise ParameterViolation(f"alpha={self.alpha} must not exceed gamma={self.gamma}")


def _interp_at(samples: SampledFunction, xs: np.ndarray) -> np.ndarray:
    grid = samples.grid
    pos = (np.asarray(xs, dtype=float) + grid.half_length) / grid.spacing
    idx = np.round(pos)
    if np.all(np.abs(pos - idx) < 1e-9):
        # grid-aligned points: exact gather instead of interpolation
        ii = np.clip(idx.astype(int), 0, grid.npoints - 1)
        out = samples.values[ii]
        return np.where((idx >= 0) & (idx < grid.npoints), out, 0.0)
    return np.interp(xs, grid.points, samples.values, left=0.0, right=0.0)


class Distribution:
    """Linear functional on sampled test functions.

    ``pair`` is the universal entry point.  ``weighted_profile(m, base, lam)``
    returns the full-grid array x -> self((. - x)**m * base_x^lam); profiles
    are cached per (m, base, lam) because scale sweeps reuse them heavily.
    ``pair_scaled`` gathers the m = 0 profile at arbitrary grid-aligned
    points.
    """

    density: SampledFunction = None

    def __init__(self):
        self._profiles = {}

    def pair(self, psi: SampledFunction) -> float:
        raise NotImplementedError

    def _compute_profile(self, m: int, base: TestFunction, lam: float) -> np.ndarray:
        raise NotImplementedError

    def weighted_profile(self, m: int, base: TestFunction, lam: float) -> np.ndarray:
        key = (m, id(base), float(lam))
        out = self._profiles.get(key)
        if out is None:
            out = self._compute_profile(m, base, float(lam))
            out.flags.writeable = False
            self._profiles[key] = out
        return out

    def pair_scaled(self, xs, base: TestFunction, lam: float) -> np.ndarray:
        prof = self.weighted_profile(0, base, lam)
        grid = base.grid
        idx = np.round((np.asarray(xs, dtype=float) + grid.half_length) / grid.spacing)
        return prof[idx.astype(int)]


class DensityDistribution(Distribution):
    """Distribution given by integration against a sampled density."""

    def __init__(self, density: SampledFunction):
        super().__init__()
        self.density = density

    def pair(self, psi: SampledFunction) -> float:
        w = self.density
        if psi.grid != w.grid:
            raise ValueError("pairing requires a common grid")
        return integrate(SampledFunction(w.grid, w.values * psi.values, psi.support))

    def _compute_profile(self, m, base, lam):
        w = self.density
        out = np.zeros(w.grid.npoints)
        for wt, s, prof in base.components():
            sub = lam * s
            nodes, qw, vals, _ = prof.quad_nodes()
            kern = qw * vals * nodes**m
            acc = binned_correlate(w.values, sub * nodes, kern, w.grid.spacing)
            out += wt * sub**m * acc
        return out


class DiracDistribution(Distribution):
    """Point mass; pairings are closed-form sample lookups."""

    def __init__(self, location: float, grid=None):
        super().__init__()
        self.location = float(location)
        self.grid = grid

    def pair(self, psi: SampledFunction) -> float:
        return float(psi(self.location))

    def _compute_profile(self, m, base, lam):
        grid = base.grid
        x = grid.points
        out = np.zeros(grid.npoints)
        for wt, s, prof in base.components():
            sub = lam * s
            out += wt * (self.location - x) ** m * _interp_at(prof.samples, (self.location - x) / sub) / sub
        return out


class DerivativeDistribution(Distribution):
    """Distributional derivative of a continuous sampled function W.

    Pairings go through integration by parts: <W', eta> = -int W eta'.
    """

    def __init__(self, primitive: SampledFunction):
        super().__init__()
        self.primitive = primitive

    def pair(self, psi: SampledFunction) -> float:
        w = self.primitive
        if psi.grid != w.grid:
            raise ValueError("pairing requires a common grid")
        dpsi = fd_derivative(psi.values, w.grid.spacing)
        return -integrate(SampledFunction(w.grid, w.values * dpsi, psi.support))

    def _compute_profile(self, m, base, lam):
        w = self.primitive
        out = np.zeros(w.grid.npoints)
        for wt, s, prof in base.components():
            sub = lam * s
            nodes, qw, vals, dvals = prof.quad_nodes()
            # d/dz[(z-x)^m base^sub_x(z)] pulled back to the profile variable
            poly_part = m * nodes ** (m - 1) * vals if m > 0 else np.zeros_like(vals)
            kern = qw * (poly_part + nodes**m * dvals / sub)
            acc = binned_correlate(w.values, sub * nodes, kern, w.grid.spacing)
            out += -wt * sub**m * acc
        return out


class LinearDistribution(Distribution):
    """Linear combination of distributions; keeps the fast paths of its parts."""

    def __init__(self, terms):
        super().__init__()
        self.terms = tuple((float(c), d) for c, d in terms)

    def pair(self, psi):
        return sum(c * d.pair(psi) for c, d in self.terms)

    def _compute_profile(self, m, base, lam):
        out = None
        for c, d in self.terms:
            p = c * d.weighted_profile(m, base, lam)
            out = p if out is None else out + p
        return out


class ClosureDistribution(Distribution):
    """Distribution given by an arbitrary pairing rule; no fast path."""

    def __init__(self, fn, grid):
        super().__init__()
        self.fn = fn
        self.grid = grid

    def pair(self, psi: SampledFunction) -> float:
        return float(self.fn(psi))

    def _compute_profile(self, m, base, lam):
        grid = self.grid
        out = np.zeros(grid.npoints)
        for i, x in enumerate(grid.points):
            try:
                psi = scale_recenter(base, x, lam)
            except Exception:
                continue
            probe = SampledFunction(grid, psi.values * (grid.points - x) ** m, psi.support)
            out[i] = self.fn(probe)
        return out


def as_distribution(density: SampledFunction) -> DensityDistribution:
    return DensityDistribution(density)


class Germ:
    """Family x -> F_x of distributions, observed through pairings.

    ``pair(x, psi)`` evaluates F_x against an already scaled/recentred
    sampled test function.  ``pair_scaled(xs, shift, base, lam)`` evaluates
    F_{x+shift}(base_x^lam) for an array of base points; the default
    implementation loops ``pair`` and concrete germs override it with a
    vectorised version.
    """

    exponents: ExponentTriple = None

    def pair(self, x: float, psi: SampledFunction) -> float:
        raise NotImplementedError

    def pair_scaled(self, xs, shift: float, base: TestFunction, lam: float) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.empty(xs.shape)
        for i, x in enumerate(xs):
            psi = scale_recenter(base, x, lam)
            out[i] = self.pair(x + shift, psi)
        return out


class ClosureGerm(Germ):
    """Germ defined by an arbitrary pairing rule (x, psi) -> real."""

    def __init__(self, fn, exponents: ExponentTriple = None):
        self.fn = fn
        self.exponents = exponents

    def pair(self, x, psi):
        return float(self.fn(x, psi))


class ConstantGerm(Germ):
    """F_x identical for all x; every coherence difference vanishes."""

    def __init__(self, xi: Distribution):
        self.xi = xi
        self.exponents = None

    def pair(self, x, psi):
        return self.xi.pair(psi)

    def pair_scaled(self, xs, shift, base, lam):
        return self.xi.pair_scaled(xs, base, lam)


class MonomialGerm(Germ):
    """F_x(z) = z - x; a germ with positive homogeneity and coherence gap,
    so the unique reconstruction is the zero distribution."""

    def __init__(self):
        self.exponents = ExponentTriple(alpha=0.0, beta=1.0, gamma=1.0)

    def pair(self, x, psi):
        lin = SampledFunction(psi.grid, psi.values * (psi.grid.points - x), psi.support)
        return integrate(lin)

    def pair_scaled(self, xs, shift, base, lam):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        val = 0.0
        for wt, s, prof in base.components():
            val += wt * (lam * s * prof.moments[1] - shift * prof.moments[0])
        return np.full(xs.shape, val)


class TaylorGerm(Germ):
    """Polynomial germ built from a function and its derivatives.

    F_x(z) is the Taylor polynomial of order ceil(beta) - 1 of f at x; the
    germ has homogeneity exponent 0 and coherence exponents (0, beta).
    """

    def __init__(self, derivs, beta: float):
        if beta <= 0 or float(beta) == int(beta):
            raise ParameterViolation("beta must be positive and non-integer")
        order = math.ceil(beta)
        if len(derivs) != order:
            raise ArityMismatch(f"need {order} derivative arrays, got {len(derivs)}")
        self.derivs = tuple(derivs)
        self.beta = float(beta)
        self.order = order
        self.exponents = ExponentTriple(alpha=0.0, beta=0.0, gamma=float(beta))
        self._fact = np.array([math.factorial(k) for k in range(order)], dtype=float)

    def deriv_at(self, k: int, xs) -> np.ndarray:
        return _interp_at(self.derivs[k], np.asarray(xs, dtype=float))

    def poly_at(self, x: float, zs: np.ndarray) -> np.ndarray:
        """Pointwise values of the Taylor polynomial based at x."""
        out = np.zeros_like(np.asarray(zs, dtype=float))
        for k in range(self.order):
            out += float(self.deriv_at(k, x)) / self._fact[k] * (zs - x) ** k
        return out

    def pair(self, x, psi):
        zs = psi.grid.points
        poly = self.poly_at(x, zs)
        return integrate(SampledFunction(psi.grid, psi.values * poly, psi.support))

    def centred_moment(self, k: int, shift: float, base: TestFunction, lam: float) -> float:
        """integral of (z - x - shift)**k base_x^lam(z) dz, closed form."""
        total = 0.0
        for wt, s, prof in base.components():
            sub = lam * s
            acc = 0.0
            for j in range(k + 1):
                acc += (
                    math.comb(k, j) * sub**j * float(prof.moments[j]) * (-shift) ** (k - j)
                )
            total += wt * acc
        return total

    def pair_scaled(self, xs, shift, base, lam):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.zeros(xs.shape)
        for k in range(self.order):
            mk = self.centred_moment(k, shift, base, lam)
            if mk != 0.0:
                out += self.deriv_at(k, xs + shift) / self._fact[k] * mk
        return out


class ProductGerm(Germ):
    """Germ pairing a fixed distribution against the product of the test
    function with a Taylor-polynomial germ: the germ behind the Young product."""

    def __init__(self, g: Distribution, taylor: TaylorGerm, exponents: ExponentTriple = None):
        self.g = g
        self.taylor = taylor
        self.exponents = exponents

    def pair(self, x, psi):
        zs = psi.grid.points
        poly = self.taylor.poly_at(x, zs)
        probe = SampledFunction(psi.grid, psi.values * poly, psi.support)
        return self.g.pair(probe)

    def pair_scaled(self, xs, shift, base, lam):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        grid = base.grid
        idx = np.round((xs + grid.half_length) / grid.spacing).astype(int)
        out = np.zeros(xs.shape)
        t = self.taylor
        for k in range(t.order):
            acc = np.zeros(xs.shape)
            for m in range(k + 1):
                prof = self.g.weighted_profile(m, base, lam)
                acc += math.comb(k, m) * (-shift) ** (k - m) * prof[idx]
            out += t.deriv_at(k, xs + shift) / t._fact[k] * acc
        return out


class LinearGerm(Germ):
    """Linear combination of germs; preserves the fast paths of the parts."""

    def __init__(self, terms, exponents: ExponentTriple = None):
        self.terms = tuple((float(c), g) for c, g in terms)
        self.exponents = exponents

    def pair(self, x, psi):
        return sum(c * g.pair(x, psi) for c, g in self.terms)

    def pair_scaled(self, xs, shift, base, lam):
        out = None
        for c, g in self.terms:
            v = c * g.pair_scaled(xs, shift, base, lam)
            out = v if out is None else out + v
        return out


def taylor_germ(f: SampledFunction, derivatives, beta: float) -> TaylorGerm:
    """Taylor germ of f: derivatives are the higher orders, f is order zero.

    The total derivative count (including f) must equal ceil(beta).
    """
    return TaylorGerm((f, *derivatives), beta)


def product_germ(g: Distribution, taylor: TaylorGerm, exponents: ExponentTriple = None) -> ProductGerm:
    return ProductGerm(g, taylor, exponents)


def constant_germ(xi: Distribution) -> ConstantGerm:
    return ConstantGerm(xi)


def monomial_germ() -> MonomialGerm:
    return MonomialGerm()
