"""Test-function calculus on the grid.

Provides the standard compactly supported bump, scaling/recentering,
moment caches, the moment-matching combination that gives a kernel with
unit mass and vanishing moments 1..r-1 ("tweaking"), the derived
difference kernel and mollifier whose dyadic increments telescope, and
finite dictionaries standing in for the C^r unit balls used as suprema
in the norm estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSystem, ScaleBelowResolution, ScaleTooLarge, SupportOverflow
from .grid import (
    Grid,
    SampledFunction,
    convolve,
    fd_derivative,
    integrate,
    lp_norm,
    trapezoid_weights,
)

MOMENT_CACHE_ORDER = 10
CR_CACHE_ORDER = 6

# smallest resolvable scale, in grid spacings
MIN_SCALE_CELLS = 8


@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported function with cached moments and C^r norms.

    ``moments[k]`` is the integral of x**k times the function for
    k = 0..MOMENT_CACHE_ORDER; ``cr_norms[r]`` is the max sup-norm of the
    derivatives of order <= r, computed by 4th-order finite differences.
    """

    samples: SampledFunction
    radius: float
    moments: np.ndarray = field(init=False, repr=False)
    cr_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        sf = self.samples
        moms = np.array(
            [integrate(SampledFunction(sf.grid, sf.values * sf.grid.points**k, sf.support))
             for k in range(MOMENT_CACHE_ORDER + 1)]
        )
        moms.flags.writeable = False
        object.__setattr__(self, "moments", moms)
        sups = []
        v = sf.values
        for _ in range(CR_CACHE_ORDER + 1):
            sups.append(np.max(np.abs(v)))
            v = fd_derivative(v, sf.grid.spacing)
        crs = np.maximum.accumulate(np.array(sups))
        crs.flags.writeable = False
        object.__setattr__(self, "cr_norms", crs)

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    def cr_norm(self, r: int) -> float:
        if r <= CR_CACHE_ORDER:
            return float(self.cr_norms[r])
        return cr_norm_samples(self.samples, r)

    def mass(self) -> float:
        return float(self.moments[0])

    def scaled_moment(self, k: int, lam: float) -> float:
        """Moment of the lam-rescaled function: m_k scales like lam**k."""
        return float(self.moments[k]) * lam**k

    def components(self) -> tuple:
        """Decomposition into (weight, scale, base) rescaling terms.

        Pairing code iterates these so that quadrature always runs against a
        well-resolved base profile, with the scale entering analytically.
        """
        return ((1.0, 1.0, self),)

    def quad_nodes(self, target: int = 1025):
        """Downsampled quadrature nodes over the support.

        Returns (nodes, weights, values, derivative values); nodes lie on the
        sample grid so the values are exact.  Used by the substitution-form
        pairings where the integration variable is rescaled onto the profile.
        """
        grid = self.grid
        stride = max(int(np.floor(2 * self.radius / grid.spacing / (target - 1))), 1)
        i0 = grid.index(-self.radius)
        i1 = grid.index(self.radius)
        idx = np.arange(i0, i1 + 1, stride)
        if idx[-1] != i1:
            idx = np.append(idx, i1)
        nodes = grid.points[idx]
        w = trapezoid_weights(nodes)
        deriv = fd_derivative(self.values, grid.spacing)
        return nodes, w, self.values[idx], deriv[idx]


@dataclass(frozen=True)
class TweakedFunction(TestFunction):
    """Weighted combination of dyadic rescalings of one base profile.

    Keeping the combination structure means any further rescaling can be
    pushed onto the base profile, where grid gathers are exact; sampled
    upscalings would otherwise pick up interpolation error.
    """

    base: TestFunction = None
    weights: tuple = ()
    scales: tuple = ()

    def components(self) -> tuple:
        return tuple(
            (w, s, self.base) for w, s in zip(self.weights, self.scales)
        )


def cr_norm_samples(f: SampledFunction, r: int) -> float:
    """C^r norm (max sup of derivatives up to order r) of a sampled function."""
    out = 0.0
    v = f.values
    for _ in range(r + 1):
        out = max(out, float(np.max(np.abs(v))))
        v = fd_derivative(v, f.grid.spacing)
    return out


def as_testfn(samples: SampledFunction, radius: float = None) -> TestFunction:
    if radius is None:
        radius = max(abs(samples.support[0]), abs(samples.support[1]))
    return TestFunction(samples, float(radius))


def standard_bump(grid: Grid) -> TestFunction:
    """The bump exp(-1/(1-x^2)) on |x| < 1, zero outside."""
    x = grid.points
    v = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    with np.errstate(over="ignore"):
        v[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return TestFunction(SampledFunction(grid, v, support=(-1.0, 1.0)), 1.0)


def scale_recenter(phi: TestFunction, x: float, lam: float) -> SampledFunction:
    """The scaled and recentered version lam**-1 * phi(lam**-1 (. - x)).

    Mass is preserved; the sup norm grows like 1/lam.  Scales below
    MIN_SCALE_CELLS grid cells are refused since the samples could no
    longer resolve the profile.  Combinations of rescalings are rescaled
    component by component, which keeps dyadic gathers exact.
    """
    grid = phi.grid
    if lam <= 0:
        raise ValueError("lam must be positive")
    if lam < MIN_SCALE_CELLS * grid.spacing:
        raise ScaleBelowResolution(f"scale {lam} below {MIN_SCALE_CELLS} grid cells")
    half = lam * phi.radius
    L = grid.half_length
    if x - half < -L - 1e-12 or x + half > L + 1e-12:
        raise SupportOverflow(f"support B({x}, {half}) leaves the domain")
    comps = phi.components()
    if len(comps) == 1 and comps[0][2] is phi:
        out = np.zeros(grid.npoints)
        sl = grid.window_slice(x - half, x + half)
        z = grid.points[sl]
        out[sl] = phi.samples((z - x) / lam) / lam
    else:
        out = np.zeros(grid.npoints)
        for w, s, base in comps:
            sub = lam * s
            sub_half = sub * base.radius
            sl = grid.window_slice(x - sub_half, x + sub_half)
            z = grid.points[sl]
            out[sl] += w * base.samples((z - x) / sub) / sub
    return SampledFunction(grid, out, support=(max(x - half, -L), min(x + half, L)))


def moments(phi: TestFunction, k_max: int) -> np.ndarray:
    """Cached moments m_k = integral of x**k phi(x) dx for k = 0..k_max."""
    if k_max > MOMENT_CACHE_ORDER:
        raise ValueError(f"k_max exceeds cache order {MOMENT_CACHE_ORDER}")
    return phi.moments[: k_max + 1].copy()


def default_tweak_scales(phi: TestFunction, count: int) -> tuple:
    """Dyadic ladder 2**-(i+2) / (1 + R) -- distinct and below 1/(2R)."""
    return tuple(2.0 ** -(i + 2) / (1.0 + phi.radius) for i in range(count))


def tweak_coefficients(phi: TestFunction, r: int, scales=None):
    """Solve the moment-matching system behind :func:`tweak`.

    Writing m_k for the moments of phi, the coefficients c_i solve
    (m_k / m_0) * sum_i c_i scales[i]**k = delta_{k0} over the rows k in
    0..r-1 with m_k != 0; rows with m_k = 0 hold automatically (an even
    bump kills all odd rows) and are dropped, so only as many scales as
    active rows are consumed.

    Returns (active_rows, scales_used, coefficients).
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    mass = phi.mass()
    if mass == 0.0:
        raise DegenerateSystem("phi must have nonzero mass")
    moms = moments(phi, r - 1)
    active = [k for k in range(r) if abs(moms[k]) > 1e-10 * abs(mass)]
    if scales is None:
        scales = default_tweak_scales(phi, len(active))
    scales = tuple(float(s) for s in scales)
    if len(set(scales)) != len(scales) or any(s <= 0 for s in scales):
        raise ValueError("scales must be distinct and positive")
    limit = 1.0 / (2.0 * phi.radius)
    if any(s >= limit for s in scales):
        raise ScaleTooLarge(f"scales must stay below 1/(2R) = {limit}")
    if len(scales) < len(active):
        raise DegenerateSystem(
            f"{len(active)} active moment rows but only {len(scales)} scales"
        )
    use = scales[: len(active)]
    A = np.array([[lam**k for lam in use] for k in active])
    A *= (moms[active] / mass)[:, None]
    rhs = np.array([1.0 if k == 0 else 0.0 for k in active])
    try:
        coeff = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSystem(str(exc)) from exc
    return active, use, coeff


def tweak(phi: TestFunction, r: int, scales=None) -> TweakedFunction:
    """Combine rescalings of phi into a kernel with unit mass and vanishing
    moments of order 1..r-1, supported in B(0, 1/2).

    See :func:`tweak_coefficients` for the underlying linear system; all
    scales must stay below 1/(2R) so the support budget holds.
    """
    _, use, coeff = tweak_coefficients(phi, r, scales)
    mass = phi.mass()
    weights = tuple(float(c) / mass for c in coeff)
    acc = np.zeros(phi.grid.npoints)
    half = 0.0
    for w, lam in zip(weights, use):
        acc += w * scale_recenter(phi, 0.0, lam).values
        half = max(half, lam * phi.radius)
    out = SampledFunction(phi.grid, acc, support=(-half, half))
    return TweakedFunction(out, half, base=phi, weights=weights, scales=use)


def make_phicheck(phihat: TestFunction) -> TestFunction:
    """Difference of the half-scale and double-scale rescalings of a tweaked
    kernel; all moments through r-1 vanish and the support doubles.

    When the input carries a combination structure the result keeps it, so
    later rescalings remain exact grid gathers.
    """
    half = 2.0 * phihat.radius
    grid = phihat.grid
    if isinstance(phihat, TweakedFunction):
        weights = phihat.weights + tuple(-w for w in phihat.weights)
        scales = tuple(0.5 * s for s in phihat.scales) + tuple(2.0 * s for s in phihat.scales)
        acc = np.zeros(grid.npoints)
        for w, s in zip(weights, scales):
            acc += w * scale_recenter(phihat.base, 0.0, s).values
        out = SampledFunction(grid, acc, support=(-half, half))
        return TweakedFunction(out, half, base=phihat.base, weights=weights, scales=scales)
    narrow = scale_recenter(phihat, 0.0, 0.5)
    wide = scale_recenter(phihat, 0.0, 2.0)
    out = SampledFunction(grid, narrow.values - wide.values, support=(-half, half))
    return TestFunction(out, half)


def mollifier(phihat: TestFunction) -> TestFunction:
    """Convolution of the double-scale rescaling with the kernel itself.

    Unit mass; dyadic scale increments factor through make_phicheck, which
    is what the reconstruction series exploits.
    """
    wide = scale_recenter(phihat, 0.0, 2.0)
    conv = convolve(wide, phihat.samples)
    half = 3.0 * phihat.radius
    return TestFunction(SampledFunction(phihat.grid, conv.values, support=(-half, half)), half)


def telescoping_residual(phihat: TestFunction, n: int) -> float:
    """Sup-norm residual of the dyadic mollifier increment identity at level n.

    Checks that the 2**-(n+1) and 2**-n rescalings of the mollifier differ by
    the level-n convolution of the kernel with its difference kernel.  The
    convolution of two rescaled functions is itself the rescaling of the base
    convolution, so it is evaluated at base scale and rescaled exactly;
    sampling the convolution literally at level n would lose resolution long
    before the integrand stops being smooth.
    """
    rho = mollifier(phihat)
    chk = make_phicheck(phihat)
    conv = as_testfn(convolve(phihat.samples, chk.samples), radius=3.0 * phihat.radius)
    lam = 2.0**-n
    lhs = scale_recenter(rho, 0.0, lam / 2).values - scale_recenter(rho, 0.0, lam).values
    rhs = scale_recenter(conv, 0.0, lam).values
    return float(np.max(np.abs(lhs - rhs)))


def annihilation_bound_check(
    phicheck: TestFunction, eta: SampledFunction, lam: float, r: int, window: tuple = None
):
    """Evaluate both sides of the polynomial-annihilation convolution bound.

    Returns (lhs, rhs) with lhs the sup of |phicheck^lam * eta| (over the
    window if given) and rhs = C^r norm of eta times the L^1 norm of
    phicheck times lam**r.  Callers assert lhs <= rhs within tolerance.
    """
    scaled = scale_recenter(phicheck, 0.0, lam)
    conv = convolve(scaled, eta)
    if window is None:
        lhs = float(np.max(np.abs(conv.values)))
    else:
        lhs = float(np.max(np.abs(conv.values[conv.grid.window_slice(*window)])))
    l1 = lp_norm(phicheck.samples, 1, phicheck.samples.support)
    rhs = cr_norm_samples(eta, r) * l1 * lam**r
    return lhs, rhs


@dataclass(frozen=True)
class Dictionary:
    """Finite stand-in for the C^r unit ball of test functions on B(0,1).

    Every member has C^r norm 1; when vanishing_order >= 0 the moments
    0..vanishing_order vanish as well.  Maximising a pairing over the
    members lower-bounds the supremum over the full ball, which is the
    conservative direction for detecting bound violations.
    """

    order: int
    vanishing_order: int
    members: tuple

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def _raw_dictionary_profiles(grid: Grid, size: int, seed: int):
    """Translated, modulated and antisymmetric bump profiles inside B(0,1)."""
    rng = np.random.default_rng(seed)
    x = grid.points
    base = standard_bump(grid)
    profiles = []
    kinds = ["translate", "modulate", "antisym"]
    for i in range(size):
        kind = kinds[i % len(kinds)]
        if kind == "translate":
            c = rng.uniform(-0.55, 0.55)
            w = rng.uniform(0.25, 1.0 - abs(c))
            v = np.where(np.abs(x - c) < w, base.samples((x - c) / w), 0.0)
            sup = (c - w, c + w)
        elif kind == "modulate":
            om = rng.uniform(2.0, 10.0)
            th = rng.uniform(0.0, 2 * np.pi)
            v = np.cos(om * x + th) * base.values
            sup = (-1.0, 1.0)
        else:
            w = rng.uniform(0.4, 0.95)
            inner = np.where(np.abs(x) < w, base.samples(x / w), 0.0)
            v = fd_derivative(inner, grid.spacing)
            sup = (-w, w)
        profiles.append(SampledFunction(grid, v, support=sup))
    return profiles


def _moment_projectors(grid: Grid, s: int):
    """Functions chi_j with integral of x**i chi_j = delta_ij for i, j <= s."""
    corrector = tweak(standard_bump(grid), s + 1)
    chis = []
    v = corrector.values
    fact = 1.0
    for j in range(s + 1):
        if j > 0:
            fact *= j
        dj = v if j == 0 else fd_derivative(corrector.values, grid.spacing, j)
        chi = SampledFunction(grid, ((-1.0) ** j / fact) * dj, support=corrector.samples.support)
        chis.append(chi)
    return chis


def build_dictionary(r: int, s: int, size: int, seed: int, grid: Grid) -> Dictionary:
    """Deterministic dictionary of `size` members of the C^r unit ball.

    With s >= 0, members are projected so moments 0..s vanish (within
    1e-8) before the final rescaling onto the C^r sphere.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    profiles = _raw_dictionary_profiles(grid, size, seed)
    chis = _moment_projectors(grid, s) if s >= 0 else None
    members = []
    for prof in profiles:
        v = prof.values.copy()
        sup_rad = max(abs(prof.support[0]), abs(prof.support[1]))
        if chis is not None:
            sup_rad = max(sup_rad, max(abs(c.support[0]) for c in chis), 0.5)
            # two correction sweeps push residual moments below 1e-10
            for _ in range(2):
                for j, chi in enumerate(chis):
                    probe = SampledFunction(grid, v * grid.points**j, (-sup_rad, sup_rad))
                    v = v - integrate(probe) * chi.values
        sf = SampledFunction(grid, v, support=(-sup_rad, sup_rad))
        norm = cr_norm_samples(sf, r)
        if norm == 0.0:
            continue
        member = TestFunction(SampledFunction(grid, v / norm, support=sf.support), sup_rad)
        members.append(member)
    return Dictionary(order=r, vanishing_order=s, members=tuple(members))
