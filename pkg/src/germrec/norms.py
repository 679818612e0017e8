"""Norm functionals for germs and distributions.

Implements the scale-indexed tables behind the coherence and homogeneity
conditions, the four averaged sequences derived from the coherence table,
the combined germ-size norm whose finiteness drives the reconstruction
bounds, Besov norms by local means and by Taylor remainders, and a
numeric verifier for the summability lemma that links the coherence
condition to the averaged sequences.

Conventions fixed here once: the n-range is 0..n_max, the offset variable
h runs over symmetric dyadic annuli inside B(0, 2), logs are natural, and
sup over the test-function ball is realised by a finite dictionary (a
certified lower bound on the true sup).
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import HypothesisViolated, ParameterViolation
from .germ import Distribution, ExponentTriple, Germ
from .grid import (
    INF,
    DyadicAnnulusScheme,
    Grid,
    SampledFunction,
    check_integrability,
    is_inf,
    lp_norm_samples,
    lq_seq_norm,
    lqh_norm,
    trapezoid_weights,
)
from .testfn import Dictionary, TestFunction, build_dictionary

H_OUTER_RADIUS = 2.0


@dataclass(frozen=True)
class NormConfig:
    """Parameters shared by the norm estimators.

    The spatial window K is [-window_half, window_half]; estimators that the
    theory states over an enlargement use ``enlarged``.  ``eps`` only enters
    the scaling function in the critical case gamma = 0.
    """

    exponents: ExponentTriple
    p: float = INF
    q: float = INF
    q1: float = INF
    eps: float = 1.0
    window_half: float = 0.5
    n_max: int = 8
    samples_per_annulus: int = 8
    dict_order: int = 2
    dict_vanishing: int = -1
    dict_size: int = 16
    dict_seed: int = 0
    lattice_oversample: int = 16

    def __post_init__(self):
        check_integrability(self.p, "p")
        check_integrability(self.q, "q")
        check_integrability(self.q1, "q1")
        if self.eps <= 0:
            raise ParameterViolation("eps must be positive")
        if self.n_max < 1:
            raise ParameterViolation("n_max must be >= 1")

    def window(self) -> tuple:
        return (-self.window_half, self.window_half)

    def enlarged(self, pad: float) -> tuple:
        return (-self.window_half - pad, self.window_half + pad)

    def scales(self) -> np.ndarray:
        return 2.0 ** -np.arange(self.n_max + 1)

    def h_scheme(self, grid: Grid) -> DyadicAnnulusScheme:
        """Symmetric dyadic annuli over B(0, 2) resolved down to the grid."""
        j_max = grid.level - 1
        return DyadicAnnulusScheme(
            H_OUTER_RADIUS, j_max, self.samples_per_annulus, grid=grid
        )

    def dictionary(self, grid: Grid, vanishing: int = None) -> Dictionary:
        s = self.dict_vanishing if vanishing is None else vanishing
        return build_dictionary(self.dict_order, s, self.dict_size, self.dict_seed, grid)

    def check_resolution(self, grid: Grid):
        if 2.0**-self.n_max < 8 * grid.spacing:
            raise ParameterViolation(
                f"n_max={self.n_max} drops below 8 grid cells at level {grid.level}"
            )

    def scale_lattice(self, grid: Grid, lam: float, window: tuple) -> np.ndarray:
        """Grid-snapped x-lattice with spacing lam / lattice_oversample.

        Sampling the window proportionally to the scale keeps per-scale
        quantities comparable across scales (the same profile points are
        hit after the substitution x -> x/lam).
        """
        step = max(lam / self.lattice_oversample, grid.spacing)
        step = grid.spacing * max(round(step / grid.spacing), 1)
        a, b = window
        n = int(np.floor((b - a) / step + 1e-9))
        return grid.snap(a + step * np.arange(n + 1))


@dataclass
class CoherenceTable:
    """Sampled scale/offset tables of germ pairings over a window.

    ``f[i, j]`` is the L^p norm in x over the twice-enlarged window of the
    normalised germ difference at scale 2**-n_i and offset h_j; ``g[i]`` is
    the same for the single-point pairing normalised by the homogeneity
    scale.  The averaged sequences m1..m4 are filled by m_sequences.
    """

    config: NormConfig
    scheme: DyadicAnnulusScheme
    f: np.ndarray
    g: np.ndarray
    m1: np.ndarray = None
    m2: np.ndarray = None
    m3: np.ndarray = None
    m4: np.ndarray = None
    tail_bounds: dict = field(default_factory=dict)

    @property
    def h_nodes(self) -> np.ndarray:
        return self.scheme.nodes

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(self.config.n_max + 1)


def scaling_function(gamma: float, q: float, eps: float, lam: float) -> float:
    """Scale weight for the reconstruction bound: a power law away from the
    critical exponent, a logarithmic correction at it (natural log)."""
    if not (0 < lam <= 1):
        raise ParameterViolation("lam must lie in (0, 1]")
    if gamma != 0.0:
        return lam**gamma
    if is_inf(q):
        return 1.0 + abs(math.log(lam))
    if eps <= 0:
        raise ParameterViolation("eps must be positive at gamma = 0")
    return 1.0 + abs(math.log(lam)) ** (1.0 + eps)


def fg_tables(F: Germ, phihat: TestFunction, cfg: NormConfig) -> CoherenceTable:
    """Fill the coherence/homogeneity tables of a germ against a kernel.

    x runs over the grid points of the twice-enlarged window; h over the
    dyadic annulus nodes of B(0, 2), snapped to the grid so that shifted
    base points stay exact.
    """
    grid = phihat.grid
    cfg.check_resolution(grid)
    scheme = cfg.h_scheme(grid)
    exps = cfg.exponents
    window = cfg.enlarged(2.0)
    sl = grid.window_slice(*window)
    xs = grid.points[sl]
    hs = scheme.nodes
    n_count = cfg.n_max + 1
    f = np.zeros((n_count, hs.size))
    g = np.zeros(n_count)
    for i in range(n_count):
        lam = 2.0**-i
        base_vals = F.pair_scaled(xs, 0.0, phihat, lam)
        g[i] = lp_norm_samples(base_vals / lam**exps.beta, cfg.p, grid.spacing)
        for j, h in enumerate(hs):
            if h == 0.0:
                continue
            shifted = F.pair_scaled(xs, h, phihat, lam)
            denom = lam**exps.alpha * (lam + abs(h)) ** (exps.gamma - exps.alpha)
            f[i, j] = lp_norm_samples((shifted - base_vals) / denom, cfg.p, grid.spacing)
    return CoherenceTable(config=cfg, scheme=scheme, f=f, g=g)


def _geometric_tail(last_term: float, ratio_exponent: float) -> float:
    """Upper bound for the dropped tail of a geometrically decaying sum."""
    if ratio_exponent <= 0:
        return math.inf
    rho = 2.0**-ratio_exponent
    return last_term * rho / (1.0 - rho)


def m_sequences(table: CoherenceTable, cfg: NormConfig, r: int):
    """Averaged sequences of the coherence table (d = 1 throughout).

    m1 integrates the table at matching scale over |h| <= 2**-(n-1); m2 and
    m3 sum deeper scales with geometric weights 2**-(k-n)c for c = gamma and
    c = alpha + r respectively; m4 sums the shallower scales with c = gamma.
    Truncated tails are bounded by the geometric envelope of the last
    retained term and reported in table.tail_bounds.
    """
    exps = cfg.exponents
    scheme = table.scheme
    n_count = cfg.n_max + 1
    ball_n = [scheme.plain_weights(radius=2.0 ** -(n - 1)) for n in range(n_count)]
    ball_k = [scheme.plain_weights(radius=2.0**-k) for k in range(n_count)]
    int_match = np.array([2.0**n * float(ball_n[n] @ table.f[n]) for n in range(n_count)])
    m1 = int_match
    m2 = np.zeros(n_count)
    m3 = np.zeros(n_count)
    m4 = np.zeros(n_count)
    tail2 = np.zeros(n_count)
    tail3 = np.zeros(n_count)
    c2 = exps.gamma
    c3 = exps.alpha + r
    for n in range(n_count):
        for k in range(n, n_count):
            w = 2.0 ** (-(k - n) * c2 + k)
            m2[n] += w * float(ball_k[k] @ table.f[k])
            w3 = 2.0 ** (-(k - n) * c3 + n)
            m3[n] += w3 * float(ball_n[n] @ table.f[k])
        last2 = 2.0 ** (-(n_count - 1 - n) * c2 + (n_count - 1)) * float(
            ball_k[n_count - 1] @ table.f[n_count - 1]
        )
        tail2[n] = _geometric_tail(last2, c2)
        last3 = 2.0 ** (-(n_count - 1 - n) * c3 + n) * float(
            ball_n[n] @ table.f[n_count - 1]
        )
        tail3[n] = _geometric_tail(last3, c3)
        for k in range(0, n):
            w = 2.0 ** (-(k - n) * exps.gamma + k)
            m4[n] += w * float(scheme.plain_weights(radius=2.0 ** -(k - 1)) @ table.f[k])
    table.m1, table.m2, table.m3, table.m4 = m1, m2, m3, m4
    table.tail_bounds = {"m2": tail2, "m3": tail3}
    return m1, m2, m3, m4


def coherence_norm_from_table(table: CoherenceTable) -> float:
    """L^p in x, then sup over scales, then the weighted L^q in h."""
    cfg = table.config
    sup_n = table.f.max(axis=0)
    return lqh_norm(sup_n, cfg.q, table.scheme)


def coherence_norm(F: Germ, phi: TestFunction, cfg: NormConfig) -> float:
    return coherence_norm_from_table(fg_tables(F, phi, cfg))


def homogeneity_norm(F: Germ, phi: TestFunction, cfg: NormConfig) -> float:
    """Sup over scales of the L^p size of the normalised pairings."""
    table = fg_tables(F, phi, cfg)
    return float(np.max(table.g))


def g_norm_from_table(table: CoherenceTable, cfg: NormConfig, r: int) -> float:
    if table.m1 is None:
        m_sequences(table, cfg, r)
    gamma = cfg.exponents.gamma
    hom = lq_seq_norm(table.g, cfg.q1)
    if gamma > 0:
        return (
            hom
            + lq_seq_norm(table.m1, cfg.q)
            + lq_seq_norm(table.m2, cfg.q)
            + lq_seq_norm(table.m3, cfg.q)
        )
    if gamma < 0:
        return hom + lq_seq_norm(table.m3, cfg.q) + lq_seq_norm(table.m4, cfg.q)
    ks = np.array(
        [scaling_function(0.0, cfg.q, cfg.eps, 2.0**-n) for n in range(cfg.n_max + 1)]
    )
    return hom + lq_seq_norm(table.m3 / ks, cfg.q) + lq_seq_norm(table.m4 / ks, cfg.q)


def g_norm(F: Germ, phihat: TestFunction, cfg: NormConfig, r: int) -> float:
    """Combined germ-size norm: homogeneity sequence plus the averaged
    coherence sequences, with the case split on the sign of gamma."""
    if r <= -cfg.exponents.beta:
        raise ParameterViolation("need r > -beta")
    table = fg_tables(F, phihat, cfg)
    return g_norm_from_table(table, cfg, r)


def _lattice_lp(values: np.ndarray, lattice: np.ndarray, p: float) -> float:
    if is_inf(p):
        return float(np.max(np.abs(values))) if values.size else 0.0
    w = trapezoid_weights(lattice)
    return float(np.dot(w, np.abs(values) ** p) ** (1.0 / p))


def besov_localmeans_profile(
    xi: Distribution, alpha: float, cfg: NormConfig, grid: Grid, n_start: int = 0
):
    """Per-scale local-means quantities of a distribution.

    Returns (scale indices, normalised L^p sizes, raw L^p sizes): raw[i] is
    the L^p norm over the window of the dictionary-max pairing at scale
    2**-n, and normalised divides by the homogeneity weight 2**-(n alpha).
    The x-lattice at scale 2**-n has spacing 2**-n / lattice_oversample, so
    every scale probes the same rescaled sample points.
    """
    if cfg.dict_order <= -alpha:
        raise ParameterViolation("dictionary order must exceed -alpha")
    vanish = int(math.floor(alpha)) if alpha >= 0 else -1
    dictionary = cfg.dictionary(grid, vanishing=vanish)
    ns = np.arange(n_start, cfg.n_max + 1)
    raw = np.zeros(ns.size)
    for idx, n in enumerate(ns):
        lam = 2.0 ** -float(n)
        lattice = cfg.scale_lattice(grid, lam, cfg.window())
        best = None
        for psi in dictionary:
            vals = np.abs(xi.pair_scaled(lattice, psi, lam))
            best = vals if best is None else np.maximum(best, vals)
        raw[idx] = _lattice_lp(best, lattice, cfg.p)
    return ns, raw / 2.0 ** (-ns * alpha), raw


def besov_localmeans_norm(
    xi: Distribution, alpha: float, cfg: NormConfig, grid: Grid, n_start: int = 0
) -> float:
    """Besov norm by local means, with the finite dictionary standing in for
    the sup over the test-function ball (hence a lower bound).

    For alpha >= 0 the scaled part tests against members with vanishing
    moments through floor(alpha) and the unit-scale term is added.
    """
    ns, normalised, _ = besov_localmeans_profile(xi, alpha, cfg, grid, n_start)
    total = lq_seq_norm(normalised, cfg.q)
    if alpha >= 0:
        plain = cfg.dictionary(grid, vanishing=-1)
        lattice = cfg.scale_lattice(grid, 1.0, cfg.window())
        best = None
        for psi in plain:
            vals = np.abs(xi.pair_scaled(lattice, psi, 1.0))
            best = vals if best is None else np.maximum(best, vals)
        total += _lattice_lp(best, lattice, cfg.p)
    return total


def besov_taylor_norm(
    f: SampledFunction,
    derivatives,
    alpha: float,
    p: float,
    q: float,
    h0: float,
    window: tuple = None,
    samples_per_annulus: int = 8,
) -> float:
    """Besov norm through Taylor remainders of the derivative arrays.

    For every order k < alpha, the remainder of the Taylor polynomial of
    order floor(alpha - k) of the k-th derivative, normalised by
    |h|^(alpha-k), is measured in L^p over the window and then in the
    weighted L^q over offsets in B(0, h0); the derivative L^p norms are
    added.  alpha must be positive and non-integer.
    """
    if alpha <= 0 or float(alpha) == int(alpha):
        raise ParameterViolation("alpha must be positive and non-integer")
    order = math.ceil(alpha)
    arrays = (f, *derivatives)
    if len(arrays) < order:
        from .errors import ArityMismatch

        raise ArityMismatch(f"need {order} arrays through order {order - 1}")
    grid = f.grid
    if window is None:
        window = (-grid.half_length + h0, grid.half_length - h0)
    sl = grid.window_slice(*window)
    scheme = DyadicAnnulusScheme(h0, grid.level - 1, samples_per_annulus, grid=grid)
    hs = scheme.nodes
    total = 0.0
    for k in range(order):
        rem_per_h = np.zeros(hs.size)
        for j, h in enumerate(hs):
            if h == 0.0:
                continue
            cells = int(round(h / grid.spacing))
            shifted = np.roll(arrays[k].values, -cells)
            if cells > 0:
                shifted[-cells:] = 0.0
            elif cells < 0:
                shifted[:-cells] = 0.0
            taylor = np.zeros_like(shifted)
            for l in range(order - k):
                taylor += arrays[k + l].values * h**l / math.factorial(l)
            rem = (shifted - taylor)[sl] / abs(h) ** (alpha - k)
            rem_per_h[j] = lp_norm_samples(rem, p, grid.spacing)
        total += lqh_norm(rem_per_h, q, scheme)
        total += lp_norm_samples(arrays[k].values[sl], p, grid.spacing)
    return total


SeriesLemmaReport = namedtuple(
    "SeriesLemmaReport", ["lhs", "witness", "bound_holds", "constant", "declared_bound"]
)


def series_lemma_verify(
    a: np.ndarray, f_table: np.ndarray, q: float, scheme: DyadicAnnulusScheme, A: float = None
) -> SeriesLemmaReport:
    """Check the summability lemma numerically.

    ``a`` is a (k, n) nonnegative weight matrix with row and column sums
    bounded by A; ``f_table`` holds nonnegative values of f_k at the scheme
    nodes.  Computes u_n = sum_k a[k, n] * int_{|x| <= 2**-(k-1)} 2**k f_k,
    the l^q norm of u, and the witness norm of the pointwise sup over k in
    the weighted offset space; the conclusion bound uses the constant 4A of
    the one-dimensional estimate.
    """
    a = np.asarray(a, dtype=float)
    f_table = np.asarray(f_table, dtype=float)
    if a.ndim != 2 or f_table.ndim != 2 or a.shape[0] != f_table.shape[0]:
        raise ValueError("a must be (k, n), f_table must be (k, h)")
    if np.any(a < 0) or np.any(f_table < 0):
        raise HypothesisViolated("weights and table values must be nonnegative")
    row = a.sum(axis=1).max() if a.size else 0.0
    col = a.sum(axis=0).max() if a.size else 0.0
    observed = max(row, col)
    if A is None:
        A = observed
    elif observed > A * (1 + 1e-12):
        raise HypothesisViolated(f"row/column sums reach {observed} > declared {A}")
    n_k, n_n = a.shape
    ints = np.array(
        [
            2.0**k * float(scheme.plain_weights(radius=2.0 ** -(k - 1)) @ f_table[k])
            for k in range(n_k)
        ]
    )
    u = a.T @ ints
    lhs = lq_seq_norm(u, q)
    witness = lqh_norm(f_table.max(axis=0), q, scheme)
    declared = 4.0 * A * witness
    constant = lhs / witness if witness > 0 else (0.0 if lhs == 0 else math.inf)
    return SeriesLemmaReport(lhs, witness, lhs <= declared * (1 + 1e-9), constant, declared)
