"""Reference signal corpus with analytic derivative formulas.

Provides the sampled functions and closed-form distributions the test and
experiment drivers feed into germs: bumps, polynomials, trigonometric
waves, truncated Weierstrass sums (the rough reference signal), and the
Dirac mass (pairing-only, never a density).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterViolation
from .germ import DiracDistribution
from .grid import Grid, SampledFunction

KINDS = ("bump", "poly", "trig", "weierstrass", "dirac")


@dataclass(frozen=True)
class SignalSpec:
    """Declarative description of one reference signal.

    kind "bump": amplitude * exp(-1/(1-u^2)) with u = (x-center)/width.
    kind "poly": sum of coefficients[k] * x**k.
    kind "trig": amplitude * cos(frequency * x + phase) ("sin" shifts phase).
    kind "weierstrass": sum_{k=0..depth} a^k cos(b^k pi x); the infinite sum
        has Holder index -log(a)/log(b), the truncation is smooth but keeps
        the roughness of the retained octaves.
    kind "dirac": point mass at ``location`` (pairing-only).
    """

    kind: str
    coefficients: tuple = ()
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    center: float = 0.0
    width: float = 1.0
    a: float = 0.5
    b: float = 3.0
    depth: int = 12
    location: float = 0.0
    deriv_order: int = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterViolation(f"unknown signal kind {self.kind!r}")
        if self.kind == "weierstrass":
            if not (0 < self.a < 1 < self.b):
                raise ParameterViolation("weierstrass needs 0 < a < 1 < b")
            if self.a * self.b <= 1:
                raise ParameterViolation("weierstrass rough regime needs a*b > 1")
        if self.kind == "poly" and len(self.coefficients) == 0:
            raise ParameterViolation("poly needs coefficients")
        if self.kind == "bump" and self.width <= 0:
            raise ParameterViolation("bump needs positive width")

    @property
    def holder_index(self) -> float:
        if self.kind != "weierstrass":
            raise ParameterViolation("holder_index only applies to weierstrass")
        return -math.log(self.a) / math.log(self.b)


def _default_order(spec: SignalSpec) -> int:
    if spec.deriv_order is not None:
        return spec.deriv_order
    return {
        "bump": 2,
        "poly": max(len(spec.coefficients) - 1, 0),
        "trig": 4,
        "weierstrass": 1,
        "dirac": 0,
    }[spec.kind]


def _bump_values(spec: SignalSpec, x: np.ndarray, order: int) -> np.ndarray:
    u = (x - spec.center) / spec.width
    inside = np.abs(u) < 1.0
    out = np.zeros_like(x)
    ui = u[inside]
    with np.errstate(over="ignore"):
        core = np.exp(-1.0 / (1.0 - ui**2))
    if order == 0:
        out[inside] = core
    elif order == 1:
        g = -2.0 * ui / (1.0 - ui**2) ** 2
        out[inside] = core * g / spec.width
    elif order == 2:
        g = -2.0 * ui / (1.0 - ui**2) ** 2
        dg = -2.0 / (1.0 - ui**2) ** 2 - 8.0 * ui**2 / (1.0 - ui**2) ** 3
        out[inside] = core * (g * g + dg) / spec.width**2
    else:
        raise ParameterViolation("bump derivatives available through order 2")
    return spec.amplitude * out


def realize(spec: SignalSpec, grid: Grid):
    """Sample a signal and its analytic derivatives on a grid.

    Returns (signal, derivatives): for the function kinds the signal is a
    SampledFunction and derivatives lists the orders 1..deriv_order; the
    Dirac returns its closed-form pairing distribution with no derivatives.
    """
    if spec.kind == "dirac":
        return DiracDistribution(spec.location, grid), []

    x = grid.points
    order = _default_order(spec)
    L = grid.half_length

    if spec.kind == "bump":
        sup = (max(spec.center - spec.width, -L), min(spec.center + spec.width, L))
        arrays = [_bump_values(spec, x, k) for k in range(order + 1)]
    elif spec.kind == "poly":
        sup = (-L, L)
        poly = np.polynomial.Polynomial(list(spec.coefficients))
        arrays = []
        for _ in range(order + 1):
            arrays.append(poly(x))
            poly = poly.deriv()
    elif spec.kind == "trig":
        sup = (-L, L)
        arrays = [
            spec.amplitude
            * spec.frequency**k
            * np.cos(spec.frequency * x + spec.phase + k * np.pi / 2)
            for k in range(order + 1)
        ]
    elif spec.kind == "weierstrass":
        sup = (-L, L)
        ks = np.arange(spec.depth + 1)
        arrays = []
        for d in range(order + 1):
            acc = np.zeros_like(x)
            for k in ks:
                amp = spec.a**k * (spec.b**k * np.pi) ** d
                acc += amp * np.cos(spec.b**k * np.pi * x + d * np.pi / 2)
            arrays.append(spec.amplitude * acc)
    else:  # pragma: no cover - guarded by SignalSpec validation
        raise ParameterViolation(spec.kind)

    sampled = [SampledFunction(grid, v, support=sup) for v in arrays]
    return sampled[0], sampled[1:]


def sin_spec(frequency: float = 1.0, amplitude: float = 1.0) -> SignalSpec:
    return SignalSpec("trig", frequency=frequency, amplitude=amplitude, phase=-np.pi / 2)


def cos_spec(frequency: float = 1.0, amplitude: float = 1.0) -> SignalSpec:
    return SignalSpec("trig", frequency=frequency, amplitude=amplitude)
