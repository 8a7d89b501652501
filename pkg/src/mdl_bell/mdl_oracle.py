"""Brute-force maximisation of Bell functionals over l-MDL local models.

An l-MDL model mixes, over a hidden variable, products
P(xy|lambda) P(a|x lambda) P(b|y lambda) with P(xy|lambda) >= l. The set of
such joint distributions is a polytope. Any mixture component can be
rewritten as a mixture of deterministic response functions sharing the same
input distribution, and the input distribution itself is a mixture of the
extreme points of {q >= l, sum q = 1}. Those extreme points put 1 - 3l on
one input pair and l on the other three. The polytope's vertices are thus
among the 16 x 4 = 64 products below, and a linear functional attains its
maximum on one of them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from mdl_bell.errors import InvalidArgumentError, MDLError
from mdl_bell.mdl_inequality import (
    ELL_MAX,
    BellFunctional,
    JointDistribution,
    MDLParameter,
    evaluate,
)

INPUT_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))
SUM_TOL = 1e-12


@dataclass(frozen=True)
class DeterministicStrategy:
    a_of_x: tuple[int, int]
    b_of_y: tuple[int, int]

    def __post_init__(self):
        for f in (self.a_of_x, self.b_of_y):
            if len(f) != 2 or any(v not in (0, 1) for v in f):
                raise InvalidArgumentError(f"response function must map {{0,1}} to {{0,1}}, got {f!r}")

    @property
    def bits(self) -> tuple[int, int, int, int]:
        return (*self.a_of_x, *self.b_of_y)


def all_strategies() -> list[DeterministicStrategy]:
    """The 16 strategies, ordered by the bits (a(0), a(1), b(0), b(1))."""
    return [DeterministicStrategy((a0, a1), (b0, b1)) for a0, a1, b0, b1 in itertools.product((0, 1), repeat=4)]


@dataclass(frozen=True)
class InputDistribution:
    """q[x, y] = P(xy | lambda), constrained to q >= ell."""

    q: np.ndarray
    ell: float

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(2, 2)
        if abs(q.sum() - 1.0) > SUM_TOL:
            raise InvalidArgumentError(f"input distribution sums to {q.sum()!r}")
        if np.any(q < self.ell - SUM_TOL):
            raise InvalidArgumentError(f"input distribution {q.ravel().tolist()} violates q >= {self.ell}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @classmethod
    def extremal(cls, ell: float, peak: tuple[int, int]) -> InputDistribution:
        q = np.full((2, 2), ell)
        q[peak] = 1.0 - 3.0 * ell
        return cls(q, ell)


def strategy_joint(strategy: DeterministicStrategy, inputs: InputDistribution) -> np.ndarray:
    p = np.zeros((2, 2, 2, 2))
    for x, y in INPUT_PAIRS:
        p[strategy.a_of_x[x], strategy.b_of_y[y], x, y] = inputs.q[x, y]
    return p


@dataclass(frozen=True)
class MDLVertex:
    strategy: DeterministicStrategy
    inputs: InputDistribution

    @property
    def peak(self) -> tuple[int, int]:
        return tuple(int(i) for i in np.unravel_index(np.argmax(self.inputs.q), (2, 2)))

    def joint(self) -> JointDistribution:
        return JointDistribution(strategy_joint(self.strategy, self.inputs))

    def describe(self) -> dict:
        return {
            "a_of_x": list(self.strategy.a_of_x),
            "b_of_y": list(self.strategy.b_of_y),
            "peak_input": list(self.peak),
            "inputs": self.inputs.q.ravel().tolist(),
        }


@dataclass(frozen=True)
class MDLModel:
    """Finite mixture over the hidden variable: (weight, strategy, inputs) per component."""

    components: tuple
    ell: float

    def __post_init__(self):
        weights = np.array([c[0] for c in self.components], dtype=float)
        if len(weights) == 0 or np.any(weights < 0) or abs(weights.sum() - 1.0) > SUM_TOL:
            raise InvalidArgumentError("component weights must be nonnegative and sum to 1")
        for _, _, inputs in self.components:
            if np.any(inputs.q < self.ell - SUM_TOL):
                raise InvalidArgumentError("component input distribution violates the ell bound")

    def joint(self) -> JointDistribution:
        p = sum(w * strategy_joint(s, q) for w, s, q in self.components)
        return JointDistribution(p)


def _checked_ell(ell) -> float:
    if isinstance(ell, MDLParameter):
        return ell.ell
    return MDLParameter(ell).ell


def enumerate_vertices(ell) -> list[MDLVertex]:
    """All 64 (strategy, extremal input distribution) pairs.

    Strategies vary slowest; within a strategy the input peak runs over
    (0,0), (0,1), (1,0), (1,1). This order fixes tie-breaking in maximize.
    """
    ell = _checked_ell(ell)
    extremal = [InputDistribution.extremal(ell, peak) for peak in INPUT_PAIRS]
    return [MDLVertex(s, q) for s in all_strategies() for q in extremal]


def vertex_values(f: BellFunctional, ell) -> np.ndarray:
    return np.array([evaluate(f, v.joint()) for v in enumerate_vertices(ell)])


def maximize(f: BellFunctional, ell) -> tuple[float, MDLVertex]:
    vertices = enumerate_vertices(ell)
    values = [evaluate(f, v.joint()) for v in vertices]
    best = int(np.argmax(values))  # first maximum in enumeration order
    return values[best], vertices[best]


def random_model(ell, n_components: int, seed: int) -> MDLModel:
    """Random l-MDL mixture; q = l + (1 - 4l) u keeps every input pair at >= l."""
    ell = _checked_ell(ell)
    if n_components < 1:
        raise InvalidArgumentError("n_components must be at least 1")
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(n_components))
    strategies = all_strategies()
    components = []
    for w in weights:
        if ell == ELL_MAX:
            q = np.full(4, 0.25)
        else:
            q = ell + (1.0 - 4.0 * ell) * rng.dirichlet(np.ones(4))
        s = strategies[int(rng.integers(16))]
        components.append((float(w), s, InputDistribution(q, ell)))
    return MDLModel(tuple(components), ell)


class NoThresholdError(MDLError):
    """The quantum value never crosses the MDL bound on [0, 1/4]."""


def threshold(
    functional: BellFunctional | Callable[[float], BellFunctional],
    quantum_value: Callable[[float], float],
    tol: float = 1e-9,
) -> float:
    """Smallest ell above which quantum_value(ell) exceeds the l-MDL maximum.

    ``functional`` is either fixed or a builder taking ell. Bisection keeps
    gap(lo) <= 0 < gap(hi), where gap = quantum value - MDL maximum.
    """
    build = functional if callable(functional) else (lambda _ell: functional)

    def gap(ell):
        return quantum_value(ell) - maximize(build(ell), ell)[0]

    lo, hi = 0.0, ELL_MAX
    g_lo, g_hi = gap(lo), gap(hi)
    if g_hi <= 0.0:
        raise NoThresholdError("quantum value does not exceed the MDL bound anywhere in [0, 1/4]")
    if g_lo > 0.0:
        return 0.0
    # bisection; a sign change is guaranteed by the checks above
    n_iter = int(math.ceil(math.log2((hi - lo) / tol))) + 1
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
