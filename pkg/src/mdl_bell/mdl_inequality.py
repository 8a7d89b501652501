"""The measurement-dependent-locality (MDL) Bell functional.

An l-MDL local model lets the hidden variable bias the inputs, but every
input pair keeps probability at least l given the hidden variable. Such
models satisfy

    l P(0000) - (1 - 3l) [P(0101) + P(1010) + P(0011)] <= 0

for joint probabilities P(abxy), and the same with conditionals P(ab|xy)
when the observed input marginal is uniform. l = 1/4 recovers measurement
independence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mdl_bell.errors import InvalidArgumentError
from mdl_bell.quantum_core import ALGEBRAIC_TOL, CorrelationTable

ELL_MAX = 0.25

# (a, b, x, y) support of the MDL functional
HARDY_PEAK = (0, 0, 0, 0)
HARDY_ZEROS = ((0, 1, 0, 1), (1, 0, 1, 0), (0, 0, 1, 1))


@dataclass(frozen=True)
class MDLParameter:
    ell: float

    def __post_init__(self):
        ell = float(self.ell)
        if not (0.0 <= ell <= ELL_MAX) or math.isnan(ell):
            raise InvalidArgumentError(f"ell must lie in [0, 1/4], got {self.ell!r}")
        object.__setattr__(self, "ell", ell)

    def __float__(self):
        return self.ell


def _ell(value) -> float:
    return MDLParameter(value).ell if not isinstance(value, MDLParameter) else value.ell


@dataclass(frozen=True)
class JointDistribution:
    """Joint probabilities P(abxy), indexed p[a, b, x, y]."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2, 2, 2, 2):
            raise InvalidArgumentError(f"joint distribution must have shape (2,2,2,2), got {p.shape}")
        if np.any(p < -ALGEBRAIC_TOL) or np.any(p > 1 + ALGEBRAIC_TOL):
            raise InvalidArgumentError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > ALGEBRAIC_TOL:
            raise InvalidArgumentError(f"joint distribution sums to {p.sum()!r}")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def input_marginal(self) -> np.ndarray:
        """m[x, y] = sum_ab P(abxy)."""
        return self.p.sum(axis=(0, 1))

    @classmethod
    def from_conditional(cls, table: CorrelationTable, inputs=None) -> JointDistribution:
        """P(abxy) = P(xy) P(ab|xy); uniform inputs unless given as a 2x2 array."""
        m = np.full((2, 2), 0.25) if inputs is None else np.asarray(inputs, dtype=float)
        return cls(np.einsum("xyab,xy->abxy", table.p, m))

    def conditional(self) -> CorrelationTable:
        m = self.input_marginal
        if np.any(m <= 0):
            raise InvalidArgumentError("conditional undefined for an input pair with zero probability")
        return CorrelationTable(np.einsum("abxy,xy->xyab", self.p, 1.0 / m))


@dataclass(frozen=True)
class BellFunctional:
    """Linear functional with coefficients c[a, b, x, y] on joint probabilities."""

    coefficients: np.ndarray = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (2, 2, 2, 2):
            raise InvalidArgumentError(f"coefficients must have shape (2,2,2,2), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zero(cls) -> BellFunctional:
        return cls(np.zeros((2, 2, 2, 2)), name="zero")


def eq4_functional(ell) -> BellFunctional:
    ell = _ell(ell)
    c = np.zeros((2, 2, 2, 2))
    c[HARDY_PEAK] = ell
    for idx in HARDY_ZEROS:
        c[idx] = -(1.0 - 3.0 * ell)
    return BellFunctional(c, name="eq4")


def chsh_functional() -> BellFunctional:
    """CHSH in joint form: coefficients (-1)^(xy + a + b)."""
    c = np.zeros((2, 2, 2, 2))
    for a, b, x, y in np.ndindex(2, 2, 2, 2):
        c[a, b, x, y] = (-1) ** (x * y + a + b)
    return BellFunctional(c, name="chsh")


def evaluate(f: BellFunctional, j: JointDistribution) -> float:
    return float(np.sum(f.coefficients * j.p))


def _hardy_terms(p: CorrelationTable):
    p0, p01, p10, p11 = p.hardy_terms
    return p0, p01 + p10 + p11


def eq5_lhs(p: CorrelationTable, ell) -> float:
    ell = _ell(ell)
    p0, s = _hardy_terms(p)
    return ell * p0 - (1.0 - 3.0 * ell) * s


@dataclass(frozen=True)
class CriticalEll:
    """Violation threshold: the inequality is violated exactly for ell > value.

    ``value`` is None when the table carries no information. ``in_range`` is
    False when the root sits above 1/4, i.e. no valid ell is excluded.
    """

    value: float | None
    in_range: bool
    raw_root: float | None = None

    @property
    def defined(self) -> bool:
        return self.value is not None


def critical_ell_from_terms(p0: float, s: float) -> CriticalEll:
    denom = p0 + 3.0 * s
    if p0 <= 0.0 and s <= 0.0:
        return CriticalEll(None, False, None)
    root = s / denom
    if root > ELL_MAX:
        return CriticalEll(ELL_MAX, False, root)
    return CriticalEll(root, True, root)


def critical_ell(p: CorrelationTable) -> CriticalEll:
    """l* = S / (P0 + 3S), S the sum of the three terms that vanish at the Hardy point."""
    return critical_ell_from_terms(*_hardy_terms(p))


def correlator(p: CorrelationTable, x: int, y: int) -> float:
    s = p.p[x, y]
    return float(s[0, 0] - s[0, 1] - s[1, 0] + s[1, 1])


def chsh_value(p: CorrelationTable) -> float:
    return sum((-1) ** (x * y) * correlator(p, x, y) for x in (0, 1) for y in (0, 1))


def chsh_mdl_threshold() -> float:
    """Smallest ell an MDL-adjusted CHSH test can exclude: (2 - sqrt2) / 4."""
    return (2.0 - math.sqrt(2.0)) / 4.0


def min_detection_efficiency(ell) -> float:
    ell = float(ell)
    if ell < 0 or math.isnan(ell):
        raise InvalidArgumentError(f"ell must be nonnegative, got {ell!r}")
    return math.sqrt(ell)
