"""Multi-start simplex search over Schmidt angle and measurement angles.

Used to check that the golden-ratio state with theta = acos sqrt(1/2 - 1/sqrt5)
gives the strongest MDL violation. At visibility 1 the threshold ell* is 0 on
a whole set of Hardy points, so the default figure of merit is the penalised
form P(00|00) - kappa * S, which prefers the Hardy point with the largest
P(00|00).

Local search is scipy's Nelder-Mead with the standard coefficients
(reflection 1, expansion 2, contraction 0.5, shrink 0.5). The Schmidt angle is
box-constrained to [0, pi/4]; measurement angles are free and reported
modulo pi in [-pi/2, pi/2).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from mdl_bell.errors import InvalidArgumentError
from mdl_bell.mdl_inequality import ELL_MAX, critical_ell_from_terms
from mdl_bell.quantum_core import GOLDEN_CHI, PAPER_THETA, ROUNDOFF

DEGENERATE_SENTINEL = 1.0
DEFAULT_KAPPA = 1e3
SIMPLEX_DIAMETER_TOL = 1e-8
MAX_EVALUATIONS = 10_000
CHI_RANGE = (0.0, math.pi / 4)
ANGLE_RANGE = (-math.pi / 2, math.pi / 2)


def _wrap_angle(t: float) -> float:
    """Angle modulo pi in [-pi/2, pi/2); projectors have period pi."""
    return (t + math.pi / 2) % math.pi - math.pi / 2


@dataclass(frozen=True)
class ParameterPoint:
    chi: float
    theta_a0: float
    theta_a1: float
    theta_b0: float
    theta_b1: float
    tied: bool = False

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.vector(full=True)):
            raise InvalidArgumentError("parameter point has non-finite entries")

    @classmethod
    def from_theta(cls, chi: float, theta: float) -> ParameterPoint:
        """Tied point: A at theta and theta + pi/4, B at the mirrored angles."""
        return cls(chi, theta, theta + math.pi / 4, -theta, -(theta + math.pi / 4), tied=True)

    @classmethod
    def paper(cls) -> ParameterPoint:
        return cls.from_theta(GOLDEN_CHI, PAPER_THETA)

    @classmethod
    def from_vector(cls, v, tied: bool) -> ParameterPoint:
        if tied:
            return cls.from_theta(v[0], v[1])
        return cls(*(float(t) for t in v), tied=False)

    def vector(self, full: bool = False) -> np.ndarray:
        if self.tied and not full:
            return np.array([self.chi, self.theta_a0])
        return np.array([self.chi, self.theta_a0, self.theta_a1, self.theta_b0, self.theta_b1])

    @property
    def angles(self):
        return (self.theta_a0, self.theta_a1, self.theta_b0, self.theta_b1)

    def canonical(self) -> ParameterPoint:
        if self.tied:
            return ParameterPoint.from_theta(self.chi, _wrap_angle(self.theta_a0))
        return ParameterPoint(self.chi, *(_wrap_angle(t) for t in self.angles), tied=False)

    def degrees(self) -> dict:
        d = {"chi": math.degrees(self.chi)}
        for name, t in zip(("theta_a0", "theta_a1", "theta_b0", "theta_b1"), self.angles):
            d[name] = math.degrees(t)
        return d


@dataclass(frozen=True)
class ObjectiveSpec:
    visibility: float = 1.0
    objective: str = "penalized"
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if not 0.0 < self.visibility <= 1.0:
            raise InvalidArgumentError(f"visibility must be in (0, 1], got {self.visibility!r}")
        if self.objective not in ("penalized", "critical_ell"):
            raise InvalidArgumentError(f"unknown objective {self.objective!r}")
        if not self.kappa > 0:
            raise InvalidArgumentError("kappa must be positive")


def hardy_terms(point: ParameterPoint, visibility: float = 1.0):
    """(P0, S) for cos(chi)|00> + sin(chi)|11> under white noise.

    Closed form of the Born rule for real kets: the amplitude on
    |t_a>|t_b> is cos(chi) cos t_a cos t_b + sin(chi) sin t_a sin t_b.
    Outcome 1 is the ket rotated by pi/2.
    """
    c, s = math.cos(point.chi), math.sin(point.chi)
    a0, a1, b0, b1 = point.angles
    h = math.pi / 2

    def prob(ta, tb):
        amp = c * math.cos(ta) * math.cos(tb) + s * math.sin(ta) * math.sin(tb)
        p = visibility * amp * amp + (1.0 - visibility) / 4.0
        return 0.0 if abs(p) < ROUNDOFF else p  # same chop as born_table

    p0 = prob(a0, b0)  # P(00|00)
    s_sum = prob(a0, b1 + h) + prob(a1 + h, b0) + prob(a1, b1)  # P(01|01), P(10|10), P(00|11)
    return p0, s_sum


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    degenerate: bool


def objective_details(point: ParameterPoint, spec: ObjectiveSpec) -> ObjectiveValue:
    p0, s = hardy_terms(point, spec.visibility)
    if spec.objective == "penalized":
        return ObjectiveValue(-(p0 - spec.kappa * s), False)
    crit = critical_ell_from_terms(p0, s)
    if not crit.defined:
        return ObjectiveValue(DEGENERATE_SENTINEL, True)
    # roots at or above 1/4 exclude no valid ell; keep the root so the surface stays continuous
    return ObjectiveValue(crit.raw_root, crit.raw_root >= ELL_MAX)


def objective(point: ParameterPoint, spec: ObjectiveSpec) -> float:
    """Value to minimise: ell* or -(P0 - kappa S)."""
    return objective_details(point, spec).value


@dataclass
class SearchResult:
    best: ParameterPoint
    objective_value: float
    evaluations: int
    trace: list = field(default_factory=list)  # (start index, ParameterPoint, value) per start

    def to_dict(self) -> dict:
        return {
            "best": {"tied": self.best.tied, "radians": self.best.vector(full=True).tolist(),
                     "degrees": self.best.degrees()},
            "objective_value": self.objective_value,
            "evaluations": self.evaluations,
            "starts": [{"start": i, "degrees": p.degrees(), "value": v} for i, p, v in self.trace],
        }


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MDL_BELL_THREADS", "1")))
    except ValueError:
        return 1


def random_starts(tied: bool, n_starts: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    dim = 2 if tied else 5
    starts = []
    for _ in range(n_starts):
        v = np.empty(dim)
        v[0] = rng.uniform(*CHI_RANGE)
        v[1:] = rng.uniform(*ANGLE_RANGE, size=dim - 1)
        starts.append(v)
    return starts


def local_search(x0, spec: ObjectiveSpec, tied: bool):
    def f(v):
        return objective(ParameterPoint.from_vector(v, tied), spec)

    bounds = [CHI_RANGE] + [(-np.inf, np.inf)] * (len(x0) - 1)
    res = minimize(
        f, np.asarray(x0, dtype=float), method="Nelder-Mead", bounds=bounds,
        options={
            # every vertex within xatol of the best one -> diameter below 2 * xatol
            "xatol": SIMPLEX_DIAMETER_TOL / 2,
            "fatol": 1e-15,
            "maxfev": MAX_EVALUATIONS,
            "adaptive": False,
        },
    )
    point = ParameterPoint.from_vector(res.x, tied).canonical()
    return point, objective(point, spec), int(res.nfev)


def optimize(spec: ObjectiveSpec, tied: bool = True, n_starts: int = 32, seed: int = 0, starts=None) -> SearchResult:
    """Best local optimum over ``n_starts`` seeded starts (or explicit ``starts``)."""
    if starts is None:
        if n_starts < 1:
            raise InvalidArgumentError("n_starts must be at least 1")
        starts = random_starts(tied, n_starts, seed)
    else:
        starts = [p.vector() if isinstance(p, ParameterPoint) else np.asarray(p, dtype=float) for p in starts]

    def run(x0):
        return local_search(x0, spec, tied)

    workers = min(_threads(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]

    trace = [(i, p, v) for i, (p, v, _) in enumerate(results)]
    # strict < keeps the lowest start index on ties
    best_i = 0
    for i, (_, v, _) in enumerate(results):
        if v < results[best_i][1]:
            best_i = i
    best, value, _ = results[best_i]
    return SearchResult(best, value, sum(n for _, _, n in results), trace)
