"""Two-qubit states, projective settings and Born-rule correlation tables.

Conventions: computational basis |0> = V, |1> = H polarisation; amplitudes are
ordered (|00>, |01>, |10>, |11>) with Alice the first tensor factor. A setting
at angle t measures outcome 0 on cos t|0> + sin t|1> and outcome 1 on the
orthogonal ket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mdl_bell.errors import InvalidArgumentError, InvalidStateError

TWO_PI = 2.0 * math.pi
ALGEBRAIC_TOL = 1e-9
# Born probabilities closer than this to 0 are round-off and reported as 0
ROUNDOFF = 1e-14

# cos of the Schmidt angle of the golden-ratio state: (sqrt5 + 1) / (2 sqrt3)
GOLDEN_COS = (math.sqrt(5.0) + 1.0) / (2.0 * math.sqrt(3.0))
GOLDEN_SIN = (math.sqrt(5.0) - 1.0) / (2.0 * math.sqrt(3.0))
GOLDEN_CHI = math.atan2(GOLDEN_SIN, GOLDEN_COS)
PAPER_THETA = math.acos(math.sqrt(0.5 - 1.0 / math.sqrt(5.0)))


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PureState2Q:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise InvalidStateError(f"expected 4 amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("amplitudes must be finite")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > ALGEBRAIC_TOL:
            raise InvalidStateError(f"squared norm is {norm2!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    def density(self) -> DensityMatrix2Q:
        return DensityMatrix2Q(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix2Q:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise InvalidStateError(f"expected a 4x4 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidStateError("matrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > ALGEBRAIC_TOL:
            raise InvalidStateError("matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > ALGEBRAIC_TOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(m).min()
        if lo < -ALGEBRAIC_TOL:
            raise InvalidStateError(f"matrix has negative eigenvalue {lo:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def maximally_mixed(cls) -> DensityMatrix2Q:
        return cls(np.eye(4) / 4.0)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def as_density(state) -> DensityMatrix2Q:
    """Promote a pure state (or a raw 4x4 array) to a validated density matrix."""
    if isinstance(state, DensityMatrix2Q):
        return state
    if isinstance(state, PureState2Q):
        return state.density()
    arr = np.asarray(state)
    if arr.shape == (4,):
        return PureState2Q(arr).density()
    return DensityMatrix2Q(arr)


@dataclass(frozen=True)
class MeasurementSetting:
    angle: float
    party: str
    input_index: int

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise InvalidArgumentError("setting angle must be finite")
        if self.party not in ("A", "B"):
            raise InvalidArgumentError(f"party must be 'A' or 'B', got {self.party!r}")
        if self.input_index not in (0, 1):
            raise InvalidArgumentError("input_index must be 0 or 1")
        object.__setattr__(self, "angle", float(self.angle) % TWO_PI)

    @property
    def signed_angle(self) -> float:
        """The angle mapped into (-pi, pi]."""
        a = self.angle
        return a - TWO_PI if a > math.pi else a

    def ket(self) -> np.ndarray:
        return ket_from_angle(self.angle)

    def projector(self, outcome: int) -> np.ndarray:
        k = self.ket() if outcome == 0 else ket_from_angle(self.angle + math.pi / 2)
        return np.outer(k, k)


@dataclass(frozen=True)
class SettingsSet:
    a0: MeasurementSetting
    a1: MeasurementSetting
    b0: MeasurementSetting
    b1: MeasurementSetting

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1"):
            s = getattr(self, name)
            if s.party != name[0].upper() or s.input_index != int(name[1]):
                raise InvalidArgumentError(f"setting {name} has party {s.party}, input {s.input_index}")

    @classmethod
    def from_angles(cls, a0, a1, b0, b1) -> SettingsSet:
        return cls(
            MeasurementSetting(a0, "A", 0),
            MeasurementSetting(a1, "A", 1),
            MeasurementSetting(b0, "B", 0),
            MeasurementSetting(b1, "B", 1),
        )

    @property
    def alice(self):
        return (self.a0, self.a1)

    @property
    def bob(self):
        return (self.b0, self.b1)

    def angles(self) -> tuple[float, float, float, float]:
        return (self.a0.angle, self.a1.angle, self.b0.angle, self.b1.angle)


@dataclass(frozen=True)
class CorrelationTable:
    """Conditional probabilities P(ab|xy), indexed p[x, y, a, b]."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2, 2, 2, 2):
            raise InvalidArgumentError(f"correlation table must have shape (2,2,2,2), got {p.shape}")
        if np.any(p < -ALGEBRAIC_TOL) or np.any(p > 1 + ALGEBRAIC_TOL):
            raise InvalidArgumentError("probabilities must lie in [0, 1]")
        sums = p.sum(axis=(2, 3))
        if np.max(np.abs(sums - 1.0)) > ALGEBRAIC_TOL:
            raise InvalidArgumentError(f"each (x, y) slice must sum to 1, got {sums.tolist()}")
        object.__setattr__(self, "p", _frozen(np.clip(p, 0.0, 1.0)))

    def __getitem__(self, index):
        return self.p[index]

    @property
    def hardy_terms(self) -> tuple[float, float, float, float]:
        """(P(00|00), P(01|01), P(10|10), P(00|11))."""
        p = self.p
        return (float(p[0, 0, 0, 0]), float(p[0, 1, 0, 1]), float(p[1, 0, 1, 0]), float(p[1, 1, 0, 0]))

    @classmethod
    def from_hardy_terms(cls, p0, p01, p10, p11) -> CorrelationTable:
        """Table whose four inequality cells are given; each slice's remaining
        mass is spread evenly over its other three outcomes."""
        p = np.zeros((2, 2, 2, 2))
        cells = {(0, 0): ((0, 0), p0), (0, 1): ((0, 1), p01), (1, 0): ((1, 0), p10), (1, 1): ((0, 0), p11)}
        for (x, y), ((a, b), value) in cells.items():
            p[x, y] = (1.0 - value) / 3.0
            p[x, y, a, b] = value
        return cls(p)


def ket_from_angle(theta: float) -> np.ndarray:
    if not math.isfinite(theta):
        raise InvalidArgumentError(f"angle must be finite, got {theta!r}")
    return np.array([math.cos(theta), math.sin(theta)])


def schmidt_state(chi: float, phase: float = 0.0) -> PureState2Q:
    """cos(chi)|00> + exp(i phase) sin(chi)|11>."""
    return PureState2Q([math.cos(chi), 0.0, 0.0, np.exp(1j * phase) * math.sin(chi)])


def golden_state() -> PureState2Q:
    return PureState2Q([GOLDEN_COS, 0.0, 0.0, GOLDEN_SIN])


def paper_settings() -> SettingsSet:
    """Settings that put the golden state on the Hardy point.

    Alice measures at theta and theta + pi/4, Bob at the mirrored angles
    -theta and -(theta + pi/4), with theta = acos sqrt(1/2 - 1/sqrt5).
    """
    return tied_settings(PAPER_THETA)


def tied_settings(theta: float) -> SettingsSet:
    return SettingsSet.from_angles(theta, theta + math.pi / 4, -theta, -(theta + math.pi / 4))


def _local_projectors(settings: SettingsSet):
    # [party][input][outcome] -> 2x2 projector
    return [[[s.projector(o) for o in (0, 1)] for s in side] for side in (settings.alice, settings.bob)]


def born_table(state, settings: SettingsSet) -> CorrelationTable:
    rho = as_density(state).matrix
    proj = _local_projectors(settings)
    p = np.empty((2, 2, 2, 2))
    for x in (0, 1):
        for y in (0, 1):
            for a in (0, 1):
                for b in (0, 1):
                    op = np.kron(proj[0][x][a], proj[1][y][b])
                    p[x, y, a, b] = np.trace(rho @ op).real
    p[np.abs(p) < ROUNDOFF] = 0.0
    return CorrelationTable(p)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Computed as the squared trace norm of sqrt(rho) sqrt(sigma); singular
    values avoid square roots of round-off eigenvalues near zero.
    """
    r = as_density(rho).matrix
    s = as_density(sigma).matrix
    f = float(np.sum(np.linalg.svd(_psd_sqrt(r) @ _psd_sqrt(s), compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


def mix_white_noise(rho, visibility: float) -> DensityMatrix2Q:
    if not 0.0 <= visibility <= 1.0:
        raise InvalidArgumentError(f"visibility must be in [0, 1], got {visibility!r}")
    m = as_density(rho).matrix
    return DensityMatrix2Q(visibility * m + (1.0 - visibility) * np.eye(4) / 4.0)
