"""Two-qubit state tomography from 16 product projectors.

Linear inversion solves Tr(Pi_k H) = n_k / N for a trace-one Hermitian H in
least squares; the result is then made physical by eigenvalue redistribution
(no maximum-likelihood iteration).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mdl_bell.errors import DegenerateDataError, InvalidArgumentError, InvalidProtocolError, ParseError
from mdl_bell.experiment_sim import poisson_cells, sidecar_path
from mdl_bell.quantum_core import DensityMatrix2Q, as_density, fidelity

PROTOCOL_NAME = "james16"
TOMO_HEADER = ["proj_index", "counts"]

_S = 1.0 / math.sqrt(2.0)
SINGLE_QUBIT_STATES = (
    np.array([1.0, 0.0], dtype=complex),  # |0> (V)
    np.array([0.0, 1.0], dtype=complex),  # |1> (H)
    np.array([_S, _S], dtype=complex),  # diagonal
    np.array([_S, 1j * _S], dtype=complex),  # circular
)

# Pauli-product basis for 4x4 Hermitian matrices, sigma_i (x) sigma_j
_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
PAULI_BASIS = tuple(np.kron(a, b) for a, b in itertools.product(_PAULI, repeat=2))


@dataclass(frozen=True)
class TomographyProtocol:
    projector_pairs: tuple

    def __post_init__(self):
        pairs = tuple((np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)) for a, b in self.projector_pairs)
        if len(pairs) != 16:
            raise InvalidProtocolError(f"expected 16 projector pairs, got {len(pairs)}")
        for k, (a, b) in enumerate(pairs):
            for v in (a, b):
                if v.shape != (2,) or abs(np.vdot(v, v).real - 1.0) > 1e-9:
                    raise InvalidProtocolError(f"projector pair {k} holds a non-normalised state")
        object.__setattr__(self, "projector_pairs", pairs)
        if np.linalg.matrix_rank(self.design_matrix()) != 16:
            raise InvalidProtocolError("projectors are not informationally complete")

    def projectors(self) -> list[np.ndarray]:
        out = []
        for a, b in self.projector_pairs:
            psi = np.kron(a, b)
            out.append(np.outer(psi, psi.conj()))
        return out

    def design_matrix(self) -> np.ndarray:
        """Row k holds Tr(Pi_k B_j) for the 16 Pauli products B_j (real)."""
        return np.array([[np.trace(P @ B).real for B in PAULI_BASIS] for P in self.projectors()])

    def computational_indices(self) -> list[int]:
        """Indices of the four projectors forming the computational basis."""
        comp = []
        for k, (a, b) in enumerate(self.projector_pairs):
            if _is_basis_vector(a) and _is_basis_vector(b):
                comp.append(k)
        return comp


def _is_basis_vector(v):
    return np.isclose(abs(v[0]), 1.0) or np.isclose(abs(v[1]), 1.0)


@dataclass(frozen=True)
class TomographyData:
    counts: tuple
    total_flux: float | None = None

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 16:
            raise InvalidArgumentError(f"expected 16 counts, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise InvalidArgumentError("counts must be nonnegative")
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class ReconstructionResult:
    rho: DensityMatrix2Q
    pre_projection_min_eigenvalue: float
    fidelity_to_target: float | None = None

    def to_dict(self) -> dict:
        m = self.rho.matrix
        return {
            "rho_real": np.round(m.real, 12).tolist(),
            "rho_imag": np.round(m.imag, 12).tolist(),
            "pre_projection_min_eigenvalue": self.pre_projection_min_eigenvalue,
            "fidelity_to_target": self.fidelity_to_target,
        }


def standard_protocol() -> TomographyProtocol:
    """All 16 pairs over {|0>, |1>, diagonal, circular}, Alice's index slowest."""
    return TomographyProtocol(tuple(itertools.product(SINGLE_QUBIT_STATES, repeat=2)))


def flux_estimate(protocol: TomographyProtocol, data: TomographyData) -> float:
    if data.total_flux is not None:
        return float(data.total_flux)
    if sum(data.counts) == 0:
        raise DegenerateDataError("all tomography counts are zero")
    n = float(sum(data.counts[k] for k in protocol.computational_indices()))
    if n <= 0:
        raise DegenerateDataError("no counts in the computational-basis projectors")
    return n


def linear_inversion(protocol: TomographyProtocol, data: TomographyData) -> np.ndarray:
    """Trace-one Hermitian least-squares estimate; may be unphysical."""
    n_hat = flux_estimate(protocol, data)
    freqs = np.asarray(data.counts, dtype=float) / n_hat
    A = protocol.design_matrix()
    # rho = sum_j r_j B_j / 4 with r_0 = 1 fixing the trace
    rhs = freqs - A[:, 0] / 4.0
    r, *_ = np.linalg.lstsq(A[:, 1:] / 4.0, rhs, rcond=None)
    coeffs = np.concatenate(([1.0], r))
    H = sum(c * B for c, B in zip(coeffs, PAULI_BASIS)) / 4.0
    return 0.5 * (H + H.conj().T)


def project_to_physical(H) -> DensityMatrix2Q:
    """Zero negative eigenvalues one at a time, spreading each deficit evenly
    over the eigenvalues still positive; trace is preserved."""
    H = np.asarray(H, dtype=complex)
    H = 0.5 * (H + H.conj().T)
    w, v = np.linalg.eigh(H)
    w = w / w.sum()
    order = np.argsort(w)  # ascending
    lam = w[order].copy()
    active = np.ones(len(lam), dtype=bool)
    while True:
        neg = np.where(active & (lam < 0))[0]
        if len(neg) == 0:
            break
        i = neg[np.argmin(lam[neg])]
        deficit = lam[i]
        lam[i] = 0.0
        active[i] = False
        rest = active & (lam > 0)
        if not rest.any():
            break
        lam[rest] += deficit / rest.sum()
    lam = np.clip(lam, 0.0, None)
    lam /= lam.sum()
    w_out = np.empty_like(lam)
    w_out[order] = lam
    rho = (v * w_out) @ v.conj().T
    return DensityMatrix2Q(0.5 * (rho + rho.conj().T))


def reconstruct(protocol: TomographyProtocol, data: TomographyData, target=None) -> ReconstructionResult:
    H = linear_inversion(protocol, data)
    min_eig = float(np.linalg.eigvalsh(H).min())
    rho = project_to_physical(H)
    f = fidelity(rho, target) if target is not None else None
    return ReconstructionResult(rho, min_eig, f)


def expected_counts(rho, protocol: TomographyProtocol, flux: float) -> np.ndarray:
    m = as_density(rho).matrix
    return np.array([flux * np.trace(m @ P).real for P in protocol.projectors()])


def simulate_counts(rho, protocol: TomographyProtocol, total_counts: float, seed: int) -> TomographyData:
    """Poisson counts, with ``total_counts`` spread over the 16 settings.

    Each setting receives flux = total_counts / 4 (four projectors of a
    product basis sum to the identity), so the expected grand total is
    total_counts.
    """
    mu = np.clip(expected_counts(rho, protocol, total_counts / 4.0), 0.0, None)
    return TomographyData(tuple(int(c) for c in poisson_cells(mu, seed)))


# --- files -------------------------------------------------------------------


def tomo_csv_text(data: TomographyData) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TOMO_HEADER)
    for k, c in enumerate(data.counts):
        w.writerow([k, c])
    return buf.getvalue()


def write_tomography(data: TomographyData, path) -> None:
    path = Path(path)
    path.write_text(tomo_csv_text(data))
    meta = {"protocol": PROTOCOL_NAME}
    if data.total_flux is not None:
        meta["total_flux"] = data.total_flux
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def read_tomography(path) -> TomographyData:
    path = Path(path)
    meta = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text())
        if meta.get("protocol", PROTOCOL_NAME) != PROTOCOL_NAME:
            raise ParseError(f"unsupported protocol {meta.get('protocol')!r}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TOMO_HEADER:
            raise ParseError("expected header proj_index,counts", row=1)
        counts = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                k, c = int(row["proj_index"]), int(row["counts"])
            except (TypeError, ValueError):
                raise ParseError("expected integers", row=lineno) from None
            if not 0 <= k < 16 or k in counts:
                raise ParseError(f"bad or duplicate projector index {k}", row=lineno, field="proj_index")
            if c < 0:
                raise ParseError("negative count", row=lineno, field="counts")
            counts[k] = c
    if len(counts) != 16:
        raise ParseError(f"expected 16 rows, got {len(counts)}")
    return TomographyData(tuple(counts[k] for k in range(16)), meta.get("total_flux"))
