"""Monte Carlo coincidence counts for the four-setting MDL measurement.

Each (x, y, a, b) cell receives Poisson counts with mean

    pair_rate * T * P(ab|xy) + accidental_rate * T

where P comes from the Schmidt state mixed with white noise. An independent
Poisson draw of accidental_rate * T is stored as the cell's noise figure,
which plays the role of the out-of-peak measurement.

Random streams: cell k = 8x + 4y + 2a + b uses numpy's PCG64 seeded with
SeedSequence([seed, k]), so each cell is reproducible on its own and the
result does not depend on evaluation order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mdl_bell.errors import InvalidArgumentError, ParseError
from mdl_bell.quantum_core import (
    GOLDEN_CHI,
    SettingsSet,
    born_table,
    mix_white_noise,
    paper_settings,
    schmidt_state,
)

FULL_HEADER = ["x", "y", "a", "b", "counts", "accidentals"]
CELLS = [(x, y, a, b) for x in (0, 1) for y in (0, 1) for a in (0, 1) for b in (0, 1)]


@dataclass(frozen=True)
class SourceModel:
    schmidt_angle: float = GOLDEN_CHI
    phase: float = 0.0
    visibility: float = 1.0
    pair_rate: float = 1000.0  # detected pairs per second per basis

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise InvalidArgumentError(f"visibility must be in [0, 1], got {self.visibility!r}")
        if not (self.pair_rate >= 0.0 and math.isfinite(self.pair_rate)):
            raise InvalidArgumentError(f"pair_rate must be finite and nonnegative, got {self.pair_rate!r}")
        if not (math.isfinite(self.schmidt_angle) and math.isfinite(self.phase)):
            raise InvalidArgumentError("source angles must be finite")

    def density(self):
        return mix_white_noise(schmidt_state(self.schmidt_angle, self.phase), self.visibility)


@dataclass(frozen=True)
class DetectionModel:
    accidental_rate: float = 0.0  # per second per projector pair
    integration_time: float = 30.0  # seconds

    def __post_init__(self):
        if not (self.accidental_rate >= 0.0 and math.isfinite(self.accidental_rate)):
            raise InvalidArgumentError(f"accidental_rate must be nonnegative, got {self.accidental_rate!r}")
        if not (self.integration_time >= 0.0 and math.isfinite(self.integration_time)):
            raise InvalidArgumentError(f"integration_time must be nonnegative, got {self.integration_time!r}")


@dataclass(frozen=True)
class CoincidenceRecord:
    x: int
    y: int
    a: int
    b: int
    counts: int
    accidentals: int

    def __post_init__(self):
        for name in ("x", "y", "a", "b"):
            if getattr(self, name) not in (0, 1):
                raise InvalidArgumentError(f"{name} must be 0 or 1")
        for name in ("counts", "accidentals"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise InvalidArgumentError(f"{name} must be a nonnegative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def cell(self):
        return (self.x, self.y, self.a, self.b)


@dataclass(frozen=True)
class ExperimentDataset:
    records: tuple
    integration_time: float
    seed: int | None = None
    format_tag: str = "full"

    def __post_init__(self):
        cells = sorted(r.cell for r in self.records)
        if self.format_tag == "full" and cells != CELLS:
            raise InvalidArgumentError("a full dataset needs exactly one record per (x, y, a, b)")
        object.__setattr__(self, "records", tuple(sorted(self.records, key=lambda r: r.cell)))

    def counts_array(self) -> np.ndarray:
        n = np.zeros((2, 2, 2, 2), dtype=np.int64)
        for r in self.records:
            n[r.cell] = r.counts
        return n

    def accidentals_array(self) -> np.ndarray:
        n = np.zeros((2, 2, 2, 2), dtype=np.int64)
        for r in self.records:
            n[r.cell] = r.accidentals
        return n

    @classmethod
    def from_arrays(cls, counts, accidentals, integration_time, seed=None) -> ExperimentDataset:
        counts = np.asarray(counts)
        accidentals = np.asarray(accidentals)
        records = tuple(
            CoincidenceRecord(*cell, int(counts[cell]), int(accidentals[cell])) for cell in CELLS
        )
        return cls(records, float(integration_time), seed, "full")


def cell_index(x, y, a, b) -> int:
    return 8 * x + 4 * y + 2 * a + b


def cell_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), index])))


def poisson_cells(means, seed: int) -> np.ndarray:
    """One Poisson deviate per entry of ``means``, entry k drawn from stream k."""
    means = np.asarray(means, dtype=float)
    flat = means.ravel()
    out = np.empty(flat.shape, dtype=np.int64)
    for k, mu in enumerate(flat):
        out[k] = cell_rng(seed, k).poisson(mu)
    return out.reshape(means.shape)


def expected_counts(src: SourceModel, det: DetectionModel, settings: SettingsSet | None = None) -> np.ndarray:
    """Mean counts mu[x, y, a, b] for one integration window per basis."""
    settings = settings or paper_settings()
    table = born_table(src.density(), settings)
    T = det.integration_time
    return src.pair_rate * T * table.p + det.accidental_rate * T


def simulate(src: SourceModel, det: DetectionModel, settings: SettingsSet | None = None, seed: int = 0) -> ExperimentDataset:
    mu = expected_counts(src, det, settings)
    mu_acc = det.accidental_rate * det.integration_time
    counts = np.zeros((2, 2, 2, 2), dtype=np.int64)
    accidentals = np.zeros((2, 2, 2, 2), dtype=np.int64)
    for cell in CELLS:
        rng = cell_rng(seed, cell_index(*cell))
        counts[cell] = rng.poisson(mu[cell])
        accidentals[cell] = rng.poisson(mu_acc)
    return ExperimentDataset.from_arrays(counts, accidentals, det.integration_time, seed)


def table1_scale_models() -> tuple[SourceModel, DetectionModel]:
    """Source and detector roughly matching the published coincidence table.

    About 3.5e4 coincidences and 270 accidentals per basis in 30 s; the
    visibility is set so the raw threshold lands near 0.09.
    """
    return (
        SourceModel(GOLDEN_CHI, 0.0, visibility=0.9935, pair_rate=35100.0 / 30.0),
        DetectionModel(accidental_rate=270.0 / 4.0 / 30.0, integration_time=30.0),
    )


# --- full-format CSV -------------------------------------------------------


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def full_csv_text(d: ExperimentDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FULL_HEADER)
    for r in d.records:
        w.writerow([r.x, r.y, r.a, r.b, r.counts, r.accidentals])
    return buf.getvalue()


def full_sidecar(d: ExperimentDataset) -> dict:
    return {"format": "full", "integration_time_s": d.integration_time, "seed": d.seed}


def write_full(d: ExperimentDataset, path) -> None:
    path = Path(path)
    path.write_text(full_csv_text(d))
    sidecar_path(path).write_text(json.dumps(full_sidecar(d), sort_keys=True, indent=2) + "\n")


def _int_field(row, field, lineno):
    try:
        v = int(row[field])
    except (KeyError, TypeError, ValueError):
        raise ParseError("expected an integer", row=lineno, field=field) from None
    if v < 0:
        raise ParseError("negative value", row=lineno, field=field)
    return v


def parse_full_rows(rows, integration_time=30.0, seed=None) -> ExperimentDataset:
    """Build a dataset from csv.DictReader rows of the full format."""
    seen = {}
    for lineno, row in enumerate(rows, start=2):
        idx = []
        for field in ("x", "y", "a", "b"):
            v = _int_field(row, field, lineno)
            if v not in (0, 1):
                raise ParseError("index must be 0 or 1", row=lineno, field=field)
            idx.append(v)
        cell = tuple(idx)
        if cell in seen:
            raise ParseError(f"duplicate cell {cell}", row=lineno)
        seen[cell] = CoincidenceRecord(*cell, _int_field(row, "counts", lineno), _int_field(row, "accidentals", lineno))
    missing = [c for c in CELLS if c not in seen]
    if missing:
        raise ParseError(f"missing cells {missing}")
    return ExperimentDataset(tuple(seen.values()), float(integration_time), seed, "full")


def read_full(path) -> ExperimentDataset:
    path = Path(path)
    meta = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text())
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FULL_HEADER:
            raise ParseError(f"expected header {','.join(FULL_HEADER)}", row=1)
        return parse_full_rows(reader, meta.get("integration_time_s", 30.0), meta.get("seed"))
