"""Raw/net probabilities, threshold ell with bootstrap errors, and reports.

A summary dataset keeps, for each setting pair (x, y), only the outcome cell
that enters the MDL inequality together with the basis total, and the
matching accidental counts:

    (x, y) = (0,0) -> (a, b) = (0,0)     (0,1) -> (0,1)
             (1,0) -> (1,0)              (1,1) -> (0,0)

Raw probability is selected / basis_total. Net probability subtracts the
accidentals from both: (selected - noise) / (basis_total - noise_total).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from mdl_bell.errors import DegenerateDataError, InvalidArgumentError, ParseError
from mdl_bell.experiment_sim import FULL_HEADER, ExperimentDataset, parse_full_rows, sidecar_path
from mdl_bell.mdl_inequality import (
    ELL_MAX,
    chsh_mdl_threshold,
    critical_ell_from_terms,
    min_detection_efficiency,
)
from mdl_bell.quantum_core import CorrelationTable

SCHEMA = "mdl-report/1"
SUMMARY_HEADER = [
    "x", "y", "a", "b",
    "selected_counts", "basis_total", "selected_accidentals", "accidental_total",
]
SELECTED_OUTCOME = {(0, 0): (0, 0), (0, 1): (0, 1), (1, 0): (1, 0), (1, 1): (0, 0)}
BASES = ((0, 0), (0, 1), (1, 0), (1, 1))
KINDS = ("raw", "net")
DEFAULT_BOOT = 10_000
DISCARD_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class SummaryRow:
    x: int
    y: int
    a: int
    b: int
    selected_counts: int
    basis_total: int
    selected_accidentals: int
    accidental_total: int

    def __post_init__(self):
        if SELECTED_OUTCOME.get((self.x, self.y)) != (self.a, self.b):
            raise InvalidArgumentError(
                f"basis ({self.x},{self.y}) must select outcome {SELECTED_OUTCOME.get((self.x, self.y))}"
            )
        for name in ("selected_counts", "basis_total", "selected_accidentals", "accidental_total"):
            if int(getattr(self, name)) < 0:
                raise InvalidArgumentError(f"{name} must be nonnegative")
        if self.selected_counts > self.basis_total:
            raise InvalidArgumentError("selected_counts exceeds basis_total")
        if self.selected_accidentals > self.accidental_total:
            raise InvalidArgumentError("selected_accidentals exceeds accidental_total")


@dataclass(frozen=True)
class SummaryDataset:
    rows: tuple
    integration_time: float = 30.0

    def __post_init__(self):
        rows = tuple(sorted(self.rows, key=lambda r: (r.x, r.y)))
        if [(r.x, r.y) for r in rows] != list(BASES):
            raise InvalidArgumentError("summary dataset needs exactly one row per setting pair")
        object.__setattr__(self, "rows", rows)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def row(self, x, y) -> SummaryRow:
        return self.rows[2 * x + y]

    @classmethod
    def from_full(cls, d: ExperimentDataset) -> SummaryDataset:
        counts, acc = d.counts_array(), d.accidentals_array()
        rows = []
        for x, y in BASES:
            a, b = SELECTED_OUTCOME[(x, y)]
            rows.append(SummaryRow(
                x, y, a, b,
                int(counts[x, y, a, b]), int(counts[x, y].sum()),
                int(acc[x, y, a, b]), int(acc[x, y].sum()),
            ))
        return cls(tuple(rows), d.integration_time)


@dataclass(frozen=True)
class ProbabilityEstimate:
    value: float
    std_error: float
    kind: str
    clamped: bool = False


@dataclass(frozen=True)
class EllEstimate:
    value: float | None
    std_error: float
    kind: str
    in_range: bool
    n_boot: int
    n_discarded: int
    warning: bool

    @property
    def excluded(self) -> str:
        return "none" if self.value is None else f"ell > {self.value:.4f}"


# --- point estimates and bootstrap -----------------------------------------


def _ratios(sel, tot, asel, atot, kind):
    """Vectorised probabilities over the last axis; returns (p, clamped, bad)."""
    if kind == "raw":
        num, den = sel, tot
    elif kind == "net":
        num, den = sel - asel, tot - atot
    else:
        raise InvalidArgumentError(f"kind must be 'raw' or 'net', got {kind!r}")
    bad = np.any(den <= 0, axis=-1)
    clamped = num < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(den > 0, np.clip(num, 0, None) / np.where(den > 0, den, 1), np.nan)
    return p, clamped, bad


def _columns(d: SummaryDataset):
    return (d.column("selected_counts"), d.column("basis_total"),
            d.column("selected_accidentals"), d.column("accidental_total"))


def _ell_from_probs(p):
    p0 = p[..., 0]
    s = p[..., 1:].sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return s / (p0 + 3.0 * s)


def point_probabilities(d: SummaryDataset, kind: str):
    p, clamped, bad = _ratios(*_columns(d), kind)
    if bad:
        raise DegenerateDataError(f"nonpositive {kind} basis total")
    return p, clamped


def resample(d: SummaryDataset, n_boot: int, seed: int):
    """Parametric Poisson resamples, each array shaped (n_boot, 4).

    Selected cells and the rest of each basis are redrawn separately so that
    a resampled total always contains its resampled selected count.
    """
    sel, tot, asel, atot = _columns(d)
    streams = np.random.SeedSequence([int(seed) & (2**64 - 1), 0xB0]).spawn(4)
    gens = [np.random.Generator(np.random.PCG64(s)) for s in streams]
    shape = (n_boot, 4)
    s_sel = gens[0].poisson(sel, shape).astype(float)
    s_rest = gens[1].poisson(tot - sel, shape).astype(float)
    a_sel = gens[2].poisson(asel, shape).astype(float)
    a_rest = gens[3].poisson(atot - asel, shape).astype(float)
    return s_sel, s_sel + s_rest, a_sel, a_sel + a_rest


@dataclass(frozen=True)
class BootstrapResult:
    kind: str
    probs: np.ndarray  # (n_ok, 4)
    ells: np.ndarray  # (n_ok,)
    n_boot: int
    n_discarded: int


def bootstrap(d: SummaryDataset, kind: str, n_boot: int = DEFAULT_BOOT, seed: int = 0) -> BootstrapResult:
    if n_boot < 1:
        raise InvalidArgumentError("n_boot must be positive")
    p, _, bad = _ratios(*resample(d, n_boot, seed), kind)
    ells = _ell_from_probs(p)
    ok = ~bad & np.isfinite(ells)
    return BootstrapResult(kind, p[ok], ells[ok], n_boot, int(n_boot - ok.sum()))


def _std(values):
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def probabilities(d: SummaryDataset, kind: str, n_boot: int = DEFAULT_BOOT, seed: int = 0, boot=None):
    """Four estimates in basis order (0,0), (0,1), (1,0), (1,1)."""
    p, clamped = point_probabilities(d, kind)
    boot = boot or bootstrap(d, kind, n_boot, seed)
    return [
        ProbabilityEstimate(float(p[i]), _std(boot.probs[:, i]), kind, bool(clamped[i]))
        for i in range(4)
    ]


def correlation_table(d: SummaryDataset, kind: str) -> CorrelationTable:
    """Table carrying the four measured cells; other outcomes share the rest evenly."""
    p, _ = point_probabilities(d, kind)
    return CorrelationTable.from_hardy_terms(*p)


def critical_ell_with_error(d: SummaryDataset, kind: str, n_boot: int = DEFAULT_BOOT, seed: int = 0, boot=None) -> EllEstimate:
    p, _ = point_probabilities(d, kind)
    crit = critical_ell_from_terms(float(p[0]), float(p[1:].sum()))
    if not crit.defined:
        raise DegenerateDataError(f"{kind} data carry no information about ell")
    boot = boot or bootstrap(d, kind, n_boot, seed)
    return EllEstimate(
        value=crit.value,
        std_error=_std(boot.ells),
        kind=kind,
        in_range=crit.in_range,
        n_boot=boot.n_boot,
        n_discarded=boot.n_discarded,
        warning=boot.n_discarded > DISCARD_WARN_FRACTION * boot.n_boot,
    )


# --- report ------------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisReport:
    probabilities: dict  # kind -> list of ProbabilityEstimate
    ell: dict  # kind -> EllEstimate
    eta_min: dict  # kind -> float
    chsh_mdl_threshold: float
    n_boot: int
    seed: int

    @property
    def ell_raw(self):
        return self.ell["raw"]

    @property
    def ell_net(self):
        return self.ell["net"]

    def to_dict(self) -> dict:
        labels = ["P(00|00)", "P(01|01)", "P(10|10)", "P(00|11)"]
        return {
            "schema": SCHEMA,
            "bootstrap": {"n_boot": self.n_boot, "seed": self.seed},
            "probabilities": {
                kind: {lab: asdict(est) for lab, est in zip(labels, ests)}
                for kind, ests in self.probabilities.items()
            },
            "ell": {kind: asdict(est) for kind, est in self.ell.items()},
            "eta_min": dict(self.eta_min),
            "chsh_mdl_threshold": self.chsh_mdl_threshold,
            "excludes_more_than_chsh": {
                kind: est.value is not None and est.value < self.chsh_mdl_threshold
                for kind, est in self.ell.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def report(d: SummaryDataset, n_boot: int = DEFAULT_BOOT, seed: int = 0) -> AnalysisReport:
    if d is None or sum(r.basis_total for r in d.rows) == 0:
        raise DegenerateDataError("dataset is empty")
    probs, ells, etas = {}, {}, {}
    for kind in KINDS:
        boot = bootstrap(d, kind, n_boot, seed)
        probs[kind] = probabilities(d, kind, boot=boot)
        ells[kind] = critical_ell_with_error(d, kind, boot=boot)
        etas[kind] = min_detection_efficiency(min(ells[kind].value, ELL_MAX))
    return AnalysisReport(probs, ells, etas, chsh_mdl_threshold(), n_boot, seed)


# --- files -------------------------------------------------------------------


def summary_csv_text(d: SummaryDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for r in d.rows:
        w.writerow([getattr(r, f) for f in SUMMARY_HEADER])
    return buf.getvalue()


def write_summary(d: SummaryDataset, path) -> None:
    path = Path(path)
    path.write_text(summary_csv_text(d))
    meta = {"format": "summary", "integration_time_s": d.integration_time}
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def _parse_summary_rows(rows, integration_time) -> SummaryDataset:
    parsed = []
    for lineno, row in enumerate(rows, start=2):
        values = {}
        for field in SUMMARY_HEADER:
            raw = row.get(field)
            try:
                values[field] = int(raw)
            except (TypeError, ValueError):
                raise ParseError("expected an integer", row=lineno, field=field) from None
            if values[field] < 0:
                raise ParseError("negative value", row=lineno, field=field)
        if values["selected_counts"] > values["basis_total"]:
            raise ParseError("selected_counts exceeds basis_total", row=lineno, field="selected_counts")
        if values["selected_accidentals"] > values["accidental_total"]:
            raise ParseError("selected_accidentals exceeds accidental_total", row=lineno, field="selected_accidentals")
        try:
            parsed.append(SummaryRow(**values))
        except InvalidArgumentError as exc:
            raise ParseError(str(exc), row=lineno, field="a") from None
    if sorted((r.x, r.y) for r in parsed) != list(BASES):
        raise ParseError("summary file needs exactly one row per setting pair (x, y)")
    return SummaryDataset(tuple(parsed), float(integration_time))


def ingest(source, format: str | None = None) -> SummaryDataset:
    """Load a full or summary CSV from a path or text stream.

    The format is read from the header when not given. A JSON sidecar next
    to a file path supplies the integration time.
    """
    meta = {}
    if isinstance(source, (str, Path)):
        path = Path(source)
        if sidecar_path(path).exists():
            meta = json.loads(sidecar_path(path).read_text())
        text = path.read_text()
    else:
        text = source.read()
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    detected = "full" if header == FULL_HEADER else "summary" if header == SUMMARY_HEADER else None
    if detected is None:
        raise ParseError(f"unrecognised header {','.join(header)!r}", row=1)
    if format is not None and format != detected:
        raise ParseError(f"header is {detected} format but {format} was requested", row=1)
    t = meta.get("integration_time_s", 30.0)
    if detected == "full":
        return SummaryDataset.from_full(parse_full_rows(reader, t, meta.get("seed")))
    return _parse_summary_rows(reader, t)


def table1_path() -> Path:
    return Path(str(resources.files("mdl_bell") / "data" / "table1_summary.csv"))


def load_table1() -> SummaryDataset:
    return ingest(table1_path())


def scale_basis(d: SummaryDataset, factor: int) -> SummaryDataset:
    """Every count multiplied by an integer factor (more statistics, same ratios)."""
    if factor < 1 or int(factor) != factor:
        raise InvalidArgumentError("factor must be a positive integer")
    rows = [
        SummaryRow(r.x, r.y, r.a, r.b, r.selected_counts * factor, r.basis_total * factor,
                   r.selected_accidentals * factor, r.accidental_total * factor)
        for r in d.rows
    ]
    return SummaryDataset(tuple(rows), d.integration_time * factor)


def summary_from_expected(mu, mu_acc: float, integration_time: float = 30.0) -> dict:
    """Expected raw/net inequality cells for mean counts mu[x, y, a, b]."""
    out = {}
    for kind in KINDS:
        cells = []
        for x, y in BASES:
            a, b = SELECTED_OUTCOME[(x, y)]
            if kind == "raw":
                cells.append(mu[x, y, a, b] / mu[x, y].sum())
            else:
                cells.append((mu[x, y, a, b] - mu_acc) / (mu[x, y].sum() - 4 * mu_acc))
        out[kind] = critical_ell_from_terms(cells[0], sum(cells[1:])).value
    return out

