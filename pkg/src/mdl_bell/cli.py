"""Command-line entry point: ``mdl-bell <subcommand>``.

Exit codes: 0 success, 1 domain error (degenerate data, unphysical input),
2 usage error. Angles always carry a unit suffix, e.g. ``76.7deg`` or
``1.339rad``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from mdl_bell import analysis, experiment_sim, mdl_inequality, mdl_oracle, optimizer, tomography
from mdl_bell.errors import MDLError
from mdl_bell.quantum_core import (
    GOLDEN_CHI,
    SettingsSet,
    born_table,
    golden_state,
    mix_white_noise,
    paper_settings,
    schmidt_state,
    tied_settings,
)


def angle(text: str) -> float:
    """Parse '<number>deg' or '<number>rad' into radians."""
    t = text.strip().lower()
    for suffix, scale in (("deg", math.pi / 180.0), ("rad", 1.0)):
        if t.endswith(suffix):
            try:
                value = float(t[: -len(suffix)])
            except ValueError:
                break
            if not math.isfinite(value):
                break
            return value * scale
    raise argparse.ArgumentTypeError(f"invalid angle {text!r}: use a number with a 'deg' or 'rad' suffix")


def unit_interval(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1]: {text!r}")
    return v


def seed_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer: {text!r}") from None
    if not -(2**63) <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def nonnegative_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be finite and nonnegative: {text!r}")
    return v


def _emit(text: str, output) -> None:
    if output is None or str(output) == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- predict -------------------------------------------------------------------


def _settings_from_args(args) -> SettingsSet:
    if args.paper_settings:
        return paper_settings()
    if args.theta is not None:
        return tied_settings(args.theta)
    return SettingsSet.from_angles(*args.angles)


def cmd_predict(args) -> int:
    state = golden_state() if args.golden else schmidt_state(args.chi, args.phase)
    rho = mix_white_noise(state, args.visibility)
    settings = _settings_from_args(args)
    table = born_table(rho, settings)
    crit = mdl_inequality.critical_ell(table)
    cells = {
        f"P({a}{b}|{x}{y})": float(table.p[x, y, a, b])
        for x, y, a, b in np.ndindex(2, 2, 2, 2)
    }
    p0, p01, p10, p11 = table.hardy_terms
    out = {
        "settings_deg": [math.degrees(s.signed_angle) for s in (settings.a0, settings.a1, settings.b0, settings.b1)],
        "table": cells,
        "inequality_terms": {"P(00|00)": p0, "P(01|01)": p01, "P(10|10)": p10, "P(00|11)": p11},
        "critical_ell": crit.value,
        "critical_ell_in_range": crit.in_range,
        "chsh_value": mdl_inequality.chsh_value(table),
        "chsh_mdl_threshold": mdl_inequality.chsh_mdl_threshold(),
    }
    _emit(_dump(out), args.output)
    return 0


# --- simulate -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.table1_scale:
        src, det = experiment_sim.table1_scale_models()
    else:
        T = args.time
        if T <= 0:
            raise MDLError("integration time must be positive")
        src = experiment_sim.SourceModel(args.chi, args.phase, args.visibility, args.pairs / T)
        det = experiment_sim.DetectionModel(args.accidentals / T, T)
    d = experiment_sim.simulate(src, det, paper_settings(), args.seed)
    if args.output is None or str(args.output) == "-":
        sys.stdout.write(experiment_sim.full_csv_text(d))
    else:
        experiment_sim.write_full(d, args.output)
    return 0


# --- analyze ------------------------------------------------------------------


def cmd_analyze(args) -> int:
    if args.table1:
        d = analysis.load_table1()
    elif args.stdin:
        d = analysis.ingest(sys.stdin, args.format)
    else:
        d = analysis.ingest(args.input, args.format)
    rep = analysis.report(d, args.boot, args.seed)
    _emit(rep.to_json(), args.output)
    return 0


# --- oracle -------------------------------------------------------------------


def _ideal_joint_value(ell):
    table = born_table(golden_state(), paper_settings())
    j = mdl_inequality.JointDistribution.from_conditional(table)
    return mdl_inequality.evaluate(mdl_inequality.eq4_functional(ell), j)


def cmd_oracle(args) -> int:
    if args.functional == "eq4":
        build = mdl_inequality.eq4_functional
    else:
        build = lambda _ell: mdl_inequality.chsh_functional()  # noqa: E731
    out = {"functional": args.functional}
    if args.ell is not None:
        ell = mdl_inequality.MDLParameter(args.ell).ell
        values = mdl_oracle.vertex_values(build(ell), ell)
        best, vertex = mdl_oracle.maximize(build(ell), ell)
        out.update({"ell": ell, "n_vertices": int(len(values)), "max": best, "argmax": vertex.describe()})
    if args.threshold:
        if args.functional == "chsh":
            qv = lambda _ell: math.sqrt(2.0) / 2.0  # noqa: E731
        else:
            qv = _ideal_joint_value
        out["threshold"] = mdl_oracle.threshold(build, qv)
        out["chsh_mdl_threshold_closed_form"] = mdl_inequality.chsh_mdl_threshold()
    _emit(_dump(out), args.output)
    return 0


# --- tomo ---------------------------------------------------------------------


def cmd_tomo(args) -> int:
    protocol = tomography.standard_protocol()
    if args.input is not None:
        data = tomography.read_tomography(args.input)
    else:
        if args.seed is None:
            raise _UsageError("--simulate requires --seed")
        rho = mix_white_noise(schmidt_state(args.chi), args.visibility)
        data = tomography.simulate_counts(rho, protocol, args.counts, args.seed)
        if args.write_counts is not None:
            tomography.write_tomography(data, args.write_counts)
    result = tomography.reconstruct(protocol, data, golden_state() if args.target == "golden" else None)
    out = {"protocol": tomography.PROTOCOL_NAME, "counts": list(data.counts), **result.to_dict()}
    _emit(_dump(out), args.output)
    return 0


# --- optimize -----------------------------------------------------------------


def cmd_optimize(args) -> int:
    spec = optimizer.ObjectiveSpec(args.visibility, args.objective.replace("-", "_"), args.kappa)
    res = optimizer.optimize(spec, tied=not args.untied, n_starts=args.starts, seed=args.seed)
    out = {"objective": spec.objective, "visibility": spec.visibility, "kappa": spec.kappa,
           "seed": args.seed, "n_starts": args.starts, **res.to_dict()}
    _emit(_dump(out), args.output)
    return 0


# --- parser -------------------------------------------------------------------


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdl-bell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="Born-rule table, inequality terms and critical ell")
    state = p.add_mutually_exclusive_group(required=True)
    state.add_argument("--golden", action="store_true", help="golden-ratio Schmidt state")
    state.add_argument("--chi", type=angle, help="Schmidt angle of cos(chi)|00> + e^{i phase} sin(chi)|11>")
    p.add_argument("--phase", type=angle, default=0.0, help="relative phase (default 0rad)")
    p.add_argument("--visibility", type=unit_interval, default=1.0, help="white-noise visibility (default 1)")
    settings = p.add_mutually_exclusive_group(required=True)
    settings.add_argument("--paper-settings", action="store_true", help="theta = acos sqrt(1/2 - 1/sqrt5)")
    settings.add_argument("--theta", type=angle, help="tied settings built from one angle")
    settings.add_argument("--angles", type=angle, nargs=4, metavar=("A0", "A1", "B0", "B1"))
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="Poisson coincidence counts (full CSV)")
    p.add_argument("--seed", type=seed_int, required=True)
    p.add_argument("--table1-scale", action="store_true", help="preset matching the published count levels")
    p.add_argument("--chi", type=angle, default=GOLDEN_CHI, help="Schmidt angle (default golden)")
    p.add_argument("--phase", type=angle, default=0.0)
    p.add_argument("--visibility", type=unit_interval, default=1.0)
    p.add_argument("--pairs", type=nonnegative_float, default=35000.0, help="expected pairs per basis per window")
    p.add_argument("--accidentals", type=nonnegative_float, default=0.0,
                   help="expected accidentals per projector pair per window")
    p.add_argument("--time", type=nonnegative_float, default=30.0, help="integration time in seconds")
    p.add_argument("--output", help="CSV path (a .json sidecar is written next to it); stdout if omitted")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="raw/net probabilities and excluded ell with bootstrap errors")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="full or summary CSV")
    src.add_argument("--stdin", action="store_true", help="read CSV from standard input")
    src.add_argument("--table1", action="store_true", help="bundled published table")
    p.add_argument("--format", choices=("full", "summary"), help="expected format (default: from header)")
    p.add_argument("--boot", type=positive_int, default=analysis.DEFAULT_BOOT, help="bootstrap resamples")
    p.add_argument("--seed", type=seed_int, required=True)
    p.add_argument("--output", help="write JSON report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="maximise a functional over the 64 l-MDL vertices")
    p.add_argument("--functional", choices=("eq4", "chsh"), required=True)
    p.add_argument("--ell", type=float, help="measurement-dependence parameter in [0, 1/4]")
    p.add_argument("--threshold", action="store_true", help="bisect for the ell where quantum beats the bound")
    p.add_argument("--output")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("tomo", help="linear-inversion tomography with fidelity to the golden state")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="tomography CSV (proj_index,counts)")
    src.add_argument("--simulate", action="store_true", help="simulate counts instead of reading them")
    p.add_argument("--seed", type=seed_int)
    p.add_argument("--chi", type=angle, default=GOLDEN_CHI)
    p.add_argument("--visibility", type=unit_interval, default=0.99)
    p.add_argument("--counts", type=nonnegative_float, default=4e4, help="expected total counts")
    p.add_argument("--write-counts", help="also write the simulated counts CSV here")
    p.add_argument("--target", choices=("golden", "none"), default="golden")
    p.add_argument("--output")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("optimize", help="multi-start simplex search over state and settings")
    p.add_argument("--objective", choices=("penalized", "critical-ell"), default="penalized")
    p.add_argument("--kappa", type=float, default=optimizer.DEFAULT_KAPPA)
    p.add_argument("--visibility", type=unit_interval, default=1.0)
    p.add_argument("--starts", type=positive_int, default=32)
    p.add_argument("--seed", type=seed_int, required=True)
    p.add_argument("--untied", action="store_true", help="optimise all four angles independently")
    p.add_argument("--output")
    p.set_defaults(func=cmd_optimize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mdl-bell: error: {exc}", file=sys.stderr)
        return 2
    except MDLError as exc:
        print(f"mdl-bell: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        print(f"mdl-bell: {exc.strerror or exc}: {name}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
