"""Command-line front end: one subcommand per experiment, JSON/CSV/PNG out.

Configuration is a flat ``key = value`` text file ('#' starts a comment);
command-line flags override file values.  Angles are degrees in config and
flags, radians internally.  ``shots = 0`` means exact probabilities, no
sampling, which is what makes closed-form numbers assertable.

Exit codes: 0 success, 2 configuration error, 3 internal validation failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import graphs, qubits, tabletop, verification
from .errors import ConfigError, ContractViolationError, ValidationError
from .qubits import PAULI, AnalyzerSetting, NoiseModel
from .verification import RunReport

DEFAULTS = {
    "overlap": None,
    "white_noise": 0.0,
    "delay_fs": None,
    "coherence_time_fs": 740.0,
    "shots": 0,
    "seed": 1,
    "bases": None,          # per-command default: histogram "xzx", correlations "z"
    "fixed_angle_deg": 45.0,
    "swept_angles_deg": [float(a) for a in range(0, 181, 10)],
    "target_length": 3,
    "strategy": "discard-remnants",
    "trials": 10000,
}

_FLOAT_KEYS = ("overlap", "white_noise", "delay_fs", "coherence_time_fs",
               "fixed_angle_deg")
_INT_KEYS = ("shots", "seed", "target_length", "trials")
_LIST_KEYS = ("swept_angles_deg",)
_STR_KEYS = ("bases", "strategy")

_BOUNDS = {
    "overlap": (0.0, 1.0),
    "white_noise": (0.0, 1.0),
    "shots": (0, None),
    "trials": (1, None),
    "target_length": (1, None),
}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _LIST_KEYS:
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def _check_bounds(settings: dict):
    for key, (lo, hi) in _BOUNDS.items():
        value = settings.get(key)
        if value is None:
            continue
        if lo is not None and value < lo:
            raise ConfigError(f"{key} must be >= {lo} (got {value})")
        if hi is not None and value > hi:
            raise ConfigError(f"{key} must be <= {hi} (got {value})")
    if settings["coherence_time_fs"] is not None and settings["coherence_time_fs"] <= 0:
        raise ConfigError("coherence_time_fs must be > 0")
    if settings["strategy"] not in graphs.STRATEGIES:
        raise ConfigError(
            f"strategy must be one of {graphs.STRATEGIES} (got {settings['strategy']!r})")


def load_config(path) -> dict:
    """Parse a flat key = value file; unknown keys are rejected by name."""
    settings = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (tok.strip() for tok in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key: {key}")
        settings[key] = _parse_value(key, raw)
    return settings


def merge_settings(config: dict, args: argparse.Namespace) -> dict:
    """Defaults, then config file, then any explicitly given flags."""
    settings = dict(DEFAULTS)
    settings.update(config)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    _check_bounds(settings)
    if settings["overlap"] is not None and settings["delay_fs"] is not None:
        print("warning: both overlap and delay_fs are set; overlap wins",
              file=sys.stderr)
    return settings


def _noise(settings: dict) -> NoiseModel:
    return NoiseModel(overlap=settings["overlap"],
                      white_noise=settings["white_noise"],
                      delay_fs=settings["delay_fs"],
                      coherence_time_fs=settings["coherence_time_fs"])


def _parse_bases(tokens: str) -> list[AnalyzerSetting]:
    try:
        return [AnalyzerSetting.from_token(tok) for tok in tokens]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- commands ------------------------------------------------------------------


def _cmd_fuse(settings: dict, args) -> RunReport:
    noise = _noise(settings)
    outcome = args.outcome
    probs = {}
    states = {}
    for sign in ("+", "-"):
        p, state = tabletop.fuse_type1(noise, sign)
        probs[f"success_{'plus' if sign == '+' else 'minus'}"] = p
        states[sign] = state
    probs["failure"] = 1.0 - probs["success_plus"] - probs["success_minus"]
    state = states[outcome]
    state.validate()
    ideal = graphs.build_state(graphs.path(3))
    if outcome == "-":
        # the "-" herald differs from "+" by a Z on the middle photon
        ideal = qubits.apply_unitary(ideal, ideal.labels[1], PAULI["Z"])
    stats = {
        "detector_outcome": outcome,
        "fidelity_to_cluster": qubits.fidelity(state, ideal),
        "purity": state.purity(),
        "success_probability": probs["success_plus"] + probs["success_minus"],
        "joint_probability": probs[f"success_{'plus' if outcome == '+' else 'minus'}"],
        "effective_overlap": noise.effective_overlap(),
    }
    report = RunReport(
        experiment="fuse",
        settings={"seed": settings["seed"], **verification.noise_settings(noise)},
        probabilities=probs,
        counts=None,
        statistics=stats,
    )
    return report.validate()


def _cmd_histogram(settings: dict, args) -> RunReport:
    noise = _noise(settings)
    tokens = settings["bases"] or "xzx"
    bases = _parse_bases(tokens)
    if len(bases) != 3:
        raise ConfigError("bases must name three analyzers, e.g. xzx")
    _, state = tabletop.fuse_type1(noise, "+")
    state.validate()
    desired = verification.DESIRED_DEFAULT.get(tokens)
    report = verification.polarization_histogram(
        state, bases, settings["shots"], settings["seed"], desired=desired)
    report.settings.update(verification.noise_settings(noise))
    return report.validate()


def _cmd_hom_scan(settings: dict, args) -> RunReport:
    noise = _noise(settings)
    if args.delays is not None:
        try:
            delays = [float(tok) for tok in args.delays.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"bad --delays list: {args.delays!r}") from None
        if not delays:
            raise ConfigError("--delays must name at least one delay")
    else:
        span = 2.0 * settings["coherence_time_fs"]
        delays = [float(d) for d in np.linspace(-span, span, 21)]
    return verification.hom_scan(delays, noise, settings["shots"], settings["seed"])


def _cmd_mermin(settings: dict, args) -> RunReport:
    noise = _noise(settings)
    _, cluster = tabletop.fuse_type1(noise, "+")
    ghz = tabletop.cluster_to_ghz(cluster)
    ghz.validate()
    return verification.mermin_report(
        ghz, settings["shots"], settings["seed"],
        extra_settings=verification.noise_settings(noise))


def _cmd_correlations(settings: dict, args) -> RunReport:
    noise = _noise(settings)
    token = (settings["bases"] or "z").lower()
    if token not in ("z", "x"):
        raise ConfigError("bases must be 'z' or 'x' for correlations")
    setting = AnalyzerSetting.from_token(token)
    kept = args.kept_outcome or {"z": "H", "x": "+"}[token]
    _, cluster = tabletop.fuse_type1(noise, "+")
    cluster.validate()
    report = verification.correlation_scan(
        cluster,
        measured_label=3,
        setting=setting,
        kept_outcome=kept,
        fixed=(1, settings["fixed_angle_deg"]),
        swept=(4, settings["swept_angles_deg"]),
        shots_per_point=settings["shots"],
        seed=settings["seed"],
    )
    report.settings.update(verification.noise_settings(noise))
    return report.validate()


def _cmd_graph(settings: dict, args) -> RunReport:
    g = graphs.path(settings["target_length"])
    operations = []
    for kind, label in args.graph_ops:
        operations.append(f"measure_{kind}({label})")
        if kind == "z":
            g = graphs.measure_z(g, label)
        else:
            g = graphs.measure_x(g, label)
    stats = {
        "n_logical_vertices": g.n_vertices,
        "n_edges": len(g.edges),
        "n_physical_qubits": len(g.physical_labels),
        "adjacency": g.serialize(),
        "stabilizers": ",".join(graphs.stabilizers(g)) if g.vertices else "",
        "byproducts": ",".join(g.byproducts),
    }
    report = RunReport(
        experiment="graph",
        settings={"target_length": settings["target_length"],
                  "operations": operations, "seed": settings["seed"]},
        probabilities={},
        counts=None,
        statistics=stats,
    )
    return report


def _cmd_resources(settings: dict, args) -> RunReport:
    length = settings["target_length"]
    if length < 2:
        raise ConfigError("target_length must be >= 2 (got %d)" % length)
    costs = graphs.simulate_costs(length, settings["strategy"],
                                  settings["trials"], settings["seed"])
    mean = float(np.mean(costs))
    se = float(np.std(costs, ddof=1) / math.sqrt(len(costs))) if len(costs) > 1 else 0.0
    values, freq = np.unique(costs, return_counts=True)
    report = RunReport(
        experiment="resources",
        settings={"target_length": length, "strategy": settings["strategy"],
                  "trials": settings["trials"], "seed": settings["seed"]},
        probabilities={str(int(v)): float(c) / len(costs)
                       for v, c in zip(values, freq)},
        counts={str(int(v)): int(c) for v, c in zip(values, freq)},
        statistics={"mean_cost": mean, "standard_error": se},
    )
    return report.validate()


_COMMANDS = {
    "fuse": _cmd_fuse,
    "histogram": _cmd_histogram,
    "hom-scan": _cmd_hom_scan,
    "mermin": _cmd_mermin,
    "correlations": _cmd_correlations,
    "graph": _cmd_graph,
    "resources": _cmd_resources,
}


# -- argument parsing -------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, *, noise=False, sampling=False):
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    parser.add_argument("--csv", action="store_true",
                        help="also write <out>.csv next to the report")
    parser.add_argument("--plot", action="store_true",
                        help="also render <out>.png next to the report")
    parser.add_argument("--seed", type=int)
    if noise:
        parser.add_argument("--overlap", type=float)
        parser.add_argument("--white-noise", dest="white_noise", type=float)
        parser.add_argument("--delay-fs", dest="delay_fs", type=float)
        parser.add_argument("--coherence-time-fs", dest="coherence_time_fs",
                            type=float)
    if sampling:
        parser.add_argument("--shots", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusionlab",
        description="Simulate Type-I fusion of Bell pairs into three-photon "
                    "cluster states and the statistical checks on the result.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="run the fusion pipeline, report fidelity")
    _add_common(p, noise=True)
    p.add_argument("--outcome", choices=("+", "-"), default="+")

    p = sub.add_parser("histogram", help="eight-outcome polarization histogram")
    _add_common(p, noise=True, sampling=True)
    p.add_argument("--bases")

    p = sub.add_parser("hom-scan", help="two-photon interference dip scan")
    _add_common(p, noise=True, sampling=True)
    p.add_argument("--delays", help="comma-separated delays in fs "
                                    "(default: 21 points over +-2 coherence times)")

    p = sub.add_parser("mermin", help="three-photon Mermin inequality test")
    _add_common(p, noise=True, sampling=True)

    p = sub.add_parser("correlations", help="conditional two-photon fringes")
    _add_common(p, noise=True, sampling=True)
    p.add_argument("--bases", help="basis for the middle photon: z or x")
    p.add_argument("--fixed-angle-deg", dest="fixed_angle_deg", type=float)
    p.add_argument("--swept-angles-deg", dest="swept_angles_deg",
                   type=lambda raw: [float(t) for t in raw.split(",")])
    p.add_argument("--kept-outcome", dest="kept_outcome")

    p = sub.add_parser("graph", help="linear-cluster calculus on a path graph")
    _add_common(p)
    p.add_argument("--target-length", dest="target_length", type=int)
    p.add_argument("--measure-z", dest="mz", type=int, action="append",
                   default=[], metavar="LABEL")
    p.add_argument("--measure-x", dest="mx", type=int, action="append",
                   default=[], metavar="LABEL")

    p = sub.add_parser("resources", help="Monte Carlo Bell-pair cost estimate")
    _add_common(p)
    p.add_argument("--target-length", dest="target_length", type=int)
    p.add_argument("--strategy", choices=graphs.STRATEGIES)
    p.add_argument("--trials", type=int)

    return parser


def _emit(report: RunReport, args) -> None:
    blob = report.to_json_bytes()
    if args.out:
        out = Path(args.out)
        out.write_bytes(blob)
    else:
        if args.csv or args.plot:
            raise ConfigError("--csv/--plot need --out to name the artifacts")
        sys.stdout.buffer.write(blob)
        sys.stdout.buffer.flush()
        return
    if args.csv:
        out.with_suffix(".csv").write_bytes(report.to_csv_bytes())
    if args.plot:
        from . import plots  # deferred: pulls in matplotlib

        plots.render_report(report, out.with_suffix(".png"))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
        settings = merge_settings(config, args)
        if args.command == "graph":
            # z measurements first, then x, each in the given order
            args.graph_ops = ([("z", v) for v in args.mz]
                              + [("x", v) for v in args.mx])
        report = _COMMANDS[args.command](settings, args)
        _emit(report, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ContractViolationError) as exc:
        print(f"internal validation failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
