"""Command-line front end: ``eval``, ``optimize``, ``sweep``, ``simulate``.

Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .cost import DEFAULT_TOL, ConvergenceError, CostRates, ScheduleParams, evaluate
from .distributions import ArrivalLaw, parse_distribution
from .experiments import SweepSpec, default_ch_values, round12, rows_to_csv, rows_to_json, run_sweep
from .optimize import SearchDomain, optimize
from .simulate import Protocol, SimConfig, simulate

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3
PROG = "handover-timing"


class UsageError(Exception):
    pass


def _float_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}") from None


def _int_pair(text: str) -> tuple[int, int]:
    a, b = _float_pair(text)
    if a != int(a) or b != int(b):
        raise argparse.ArgumentTypeError(f"expected two integers, got {text!r}")
    return int(a), int(b)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


# flag name -> (converter, default); the same keys are accepted in --config files
OPTIONS = {
    "dist": (str, "exp"),
    "t": (float, 0.0),
    "A": (float, None),
    "ch": (float, 1.0),
    "cr": (float, 1.0),
    "tol": (float, DEFAULT_TOL),
    "out": (str, None),
    "format": (str, None),
    "t-range": (_float_pair, None),
    "A-range": (_float_pair, None),
    "grid": (_int_pair, (400, 400)),
    "refine-tol": (float, 1e-6),
    "ch-values": (_float_list, None),
    "n-ch": (int, 40),
    "ch-min": (float, 0.1),
    "ch-max": (float, 20.0),
    "protocol": (str, Protocol.ROBOT_NEVER_WAITS.value),
    "cycles": (int, 100_000),
    "seed": (int, 0),
    "robot-wait-rate": (float, None),
    "recal-threshold": (float, None),
    "workers": (int, 1),
}

COMMON = ("dist", "ch", "cr", "tol", "out", "format")
COMMAND_OPTIONS = {
    "eval": COMMON + ("t", "A"),
    "optimize": COMMON + ("t-range", "A-range", "grid", "refine-tol"),
    "sweep": COMMON + ("t-range", "A-range", "grid", "refine-tol", "ch-values", "n-ch", "ch-min", "ch-max"),
    "simulate": COMMON + ("t", "A", "protocol", "cycles", "seed", "robot-wait-rate", "recal-threshold", "workers"),
}

HELP = {
    "dist": "delay law: uniform, exp, uniform:a,b, exp:rate, det:c, empirical:<path>",
    "format": "output format: json, or csv for sweep",
    "t-range": "aimed-arrival search bounds lo,hi",
    "A-range": "period search bounds lo,hi",
    "grid": "grid nodes n_t,n_A",
    "ch-values": "explicit comma-separated C_h values for a sweep",
    "protocol": "never-waits or first-waits",
    "robot-wait-rate": "robot idle cost per time unit under first-waits (default C_R/A)",
    "recal-threshold": "count cycles whose waiting exceeds this",
}


def _dest(name: str) -> str:
    return name.replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, names in COMMAND_OPTIONS.items():
        p = sub.add_parser(cmd)
        p.add_argument("--config", help="key = value file; command-line flags win")
        for name in names:
            conv, default = OPTIONS[name]
            p.add_argument(f"--{name}", dest=_dest(name), type=conv, default=None,
                           help=HELP.get(name, f"default: {default}"))
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            out[key.strip().lstrip("-")] = value.strip()
    return out


def _resolve(args: argparse.Namespace) -> dict:
    config = read_config(args.config) if args.config else {}
    names = COMMAND_OPTIONS[args.command]
    unknown = sorted(set(config) - {n for n in names} - {_dest(n) for n in names})
    if unknown:
        raise UsageError(f"unknown config key(s) for {args.command}: {', '.join(unknown)}")
    opts = {}
    for name in names:
        conv, default = OPTIONS[name]
        value = getattr(args, _dest(name))
        if value is None:
            raw = config.get(name, config.get(_dest(name)))
            if raw is not None:
                try:
                    value = conv(raw)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config key {name}: {exc}") from None
            else:
                value = default
        opts[_dest(name)] = value
    return opts


def _need_A(o: dict) -> float:
    if o["A"] is None:
        raise UsageError("--A is required")
    if not o["A"] > 0:
        raise UsageError("A must be positive")
    return o["A"]


def _domain(delay, o: dict) -> SearchDomain:
    return SearchDomain.default(delay, t_range=o["t_range"], A_range=o["A_range"],
                                grid=o["grid"], refine_tol=o["refine_tol"])


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(record: dict) -> str:
    return json.dumps(round12(record), indent=2) + "\n"


def cmd_eval(o: dict) -> str:
    A = _need_A(o)
    delay = parse_distribution(o["dist"])
    breakdown = evaluate(delay, ScheduleParams(o["t"], A), CostRates(o["ch"], o["cr"]), o["tol"])
    return _json(breakdown.to_dict())


def cmd_optimize(o: dict) -> str:
    delay = parse_distribution(o["dist"])
    res = optimize(delay, CostRates(o["ch"], o["cr"]), _domain(delay, o), o["tol"])
    return _json(res.to_dict())


def cmd_sweep(o: dict) -> str:
    delay = parse_distribution(o["dist"])
    ch_values = o["ch_values"] or default_ch_values(o["n_ch"], o["ch_min"], o["ch_max"])
    spec = SweepSpec(delay, _domain(delay, o), ch_values, o["cr"])
    rows = run_sweep(spec, o["tol"])
    return rows_to_json(rows) if o["format"] == "json" else rows_to_csv(rows)


def cmd_simulate(o: dict) -> str:
    A = _need_A(o)
    if o["cycles"] < 1:
        raise UsageError("cycles must be >= 1")
    try:
        protocol = Protocol(o["protocol"])
    except ValueError:
        raise UsageError(f"unknown protocol {o['protocol']!r} (never-waits | first-waits)") from None
    config = SimConfig(
        law=ArrivalLaw(parse_distribution(o["dist"]), o["t"]),
        A=A,
        rates=CostRates(o["ch"], o["cr"]),
        protocol=protocol,
        cycles=o["cycles"],
        seed=o["seed"],
        robot_wait_rate=o["robot_wait_rate"],
        recalibration_threshold=o["recal_threshold"],
    )
    return _json(simulate(config, workers=max(1, o["workers"])).to_dict())


COMMANDS = {"eval": cmd_eval, "optimize": cmd_optimize, "sweep": cmd_sweep, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve(args)
        fmt = opts["format"]
        allowed = ("csv", "json") if args.command == "sweep" else ("json",)
        if fmt is not None and fmt not in allowed:
            raise UsageError(f"--format must be one of {', '.join(allowed)} for {args.command}")
        text = COMMANDS[args.command](opts)
        _emit(text, opts["out"])
    except OSError as exc:
        print(f"{PROG}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError, ConvergenceError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
