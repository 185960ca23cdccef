"""Command-line front end: ``mtdeval {gen-graph,simulate,sweep,regret}``.

Options may also come from a JSON file given with ``--config``; keys are the
long option names with dashes replaced by underscores, and explicit flags
win over file values. Exit codes: 0 success, 2 usage or configuration
error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import experiments, report
from .defense import DefenseConfig, DefenseError, period_from_frequency
from .graph import GraphError, dumps_graph, generate_synthetic, load_graph
from .planner import Backend
from .sim import run_monte_carlo

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class ConfigError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    try:
        period_from_frequency(f)
    except DefenseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return f


def _list(kind):
    def parse(text):
        if isinstance(text, list):
            return [kind(str(v)) for v in text]
        return [kind(v.strip()) for v in str(text).split(",") if v.strip()]

    return parse


def _add_graph_source(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("graph source (file, or generated when --graph is absent)")
    g.add_argument("--graph", type=Path, help="graph JSON file")
    g.add_argument("--nodes", type=int, default=20)
    g.add_argument("--out-degree", type=int, default=3)
    g.add_argument("--p", type=float, default=0.9, help="success probability of generated exploits")
    g.add_argument("--pool", type=int, default=10, help="IDS candidate pool size")
    g.add_argument("--graph-seed", type=int, default=1)


def _add_attacker(p: argparse.ArgumentParser) -> None:
    p.add_argument("--horizon", type=int, default=19, help="planning horizon T")
    p.add_argument("--lam", type=float, default=1.0, help="risk factor")
    p.add_argument("--backend", choices=[b.value for b in Backend], default=Backend.DUAL_LP.value)
    p.add_argument("--seed", type=int, default=1, help="master seed")
    p.add_argument("--out-dir", type=Path, default=Path("."))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtdeval", description="Roaming-IDS attack simulator")
    parser.add_argument("--config", type=Path, help="JSON file of option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="write a synthetic attack graph")
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--out-degree", type=int, default=3)
    p.add_argument("--p", type=float, default=0.9)
    p.add_argument("--pool", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("graph.json"))

    p = sub.add_parser("simulate", help="Monte-Carlo run at one defense setting")
    _add_graph_source(p)
    _add_attacker(p)
    p.add_argument("--k", type=int, default=3)
    freq = p.add_mutually_exclusive_group()
    freq.add_argument("--period", type=int, help="re-sample every PERIOD steps (omit for never)")
    freq.add_argument("--frequency", type=_fraction, help="0 or 1/T_r")
    p.add_argument("--t-max", type=int, default=100)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("sweep", help="success rate across frequencies or IDS counts")
    _add_graph_source(p)
    _add_attacker(p)
    p.add_argument("--kind", choices=["frequency", "ids"], default="frequency")
    p.add_argument("--frequencies", type=_list(_fraction), default="0,1/5,1/4,1/3,1/2,1")
    p.add_argument("--ks", type=_list(int), default="1,2,3,4,5")
    p.add_argument("--k", type=int, default=3, help="IDS count for a frequency sweep")
    p.add_argument("--frequency", type=_fraction, default=Fraction(1, 3), help="for an IDS-count sweep")
    p.add_argument("--t-max", type=int, default=100)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--plot", action="store_true", help="also write sweep.svg")

    p = sub.add_parser("regret", help="dynamic regret against the clairvoyant attacker")
    _add_graph_source(p)
    _add_attacker(p)
    p.add_argument("--initial", type=_list(int), help="initial nodes (default: one per distance)")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--frequency", type=_fraction, default=Fraction(1, 3))
    p.add_argument("--h", type=int, default=19, help="evaluation horizon")
    p.add_argument("--schedules", type=int, default=10)
    p.add_argument("--episodes", type=int, default=100, help="simulated runs per (node, schedule)")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        values = json.loads(args.config.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"config {args.config} must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    known = {a.dest for a in sub._actions} - {"help"}  # noqa: SLF001
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    for action in sub._actions:  # noqa: SLF001
        if action.dest not in values:
            continue
        raw = values[action.dest]
        try:
            if action.type is not None and raw is not None:
                raw = action.type(raw if isinstance(raw, list) else str(raw))
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigError(f"config key {action.dest}: {exc}") from exc
        if action.choices is not None and raw not in action.choices:
            raise ConfigError(f"config key {action.dest}: {raw!r} not in {sorted(action.choices)}")
        values[action.dest] = raw
    # explicit flags still override: they are parsed on top of the new defaults
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def _graph(args):
    if args.graph is not None:
        return load_graph(args.graph)
    return generate_synthetic(args.nodes, args.out_degree, args.p, args.pool, args.graph_seed)


def _period(args):
    if getattr(args, "period", None) is not None:
        if args.period < 1:
            raise DefenseError(f"resample period must be a positive integer, got {args.period}")
        return args.period
    if args.frequency is None:
        return None
    return period_from_frequency(args.frequency)


def cmd_gen_graph(args) -> int:
    g = generate_synthetic(args.nodes, args.out_degree, args.p, args.pool, args.seed)
    report.write_atomic(args.out, dumps_graph(g))
    print(f"wrote {args.out}: {g.node_count} nodes, {sum(1 for _ in g.edges())} exploits, "
          f"initial {g.initial_node}, target {g.target_node}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    g = _graph(args)
    config = DefenseConfig(args.k, _period(args), g.ids_candidates)
    if args.trials < 1 or args.t_max < 0:
        raise ConfigError("trials must be >= 1 and t-max >= 0")
    stats = run_monte_carlo(
        g, config, args.horizon, args.lam, args.t_max, Backend(args.backend), args.trials, args.seed, args.workers
    )
    row = experiments.SweepRow(config.frequency, args.k, stats, args.seed)
    path = args.out_dir / "simulate.csv"
    report.write_atomic(path, report.stats_csv([row]))
    low, high = stats.interval
    print(f"success {stats.successes}/{stats.trials} = {stats.success_rate:.4f} "
          f"[{low:.4f}, {high:.4f}], detected {stats.detections}, timeout {stats.timeouts}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    g = _graph(args)
    common = dict(
        horizon=args.horizon, lam=args.lam, t_max=args.t_max, trials=args.trials, seed=args.seed,
        backend=Backend(args.backend), workers=args.workers,
    )
    if args.trials < 1:
        raise ConfigError("trials must be >= 1")
    if args.kind == "frequency":
        result = experiments.sweep_frequency(g, args.k, args.frequencies, **common)
    else:
        result = experiments.sweep_ids_count(g, args.ks, args.frequency, **common)
    path = args.out_dir / "sweep.csv"
    report.write_atomic(path, report.stats_csv(result.rows))
    for v, row in zip(result.values(), result.rows):
        print(f"{result.parameter}={v:g}: success rate {row.stats.success_rate:.4f}")
    print(f"wrote {path}")
    if args.plot:
        svg = args.out_dir / "sweep.svg"
        report.write_atomic(svg, report.sweep_svg(result))
        print(f"wrote {svg}")
    return EXIT_OK


def cmd_regret(args) -> int:
    g = _graph(args)
    initial = args.initial if args.initial is not None else experiments.one_state_per_distance(g)
    study = experiments.distance_regret_study(
        g, initial, args.k, args.frequency, args.horizon, args.lam, args.h, args.schedules,
        args.seed, Backend(args.backend), args.episodes,
    )
    path = args.out_dir / "regret.csv"
    report.write_atomic(path, report.regret_csv(study.rows))
    for d in study.distances():
        print(f"distance {d}: mean regret {study.mean_regret([d]):.6f}")
    try:
        stat, df, p = study.chi_squared()
        print(f"chi-squared {stat:.4f}, df {df}, p {p:.3g}")
    except ValueError as exc:
        print(f"chi-squared not available: {exc}")
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"gen-graph": cmd_gen_graph, "simulate": cmd_simulate, "sweep": cmd_sweep, "regret": cmd_regret}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"mtdeval: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, GraphError, DefenseError) as exc:
        print(f"mtdeval: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"mtdeval: error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"mtdeval: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"mtdeval: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
