"""Command line interface.

``hourglass simulate|sweep|traps|learn|balance`` — exit code 0 on success,
2 for configuration problems, 3 when an exact method exceeds its budget or
a check lacks data, 4 for I/O failures.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config, load_sweep, with_overrides
from .errors import BudgetError, ConfigError, InsufficientDataError
from .experiments import (
    run_balance,
    run_learn,
    run_sweep,
    simulate_experiment,
    traps_report,
    write_balance,
    write_simulation,
    write_traps,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_IO = 4


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    config = with_overrides(
        config, seed=args.seed, horizon=args.horizon, out_dir=args.out
    )
    result = simulate_experiment(config, backend=args.backend)
    paths = write_simulation(result)
    print(f"config {result.sha256} seed {config.run.seed}")
    print(f"events {result.n_events} backend {result.backend}")
    line = f"heuristic verdict: {result.verdict.value}"
    if result.silent:
        line += f"  silent sites: {sorted(result.silent)}"
    print(line)
    if result.analytic is not None:
        line = f"{result.analytic.method} verdict: {result.analytic.verdict.value}"
        if result.analytic.witness is not None:
            line += f"  witness: {sorted(result.analytic.witness)}"
        print(line)
    for _name, path in sorted(paths.items()):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_sweep(args.config)
    out = args.out if args.out is not None else spec.base.output.dir
    result = run_sweep(spec, out, backend=args.backend)
    print(f"sweep {result.sha256} cells {len(result.cells)} runs {len(result.runs)}")
    for cell in result.cells:
        axes = {a: cell[a] for a in spec.axes}
        print(
            f"  {axes}  transient_fraction={cell['transient_fraction']:.3f}"
            f"  mean_pi={cell['mean_pi']:.6f}"
        )
    for _name, path in sorted(result.paths.items()):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_traps(args) -> int:
    config = load_config(args.config)
    data = traps_report(config)
    print(
        f"config {data['config_sha256']}  a={data['a']} b={data['b']} c={data['c']}"
    )
    print(f"{data['count']} limiting patterns:")
    for entry in data["traps"]:
        print(f"  {entry['sites']}")
    verified = data["verified_exhaustively"]
    if verified is None:
        print("exhaustive cross-check: skipped (over subset budget)")
    else:
        print(f"exhaustive cross-check: {'agrees' if verified else 'DISAGREES'}")
    if args.out is not None:
        path = write_traps(data, args.out)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_learn(args) -> int:
    out = args.out if args.out is not None else "results"
    data = run_learn(args.patterns, args.a, args.A, args.B, out)
    print(f"learned {2 ** data['p']} patterns on {2 * data['p']} blocks of {data['k']}")
    print(f"weak magnitude  (B-A)*a = {data['weak']}")
    print(f"strong magnitude (A+B)*a = {data['strong']}")
    print(f"pairing: {data['pairing']}")
    print(f"storage verified: {'yes' if data['verified'] else 'NO'}")
    print(f"wrote {out}/learned_config.json")
    print(f"wrote {out}/learning.json")
    return EXIT_OK


def cmd_balance(args) -> int:
    config = load_config(args.config)
    report, data = run_balance(config, args.wE, backend=args.backend)
    print(f"config {data['config_sha256']}  w_E={data['w_E']} K_E={data['K_E']}")
    print(f"events {data['n_events']}")
    print(f"mean rate pi+  = {report.pi_plus}")
    print(f"spontaneous    = {report.pi_plus0}")
    print(f"balance LHS    = {report.lhs}")
    print(f"residual       = {report.residual}")
    if args.out is not None:
        path = write_balance(data, args.out)
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hourglass",
        description="Simulate and analyze networks of hourglass-clock sites.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one configured experiment")
    sim.add_argument("-c", "--config", required=True, help="experiment config (JSON)")
    sim.add_argument("--seed", type=int, default=None, help="override run.seed")
    sim.add_argument("--horizon", type=float, default=None, help="override run.horizon")
    sim.add_argument("--out", default=None, help="override the output directory")
    sim.add_argument("--backend", default=None, help="force an engine backend")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="run a parameter grid with replications")
    sw.add_argument("-c", "--config", required=True, help="sweep spec (JSON)")
    sw.add_argument("--out", default=None, help="output directory")
    sw.add_argument("--backend", default=None, help="force an engine backend")
    sw.set_defaults(func=cmd_sweep)

    tr = sub.add_parser("traps", help="enumerate the limiting patterns of a block config")
    tr.add_argument("-c", "--config", required=True, help="experiment config (JSON)")
    tr.add_argument("--out", default=None, help="also write traps.json here")
    tr.set_defaults(func=cmd_traps)

    ln = sub.add_parser("learn", help="learn block constants that store a pattern family")
    ln.add_argument("-p", "--patterns", required=True, help="pattern family (JSON)")
    ln.add_argument("--a", type=float, required=True, help="mean refill of every site")
    ln.add_argument("--A", type=float, required=True, help="correlation gain")
    ln.add_argument("--B", type=float, required=True, help="uniform depression")
    ln.add_argument("--out", default=None, help="output directory (default: results)")
    ln.set_defaults(func=cmd_learn)

    ba = sub.add_parser("balance", help="check the excitatory balance relation")
    ba.add_argument("-c", "--config", required=True, help="torus config (JSON)")
    ba.add_argument("--wE", type=float, default=None, help="override connections.w_E")
    ba.add_argument("--out", default=None, help="also write balance.json here")
    ba.add_argument("--backend", default=None, help="force an engine backend")
    ba.set_defaults(func=cmd_balance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetError, InsufficientDataError) as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
