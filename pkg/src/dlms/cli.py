"""Command-line front end: run scenarios to CSV, verify claims, list builtins.

Exit codes: 0 success/pass, 1 verification fail, 2 usage/config error,
3 divergence.
"""

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .claims import CLAIMS, verify_claim
from .errors import ConfigError, DivergenceError, ParseError
from .network import TrustMatrix
from .scenarios import (
    builtin,
    builtin_names,
    builtin_summary,
    compute_report,
    parse,
    run,
)
from .signals import GaussianParams

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_DIVERGENCE = 3


def load_scenario(ref):
    """Resolve a builtin name or a config file path."""
    if ref in builtin_names():
        return builtin(ref)
    path = Path(ref)
    if not path.exists():
        raise ConfigError(f"no such builtin or config file: {ref}")
    return parse(path.read_text())


def _parse_vector(text):
    return tuple(float(p) for p in text.split(","))


def _set_agent_field(agents, agent_id, key, value):
    for i, cfg in enumerate(agents):
        if cfg.id != agent_id:
            continue
        if key == "mu":
            cfg = replace(cfg, mu=float(value))
        elif key == "w0":
            cfg = replace(cfg, w0=_parse_vector(value))
        elif key in ("input_mean", "input_sd"):
            kwargs = {key.removeprefix("input_"): float(value)}
            cfg = replace(cfg, input=GaussianParams(**{**vars(cfg.input), **kwargs}))
        elif key in ("noise_mean", "noise_sd"):
            kwargs = {key.removeprefix("noise_"): float(value)}
            cfg = replace(cfg, noise=GaussianParams(**{**vars(cfg.noise), **kwargs}))
        elif key == "counterpart":
            cfg = replace(cfg, counterpart=value or None)
        else:
            raise ConfigError(f"unknown agent override key {key!r}")
        agents[i] = cfg
        return
    raise ConfigError(f"override names unknown agent {agent_id!r}")


def _set_trust(rows, adaptive_ids, src, dst, value):
    try:
        a, b = adaptive_ids.index(src), adaptive_ids.index(dst)
    except ValueError:
        raise ConfigError(
            f"trust override names unknown adaptive agent {src!r} -> {dst!r}"
        ) from None
    rows[a][b] = float(value)


def apply_overrides(scenario, args):
    """Apply all CLI overrides, then validate the resulting scenario once."""
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.iterations is not None:
        updates["iterations"] = args.iterations
    if args.ensemble is not None:
        updates["ensemble"] = args.ensemble
    if args.w_opt is not None:
        updates["w_opt"] = _parse_vector(args.w_opt)

    agents = list(scenario.agents)
    rows = [list(r) for r in scenario.trust.rows]
    adaptive_ids = [cfg.id for cfg in scenario.adaptive_agents()]
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, _, value = item.partition("=")
        parts = key.strip().split(".")
        try:
            if parts[0] == "trust" and len(parts) == 3:
                _set_trust(rows, adaptive_ids, parts[1], parts[2], value)
            elif len(parts) == 2:
                _set_agent_field(agents, parts[0], parts[1], value)
            else:
                raise ConfigError(
                    f"override key {key!r} is neither agent.field nor trust.from.to")
        except ValueError as exc:
            raise ConfigError(f"invalid override {item!r}: {exc}") from None
    if args.set:
        updates["agents"] = tuple(agents)
        updates["trust"] = TrustMatrix(tuple(tuple(r) for r in rows))
    return replace(scenario, **updates) if updates else scenario


def _fmt(value):
    # repr of a Python float is the shortest round-trip decimal form
    return repr(float(value))


def write_trajectories(path, scenario, records):
    m = len(scenario.w_opt)
    header = (["run", "iteration", "agent"]
              + [f"w{j}" for j in range(m)] + ["e", "dist_opt"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in records:
            for i in range(rec.iterations):
                for aid in sorted(rec.agents):
                    w = rec.ws[aid][i]
                    dist = sum((wj - oj) ** 2 for wj, oj in zip(w, rec.w_opt)) ** 0.5
                    writer.writerow(
                        [rec.run_index, i + 1, aid]
                        + [_fmt(wj) for wj in w]
                        + [_fmt(rec.es[aid][i]), _fmt(dist)])


def metrics_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".metrics" + (out.suffix or ".csv"))


def write_metrics(path, scenario, records):
    report = compute_report(scenario, records)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "agent", "iteration", "value"])
        for aid in sorted(report.msd):
            for i, v in enumerate(report.msd[aid]):
                writer.writerow(["msd", aid, i + 1, _fmt(v)])
        for aid in sorted(report.steady_state_var):
            var = report.steady_state_var[aid]
            writer.writerow(["steady_state_var", aid, "",
                             "" if var is None else _fmt(var)])
        for aid in sorted(report.convergence_iter):
            conv = report.convergence_iter[aid]
            writer.writerow(["convergence_iter", aid, "",
                             "" if conv is None else conv])
        for (p, q) in sorted(report.crossing_iter):
            cross = report.crossing_iter[(p, q)]
            writer.writerow(["crossing_iter", f"{p}:{q}", "",
                             "" if cross is None else cross])


def cmd_run(args):
    scenario = apply_overrides(load_scenario(args.scenario), args)
    out = Path(args.out)
    try:
        records = run(scenario)
    except DivergenceError as exc:
        if exc.completed:
            write_trajectories(out, scenario, exc.completed)
        manifest = out.with_name(out.stem + ".error.json")
        manifest.write_text(json.dumps({
            "error": "divergence",
            "message": str(exc),
            "run": exc.run,
            "agent": exc.agent,
            "iteration": exc.iteration,
            "completed_runs": len(exc.completed),
        }, indent=2) + "\n")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    write_trajectories(out, scenario, records)
    write_metrics(metrics_path(out), scenario, records)
    print(f"wrote {out} and {metrics_path(out)}")
    return EXIT_OK


def cmd_verify(args):
    scenario = apply_overrides(load_scenario(args.scenario), args)
    try:
        result = verify_claim(scenario, args.claim)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    print(result.summary())
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_list(args):
    for name in builtin_names():
        print(f"{name}  {builtin_summary(name)}")
    return EXIT_OK


def _add_overrides(parser):
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--ensemble", type=int, default=None)
    parser.add_argument("--w-opt", dest="w_opt", default=None,
                        help="comma-separated target weight vector")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="agent override (id.field=value) or trust "
                             "override (trust.from.to=value)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dlms",
        description="Simulate networks of cooperating LMS adaptive filters.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write trajectory CSVs")
    p_run.add_argument("scenario", help="builtin name or config file path")
    p_run.add_argument("--out", required=True, help="trajectory CSV output path")
    _add_overrides(p_run)
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="check a network-behaviour claim")
    p_verify.add_argument("scenario", help="builtin name or config file path")
    p_verify.add_argument("claim", choices=CLAIMS)
    _add_overrides(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_list = sub.add_parser("list", help="list builtin scenarios")
    p_list.set_defaults(func=cmd_list)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
