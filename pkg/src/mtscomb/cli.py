"""Command-line entry point.

Subcommands: run (one experiment point), sweep (axis sweep with slope fit),
lb / mab / doubling (scenario shortcuts), validate (oracle self-tests).
Configuration comes from a JSON file; --seed, --trials and --out override
file values. Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys

import numpy as np

from .core import (
    HeuristicPath,
    Instance,
    offline_opt,
    opt_k,
    read_instance,
    solution_cost,
    validate_metric,
    write_instance,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    run_experiment,
    sweep as run_sweep,
)


def _load_config(args, default_scenario=None) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    scenario = data.get("scenario", default_scenario)
    if scenario is None:
        raise ConfigError("scenario missing (set it in the config file)")
    seed = args.seed if args.seed is not None else data.get("seed", 0)
    trials = args.trials if args.trials is not None else data.get("trials", 10)
    out = args.out if args.out is not None else data.get("out", "results")
    params = dict(data.get("params", {}))
    for key in getattr(args, "param", []) or []:
        name, _, raw = key.partition("=")
        if not raw:
            raise ConfigError(f"bad -p override {key!r}, expected name=value")
        try:
            params[name] = json.loads(raw)
        except json.JSONDecodeError:
            params[name] = raw
    return ExperimentConfig(
        seed=int(seed), trials=int(trials), scenario=scenario, out=out,
        params=params, trace_trials=int(data.get("trace_trials", 1)),
        workers=int(args.workers if args.workers is not None
                    else data.get("workers", 1)),
    )


def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("-p", "--param", action="append", metavar="NAME=VALUE",
                   help="override one scenario parameter (JSON value)")


def _cmd_run(args) -> int:
    config = _load_config(args)
    rows = run_experiment(config)
    for row in rows:
        print(f"{row[4]}: mean cost {row[5]:.4f}, mean regret {row[6]:.4f} "
              f"(+- {row[7]:.4f}), ratio {row[11]:.4f}")
    print(f"wrote {config.out}_(trials|trace|summary).csv")
    return 0


def _cmd_scenario(args, scenario) -> int:
    config = _load_config(args, default_scenario=scenario)
    if config.scenario != scenario:
        raise ConfigError(f"config scenario {config.scenario!r} != {scenario!r}")
    rows = run_experiment(config)
    for row in rows:
        print(f"{row[4]}: mean cost {row[5]:.4f}, mean regret {row[6]:.4f} "
              f"(+- {row[7]:.4f})")
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    values = [json.loads(v) for v in args.values.split(",")]
    rows = run_sweep(config, args.axis, values)
    for row in rows:
        print(f"{row[4]} {row[1]}={row[2]}: mean regret {row[6]:.4f} "
              f"(+- {row[7]:.4f})")
    print(f"fitted slope vs axis: {rows[-1][-2]:.4f}, vs opt: {rows[-1][-1]:.4f}")
    print(f"wrote {config.out}_(trials|trace|summary).csv")
    return 0


def _brute_opt_k(inst, paths, k) -> float:
    best = np.inf
    for seq in itertools.product(range(len(paths)), repeat=inst.T):
        if sum(a != b for a, b in zip(seq, seq[1:])) > k:
            continue
        total, prev = 0.0, inst.start
        for t, i in enumerate(seq):
            s = int(paths[i].states[t + 1])
            total += inst.costs[t, s] + inst.metric.dist[prev, s]
            prev = s
        best = min(best, total)
    return float(best)


def _selftest_oracles(rng) -> bool:
    """offline_opt and opt_k against brute-force enumeration."""
    ok = True
    for _ in range(60):
        n = int(rng.integers(2, 4))
        pts = rng.random((n, 2))
        dist = np.sqrt(((pts[:, None] - pts[None, :]) ** 2).sum(-1))
        dist = (dist + dist.T) / 2
        np.fill_diagonal(dist, 0)
        inst = Instance(validate_metric(dist), 0,
                        rng.random((int(rng.integers(1, 6)), n)))
        best = min(
            solution_cost(inst, seq)
            for seq in itertools.product(range(n), repeat=inst.T)
        )
        ok &= abs(offline_opt(inst)[0] - best) <= 1e-9
        paths = [
            HeuristicPath(np.concatenate([[0], rng.integers(0, n, inst.T)]))
            for _ in range(2)
        ]
        k = int(rng.integers(0, 3))
        ok &= abs(opt_k(inst, paths, k)[0] - _brute_opt_k(inst, paths, k)) <= 1e-9
    return ok


def _selftest_roundtrip(rng, tmpdir="/tmp") -> bool:
    import os
    import tempfile

    dist = np.ones((3, 3)) - np.eye(3)
    costs = rng.random((4, 3))
    costs[0, 1] = np.inf
    inst = Instance(validate_metric(dist), 2, costs)
    fd, path = tempfile.mkstemp(suffix=".txt")
    os.close(fd)
    try:
        write_instance(inst, path)
        back = read_instance(path)
        same = (back.costs == inst.costs) | (
            np.isinf(back.costs) & np.isinf(inst.costs)
        )
        return bool(same.all()) and back.start == inst.start
    finally:
        os.unlink(path)


def _cmd_validate(_args) -> int:
    rng = np.random.default_rng(0)
    checks = [
        ("oracle equivalence (brute force)", _selftest_oracles),
        ("instance serialization roundtrip", _selftest_roundtrip),
    ]
    failed = 0
    for name, fn in checks:
        ok = fn(rng)
        print(f"{'PASS' if ok else 'FAIL'}: {name}")
        failed += not ok
    return 0 if failed == 0 else 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mtscomb",
        description="combining MTS heuristics under delayed bandit access",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment point")
    _add_common(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep an axis and fit the slope")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True,
                         help="opt_scale | T | ell | m (scenario dependent)")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    p_sweep.set_defaults(fn=_cmd_sweep)

    for name in ("lb", "mab", "doubling"):
        scenario = {"lb": "lower_bound"}.get(name, name)
        p_s = sub.add_parser(name, help=f"shortcut for the {scenario} scenario")
        _add_common(p_s)
        p_s.set_defaults(fn=lambda a, s=scenario: _cmd_scenario(a, s))

    p_val = sub.add_parser("validate", help="oracle self-tests")
    p_val.set_defaults(fn=_cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
