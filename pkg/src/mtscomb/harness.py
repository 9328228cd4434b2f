"""Experiment orchestration: seeded trials, benchmarks, CSV emission.

Per-trial randomness is derived from the master seed with a splitmix64-style
mixing function, so (config, seed) determines every output byte regardless
of worker count. Instances are fixed per sweep point (the oblivious
adversary commits first); trials vary the algorithm's coins, and scenarios
with stochastic heuristics or losses redraw those from dedicated streams.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import experts
from .access import wrap_bounded
from .adversary import build_lb_blocks, gen_losses, lb_heuristic, concat_segments
from .combiner import (
    LABEL_NAMES,
    auto_config,
    run_combiner,
    run_doubling,
    sample_schedule,
)
from .combiner import _benchmarks as combiner_benchmarks
from .core import Instance
from .experts import rate_from_gamma
from .families import make_planted, make_star_caching, pingpong_path
from .mab import mab_hyperparams, mab_play, switching_cost_adversary

MASK64 = (1 << 64) - 1

SCENARIOS = ("upper_bound", "opt_k", "lower_bound", "mab", "doubling")


def splitmix64(x: int) -> int:
    """One round of the splitmix64 mixer (public-domain constants)."""
    x = (x + 0x9E3779B97F4B7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seed(master: int, *indices: int) -> int:
    """Deterministic sub-stream seed: fold each index through splitmix64."""
    h = splitmix64(master & MASK64)
    for ix in indices:
        h = splitmix64(h ^ splitmix64((ix + 1) & MASK64))
    return h


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ValueError("slope fit needs at least 3 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("slope fit needs positive values")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    seed: int
    trials: int
    scenario: str
    out: str
    params: dict = field(default_factory=dict)
    trace_trials: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}"
            )


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


TRIAL_HEADER = [
    "trial", "seed", "algo", "alg_cost", "opt0", "optk", "off",
    "regret0", "regretk", "switches", "explores",
    "epsilon", "gamma", "alpha", "epochs",
]
TRACE_HEADER = ["trial", "t", "label", "i_t", "step_cost", "cum_cost"]
SUMMARY_HEADER = [
    "scenario", "axis", "value", "trials", "algo",
    "mean_cost", "mean_regret", "stderr_regret",
    "mean_opt0", "mean_optk", "mean_off", "ratio",
    "epsilon", "gamma", "alpha", "seed",
]


def _trace_rows(trial, result):
    cum = 0.0
    for t in range(1, len(result.step_costs) + 1):
        cum += result.step_costs[t - 1]
        yield (trial, t, LABEL_NAMES[int(result.labels[t])],
               int(result.i_trace[t]), float(result.step_costs[t - 1]), cum)


# ---------------------------------------------------------------------------
# scenario machinery
# ---------------------------------------------------------------------------

UPPER_DEFAULTS = dict(T=2000, ell=2, m=2, family="planted", n_leaves=4,
                      radius=1.0, miss_cost=1.0, stay=4, p_noise=0.05,
                      walk_move=0.25, n_states=5, churn=0.3,
                      opt_guess=None, expert_kind=experts.HEDGE, k=0)

OPTK_DEFAULTS = dict(seg_T=1500, k=2, m=2, n_leaves=4, radius=1.0,
                     miss_cost=1.0, stay=4, p_noise=0.05, walk_move=0.25,
                     walkers="lazy", decoys=0, seg_lens=None)

LB_DEFAULTS = dict(T_blocks=1024, ell=2, m=2, loss_kind="gap_bernoulli",
                   delta=0.2, use_finite_sentinel=False)

MAB_DEFAULTS = dict(T=4096, ell=2, m=2, delta=0.15)

DOUBLING_DEFAULTS = dict(T=3000, ell=2, m=2, n_leaves=4, radius=1.0,
                         miss_cost=1.0, stay=4, p_noise=0.05, walk_move=0.25,
                         omega=1.0, R=None)


def _merged(defaults, params):
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown parameters {sorted(unknown)}")
    out = dict(defaults)
    out.update(params)
    return out


def _build_upper_point(seed, point, params):
    p = _merged(UPPER_DEFAULTS, params)
    rng = np.random.default_rng(derive_seed(seed, point, 0))
    if p["family"] == "planted":
        inst, paths = make_planted(
            rng, T=int(p["T"]), ell=int(p["ell"]), n_leaves=int(p["n_leaves"]),
            radius=p["radius"], miss_cost=p["miss_cost"], stay=int(p["stay"]),
            p_noise=p["p_noise"], walk_move=p["walk_move"],
        )
    elif p["family"] == "star":
        inst, paths = make_star_caching(
            rng, T=int(p["T"]), ell=int(p["ell"]), n_states=int(p["n_states"]),
            churn=p["churn"],
        )
    else:
        raise ConfigError(f"unknown instance family {p['family']!r}")
    wrapped = [wrap_bounded(q, inst) for q in paths]
    bench = combiner_benchmarks(inst, wrapped, int(p["k"]))
    guess = p["opt_guess"] or bench["opt0"]
    cfg = auto_config(inst.metric.diameter, int(p["ell"]), int(p["m"]), guess,
                      p["expert_kind"], int(p["k"]))
    return {"inst": inst, "paths": wrapped, "configs": {"main": cfg},
            "bench": bench, "kind": "combiner"}


def _build_optk_point(seed, point, params):
    p = _merged(OPTK_DEFAULTS, params)
    k = int(p["k"])
    decoys = int(p["decoys"])
    ell = k + 1 + decoys
    rng = np.random.default_rng(derive_seed(seed, point, 0))
    n_leaves = int(p["n_leaves"])
    pingpong = p["walkers"] == "pingpong"
    if not pingpong and p["walkers"] != "lazy":
        raise ConfigError(f"unknown walkers kind {p['walkers']!r}")
    if pingpong and n_leaves < 4:
        raise ConfigError("pingpong walkers need n_leaves >= 4")
    seg_lens = p["seg_lens"] or [int(p["seg_T"])] * (k + 1)
    if len(seg_lens) != k + 1:
        raise ConfigError(f"seg_lens must list k+1 = {k + 1} lengths")
    segments = []
    for j in range(k + 1):
        inst_j, paths_j = make_planted(
            rng, T=int(seg_lens[j]), ell=k + 1, n_leaves=n_leaves,
            radius=p["radius"], miss_cost=p["miss_cost"], stay=int(p["stay"]),
            p_noise=p["p_noise"], walk_move=p["walk_move"],
            req_leaves=np.arange(3, n_leaves + 1) if pingpong else None,
        )
        if pingpong:
            # abandoned heuristics oscillate between two never-requested
            # leaves, paying the full 2D per step; tracking becomes decisive
            paths_j = [paths_j[0]] + [
                pingpong_path(inst_j.T, 1 + (h % 2), 2 - (h % 2))
                for h in range(k)
            ]
        rotated = [paths_j[(i - j) % (k + 1)] for i in range(k + 1)]
        rotated += [pingpong_path(inst_j.T, 1 + (h % 2), 2 - (h % 2))
                    for h in range(decoys)]
        segments.append((inst_j, rotated))
    inst, paths = concat_segments(segments)
    wrapped = [wrap_bounded(q, inst) for q in paths]
    bench = combiner_benchmarks(inst, wrapped, k)
    share_cfg = auto_config(inst.metric.diameter, ell, int(p["m"]),
                            max(bench["optk"], 2 * k), experts.SHARE, k)
    hedge_cfg = auto_config(inst.metric.diameter, ell, int(p["m"]),
                            bench["opt0"], experts.HEDGE, k)
    return {"inst": inst, "paths": wrapped,
            "configs": {"share": share_cfg, "hedge": hedge_cfg},
            "bench": bench, "kind": "combiner"}


def _build_lb_point(seed, point, params):
    p = _merged(LB_DEFAULTS, params)
    rng = np.random.default_rng(derive_seed(seed, point, 0))
    ell, T_blocks = int(p["ell"]), int(p["T_blocks"])
    losses = gen_losses(p["loss_kind"], ell, T_blocks,
                        {"delta": p["delta"]} if p["loss_kind"] == "gap_bernoulli"
                        else {}, rng)
    lb = build_lb_blocks(ell, T_blocks, losses, rng,
                         use_finite_sentinel=bool(p["use_finite_sentinel"]))
    T = 3 * T_blocks
    opt_expect = 2.0 * T_blocks + float(losses.sum(axis=0).min())
    cfg = auto_config(lb.instance.metric.diameter, ell, int(p["m"]),
                      opt_expect, experts.HEDGE, 0)
    return {"lb": lb, "configs": {"main": cfg}, "kind": "lb", "T": T}


def _build_mab_point(seed, point, params):
    p = _merged(MAB_DEFAULTS, params)
    rng = np.random.default_rng(derive_seed(seed, point, 0))
    T, ell, m = int(p["T"]), int(p["ell"]), int(p["m"])
    base = gen_losses("gap_bernoulli", ell, T, {"delta": p["delta"]}, rng)
    eps, gamma = mab_hyperparams(ell, m, T)
    return {"base": base, "eps": eps, "gamma": gamma, "T": T, "ell": ell,
            "m": m, "kind": "mab"}


def _build_doubling_point(seed, point, params):
    p = _merged(DOUBLING_DEFAULTS, params)
    rng = np.random.default_rng(derive_seed(seed, point, 0))
    inst, paths = make_planted(
        rng, T=int(p["T"]), ell=int(p["ell"]), n_leaves=int(p["n_leaves"]),
        radius=p["radius"], miss_cost=p["miss_cost"], stay=int(p["stay"]),
        p_noise=p["p_noise"], walk_move=p["walk_move"],
    )
    wrapped = [wrap_bounded(q, inst) for q in paths]
    bench = combiner_benchmarks(inst, wrapped, 0)
    R = p["R"] or max(1.0, bench["opt0"] / max(bench["off"], 1e-9))
    known_cfg = auto_config(inst.metric.diameter, int(p["ell"]), int(p["m"]),
                            bench["opt0"], experts.HEDGE, 0)
    return {"inst": inst, "paths": wrapped, "bench": bench, "omega": p["omega"],
            "R": R, "m": int(p["m"]), "known_cfg": known_cfg, "kind": "doubling"}


_BUILDERS = {
    "upper_bound": _build_upper_point,
    "opt_k": _build_optk_point,
    "lower_bound": _build_lb_point,
    "mab": _build_mab_point,
    "doubling": _build_doubling_point,
}


_WORKER_CTX = None


def _init_worker(ctx):
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _run_trial_pooled(args):
    return _run_trial((_WORKER_CTX,) + args)


def _run_trial(args):
    """One trial; module-level for pickling into worker pools."""
    ctx, seed, point, trial, want_trace = args
    rows = []
    traces = {}
    if ctx["kind"] == "combiner":
        rng = np.random.default_rng(derive_seed(seed, point, trial, 1))
        for name, cfg in ctx["configs"].items():
            res = run_combiner(ctx["inst"], ctx["paths"], cfg, rng,
                               benchmarks=ctx["bench"])
            rows.append(_result_row(trial, seed, point, name, res, cfg))
            if want_trace:
                traces[name] = res
    elif ctx["kind"] == "lb":
        path_rng = np.random.default_rng(derive_seed(seed, point, trial, 2))
        paths = [lb_heuristic(i, ctx["lb"], path_rng)
                 for i in range(ctx["lb"].ell)]
        rng = np.random.default_rng(derive_seed(seed, point, trial, 1))
        cfg = ctx["configs"]["main"]
        res = run_combiner(ctx["lb"].instance, paths, cfg, rng, with_off=False)
        rows.append(_result_row(trial, seed, point, "main", res, cfg))
        if want_trace:
            traces["main"] = res
    elif ctx["kind"] == "mab":
        rng = np.random.default_rng(derive_seed(seed, point, trial, 1))
        sched = sample_schedule(ctx["T"], ctx["eps"], ctx["ell"], ctx["m"], rng)
        st = experts.init(ctx["ell"], rate_from_gamma(ctx["gamma"]))
        adv = switching_cost_adversary(ctx["base"])
        res = mab_play(sched, st, adv, ctx["T"], rng)
        rows.append((trial, derive_seed(seed, point, trial, 1), "mab",
                     res.total_loss, res.best_fixed, math.nan, math.nan,
                     res.regret, math.nan, res.chain_switches,
                     res.explore_count, ctx["eps"], ctx["gamma"], 0.0, 1))
    else:  # doubling
        alg_seed = derive_seed(seed, point, trial, 1)
        res_d = run_doubling(ctx["inst"], ctx["paths"], ctx["omega"], ctx["R"],
                             np.random.default_rng(alg_seed), m=ctx["m"],
                             benchmarks=ctx["bench"])
        res_k = run_combiner(ctx["inst"], ctx["paths"], ctx["known_cfg"],
                             np.random.default_rng(alg_seed),
                             benchmarks=ctx["bench"])
        rows.append(_result_row(trial, seed, point, "doubling", res_d,
                                res_d.config, epochs=len(res_d.epochs)))
        rows.append(_result_row(trial, seed, point, "known_opt", res_k,
                                ctx["known_cfg"]))
        if want_trace:
            traces["doubling"] = res_d
    return rows, traces


def _result_row(trial, seed, point, algo, res, cfg, epochs=1):
    return (trial, derive_seed(seed, point, trial, 1), algo,
            res.total_cost, res.opt0, res.optk, res.off,
            res.regret0, res.regretk, res.switch_count, res.explore_count,
            cfg.epsilon, cfg.gamma, cfg.alpha, epochs)


def run_point(config: ExperimentConfig, point: int = 0, value=None):
    """Run all trials of one experiment point; returns (trial rows, trace
    rows, summary rows)."""
    ctx = _BUILDERS[config.scenario](config.seed, point, config.params)
    args = [(config.seed, point, trial, trial < config.trace_trials)
            for trial in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers,
                                 initializer=_init_worker,
                                 initargs=(ctx,)) as pool:
            outs = list(pool.map(_run_trial_pooled, args, chunksize=4))
    else:
        outs = [_run_trial((ctx,) + a) for a in args]

    trial_rows, trace_rows = [], []
    by_algo: dict = {}
    for trial, (rows, traces) in enumerate(outs):
        trial_rows.extend(rows)
        for row in rows:
            by_algo.setdefault(row[2], []).append(row)
        for name, res in traces.items():
            trace_rows.extend(_trace_rows(trial, res))

    summary_rows = []
    for algo, rows in sorted(by_algo.items()):
        cost = np.array([r[3] for r in rows], dtype=float)
        opt0 = np.array([r[4] for r in rows], dtype=float)
        optk = np.array([r[5] for r in rows], dtype=float)
        off = np.array([r[6] for r in rows], dtype=float)
        if config.scenario == "mab":
            regret = np.array([r[7] for r in rows], dtype=float)
            base = opt0
        elif algo == "share":
            regret = np.array([r[8] for r in rows], dtype=float)
            base = optk
        else:
            regret = np.array([r[7] for r in rows], dtype=float)
            base = opt0
        stderr = float(regret.std(ddof=1) / math.sqrt(len(regret))) if len(regret) > 1 else 0.0
        summary_rows.append((
            config.scenario, "point", value if value is not None else point,
            len(rows), algo,
            float(cost.mean()), float(regret.mean()), stderr,
            float(opt0.mean()), float(np.nanmean(optk)) if np.any(~np.isnan(optk)) else math.nan,
            float(np.nanmean(off)) if np.any(~np.isnan(off)) else math.nan,
            float(cost.mean() / base.mean()) if base.mean() > 0 else math.nan,
            rows[0][11], rows[0][12], rows[0][13], config.seed,
        ))
    return trial_rows, trace_rows, summary_rows


def run_experiment(config: ExperimentConfig) -> list:
    """Run one point and write the three CSV files; returns summary rows."""
    trial_rows, trace_rows, summary_rows = run_point(config)
    _write_outputs(config.out, trial_rows, trace_rows, summary_rows)
    return summary_rows


SWEEP_AXES = {
    "upper_bound": ("T", "ell", "m", "opt_scale"),
    "opt_k": ("seg_T", "k", "m", "opt_scale"),
    "lower_bound": ("T_blocks", "ell", "m", "opt_scale"),
    "mab": ("T", "ell", "m", "opt_scale"),
    "doubling": ("T", "ell", "m", "opt_scale"),
}

_SCALE_TARGET = {"upper_bound": "T", "opt_k": "seg_T",
                 "lower_bound": "T_blocks", "mab": "T", "doubling": "T"}


def sweep(config: ExperimentConfig, axis: str, values) -> list:
    """One summary row per axis value, plus fitted log-log regret slopes.

    axis "opt_scale" multiplies the scenario's horizon parameter, which
    scales the benchmark roughly linearly.
    """
    values = list(values)
    if len(values) < 3:
        raise ConfigError("sweep needs at least 3 axis values for the slope fit")
    if axis not in SWEEP_AXES[config.scenario]:
        raise ConfigError(
            f"axis {axis!r} not valid for scenario {config.scenario!r}"
        )
    all_trials, all_traces, all_summary = [], [], []
    for point, v in enumerate(values):
        params = dict(config.params)
        if axis == "opt_scale":
            target = _SCALE_TARGET[config.scenario]
            base = params.get(target, _defaults_for(config.scenario)[target])
            params[target] = int(round(base * v))
        else:
            params[axis] = v
        cfg = ExperimentConfig(seed=config.seed, trials=config.trials,
                               scenario=config.scenario, out=config.out,
                               params=params, trace_trials=0,
                               workers=config.workers)
        t_rows, tr_rows, s_rows = run_point(cfg, point=point, value=v)
        all_trials.extend(t_rows)
        all_traces.extend(tr_rows)
        for row in s_rows:
            all_summary.append(row[:1] + (axis,) + row[2:])
    slopes = _sweep_slopes(all_summary, values)
    out_rows = []
    for row in all_summary:
        algo = row[4]
        out_rows.append(row + (slopes.get(algo, (math.nan, math.nan))[0],
                               slopes.get(algo, (math.nan, math.nan))[1]))
    _write_outputs(config.out, all_trials, all_traces, out_rows,
                   summary_header=SUMMARY_HEADER + ["slope_vs_axis",
                                                    "slope_vs_opt"])
    return out_rows


def _defaults_for(scenario):
    return {
        "upper_bound": UPPER_DEFAULTS, "opt_k": OPTK_DEFAULTS,
        "lower_bound": LB_DEFAULTS, "mab": MAB_DEFAULTS,
        "doubling": DOUBLING_DEFAULTS,
    }[scenario]


def _sweep_slopes(summary_rows, values):
    """Per-algorithm slope of mean regret vs axis value and vs mean opt0."""
    slopes = {}
    by_algo: dict = {}
    for row in summary_rows:
        by_algo.setdefault(row[4], []).append(row)
    for algo, rows in by_algo.items():
        xs = [row[2] for row in rows]
        regs = [max(row[6], 1e-12) for row in rows]
        opts = [row[8] for row in rows]
        try:
            s_axis = fit_loglog_slope(xs, regs)
        except ValueError:
            s_axis = math.nan
        try:
            s_opt = fit_loglog_slope(opts, regs)
        except ValueError:
            s_opt = math.nan
        slopes[algo] = (s_axis, s_opt)
    return slopes


def _write_outputs(out_prefix, trial_rows, trace_rows, summary_rows,
                   summary_header=None):
    base = str(out_prefix)
    parent = os.path.dirname(base)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_csv(base + "_trials.csv", TRIAL_HEADER, trial_rows)
    write_csv(base + "_trace.csv", TRACE_HEADER, trace_rows)
    write_csv(base + "_summary.csv", summary_header or SUMMARY_HEADER,
              summary_rows)
