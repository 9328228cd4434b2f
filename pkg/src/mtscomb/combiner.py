"""Learning dynamics and solution production for m-delayed bandit access.

The learning dynamics pre-samples exploration coin flips beta_t and uniform
picks e_t, then walks the horizon: exploitation steps follow the currently
sampled heuristic; when beta fires at an exploitation step t, the next m-1
steps are skipped (bootstrapping the pick e_{t+m} with consecutive queries)
and step t+m is an exploration step whose observed cost feeds the expert
algorithm. The produced MTS solution resamples its followed heuristic with
the Round coupling whenever the expert distribution changes, follows the
revealed state when the gateway provides one, and otherwise makes a greedy
step anchored at the last successfully queried state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import experts
from .access import QueryGateway, nearest_free_detour, wrap_bounded
from .core import HeuristicPath, Instance, offline_opt, opt_k
from .experts import rate_from_gamma
from .transport import round_step, tv_emd

EXPLOIT, SKIP, EXPLORE = 0, 1, 2
LABEL_NAMES = {EXPLOIT: "exploit", SKIP: "skip", EXPLORE: "explore"}

X_EQUAL_TOL = 1e-12
EPS_CAP = 0.49
GAMMA_CAP = 0.95
ALPHA_CAP = 0.5


@dataclass(frozen=True)
class ExplorationSchedule:
    """Pre-sampled coin flips and picks plus the derived step labels.

    Arrays are 1-indexed by time step (entry 0 unused); ``picks`` extends to
    T+m so that a window truncated by the horizon still has a well-defined
    query target. ``window_tau[t]`` is the exploration time of the window
    containing skip/explore step t.
    """

    T: int
    m: int
    beta: np.ndarray         # (T+1,) int8, beta[0] = 0
    picks: np.ndarray        # (T+m+1,) int
    labels: np.ndarray       # (T+1,) int8
    window_tau: np.ndarray   # (T+1,) int

    def explore_steps(self) -> np.ndarray:
        return np.flatnonzero(self.labels == EXPLORE)

    def query_target(self, i_t: int, t: int) -> int:
        return query_policy(self, i_t, t)


def schedule_from_arrays(beta, picks, m: int, t_start: int = 1) -> ExplorationSchedule:
    """Derive step labels from pre-sampled arrays by replaying the dynamics."""
    beta = np.asarray(beta, dtype=np.int8)
    picks = np.asarray(picks, dtype=np.int64)
    T = beta.shape[0] - 1
    if picks.shape[0] < T + m + 1:
        raise ValueError(f"picks must cover steps 1..T+m = {T + m}")
    if beta[0] != 0:
        raise ValueError("beta_0 must be 0")
    labels = np.zeros(T + 1, dtype=np.int8)
    window_tau = np.zeros(T + 1, dtype=np.int64)
    t = t_start
    while t <= T:
        labels[t] = EXPLOIT
        if beta[t]:
            tau = t + m
            for u in range(t + 1, min(tau, T + 1)):
                labels[u] = SKIP
                window_tau[u] = tau
            if tau <= T:
                labels[tau] = EXPLORE
                window_tau[tau] = tau
            t = tau
        t += 1
    return ExplorationSchedule(T=T, m=m, beta=beta, picks=picks,
                               labels=labels, window_tau=window_tau)


def sample_schedule(T: int, epsilon: float, ell: int, m: int, rng,
                    t_start: int = 1) -> ExplorationSchedule:
    """Sample beta and e arrays, then derive labels by replaying the dynamics.

    Picks are sampled for steps 1..T+m so a window truncated by the horizon
    still has a target. ``t_start`` > 1 restarts the walk mid-horizon (used
    by the doubling wrapper); earlier steps keep the exploit label but are
    never read.
    """
    if not 0 <= epsilon < 1:
        raise ValueError(f"exploration rate must lie in [0, 1), got {epsilon}")
    if m < 2:
        raise ValueError(f"delay parameter m must be >= 2, got {m}")
    beta = np.zeros(T + 1, dtype=np.int8)
    beta[1:] = rng.random(T) < epsilon
    picks = np.zeros(T + m + 1, dtype=np.int64)
    picks[1:] = rng.integers(0, ell, T + m)
    return schedule_from_arrays(beta, picks, m, t_start)


def query_policy(schedule: ExplorationSchedule, i_t: int, t: int) -> int:
    """Which heuristic to query at step t.

    Skip steps and the exploration step they lead to query the upcoming pick
    e_tau (bootstrapping it); exploitation steps query the followed i_t.
    """
    if schedule.labels[t] == EXPLOIT:
        return int(i_t)
    return int(schedule.picks[schedule.window_tau[t]])


def feedback_vector(f_value: float, e: int, D: float, ell: int) -> np.ndarray:
    """One-hot loss vector at coordinate e with value f_value / 2D."""
    bound = 2.0 * D
    if not -1e-9 <= f_value <= bound + 1e-9:
        raise ValueError(f"observed cost {f_value} outside [0, {bound}]")
    g = np.zeros(ell)
    g[e] = min(max(f_value, 0.0), bound) / bound
    return g


def dynamics_step(expert_state, schedule: ExplorationSchedule,
                  gateway: QueryGateway, t: int):
    """Expert update of one step: returns (state, x_next or None).

    Non-exploration steps leave the distribution untouched (x_{t+1} = x_t).
    On an exploration step the bootstrapped pick's observed cost must be
    available; a missing value means the query policy was violated.
    """
    if schedule.labels[t] != EXPLORE:
        return expert_state, None
    e = int(schedule.picks[schedule.window_tau[t]])
    f = gateway.observed_cost(e, t)
    if f is None:
        raise RuntimeError(
            f"exploration step {t}: cost of pick {e} not observable; "
            "bootstrap queries missing"
        )
    g = feedback_vector(f, e, gateway.instance.metric.diameter, len(gateway.paths))
    new_state = experts.update(expert_state, g)
    return new_state, new_state.distribution()


@dataclass
class ProduceState:
    """Mutable position of the produced solution."""

    i: int  # followed heuristic
    b: int  # state of the last successful query
    s: int  # algorithm's current state


def produce_step(state: ProduceState, x_prev, x_t,
                 schedule: ExplorationSchedule, gateway: QueryGateway,
                 instance: Instance, t: int, rng):
    """One step of the produced MTS solution.

    Resamples the followed heuristic via Round when the distribution moved,
    queries per the policy, then either follows the revealed state or makes
    the greedy step argmin_s d(b, s) + c_t(s) from the last known state.
    Returns (state, step_cost, resampled, revealed).
    """
    resampled = False
    i_t = state.i
    if np.abs(np.asarray(x_prev) - np.asarray(x_t)).max() > X_EQUAL_TOL:
        i_t = round_step(state.i, x_prev, x_t, rng)
        resampled = i_t != state.i
    target = query_policy(schedule, i_t, t)
    st = gateway.query(target, t)
    costs_t = instance.costs[t - 1]
    dist = instance.metric.dist
    if st is not None and target == i_t:
        serv = float(costs_t[st])
        if math.isinf(serv):
            serv = nearest_free_detour(instance, t, st)
        cost = float(dist[state.s, st]) + serv
        new = ProduceState(i=i_t, b=st, s=st)
        revealed = True
    else:
        s_t = int(np.argmin(dist[state.b] + costs_t))
        cost = float(costs_t[s_t] + dist[state.s, s_t])
        if math.isinf(cost):
            raise ValueError(f"step {t} infeasible: every state has infinite cost")
        new = ProduceState(i=i_t, b=state.b, s=s_t)
        revealed = False
    return new, cost, resampled, revealed


@dataclass(frozen=True)
class CombinerConfig:
    """Hyperparameters of one combiner run."""

    epsilon: float
    gamma: float
    m: int
    ell: int
    D: float
    alpha: float = 0.0
    expert_kind: str = experts.HEDGE
    opt_guess: Optional[float] = None
    k: int = 0

    def __post_init__(self):
        if not 0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 1/2), got {self.epsilon}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.m < 2:
            raise ValueError("m must be >= 2")


def hedge_hyperparams(D: float, ell: int, m: int, opt_guess: float):
    """(epsilon, gamma) tuned for the best-fixed-heuristic benchmark.

    epsilon = (D l ln l)^(1/3) m^(-4/3) OPT^(-1/3),
    gamma   = (D l ln l)^(1/3) m^(2/3)  OPT^(-1/3), clamped for tiny guesses.
    """
    if D <= 0 or opt_guess <= 0 or ell < 2 or m < 1:
        raise ValueError("need D > 0, opt_guess > 0, ell >= 2, m >= 1")
    base = (D * ell * math.log(ell)) ** (1 / 3) * opt_guess ** (-1 / 3)
    eps = base * m ** (-4 / 3)
    gamma = base * m ** (2 / 3)
    return min(eps, EPS_CAP), min(gamma, GAMMA_CAP)


def share_hyperparams(D: float, ell: int, m: int, k: int, opt_guess: float):
    """(epsilon, gamma, alpha) tuned for the k-switch benchmark.

    epsilon = OPT^(-1/3) (D l k)^(1/3) m^(-4/3), then
    alpha = D l k / (eps OPT) and gamma = sqrt(D l k / (eps OPT)), clamped.
    Requires opt_guess >= 2k (the tracking guarantee needs a benchmark
    at least twice the switch budget).
    """
    if D <= 0 or ell < 2 or m < 1 or k < 1:
        raise ValueError("need D > 0, ell >= 2, m >= 1, k >= 1")
    if opt_guess < 2 * k:
        raise ValueError(f"opt_guess must be >= 2k = {2 * k}, got {opt_guess}")
    eps = opt_guess ** (-1 / 3) * (D * ell * k) ** (1 / 3) * m ** (-4 / 3)
    eps = min(eps, EPS_CAP)
    ratio = D * ell * k / (eps * opt_guess)
    alpha = min(ratio, ALPHA_CAP)
    gamma = min(math.sqrt(ratio), GAMMA_CAP)
    return eps, gamma, alpha


def auto_config(D, ell, m, opt_guess, kind=experts.HEDGE, k=0) -> CombinerConfig:
    """CombinerConfig with formula-chosen hyperparameters."""
    if kind == experts.SHARE:
        eps, gamma, alpha = share_hyperparams(D, ell, m, max(k, 1), opt_guess)
        return CombinerConfig(epsilon=eps, gamma=gamma, alpha=alpha, m=m,
                              ell=ell, D=D, expert_kind=kind,
                              opt_guess=opt_guess, k=k)
    eps, gamma = hedge_hyperparams(D, ell, m, opt_guess)
    return CombinerConfig(epsilon=eps, gamma=gamma, m=m, ell=ell, D=D,
                          expert_kind=kind, opt_guess=opt_guess, k=k)


@dataclass
class RunResult:
    """Traces and benchmarks of one combiner run."""

    total_cost: float
    step_costs: np.ndarray      # (T,)
    labels: np.ndarray          # (T+1,)
    i_trace: np.ndarray         # (T+1,), followed heuristic (index 0 = i_0)
    states: np.ndarray          # (T+1,), algorithm states (index 0 = s_0)
    f_dot_x: float              # sum_t f_t . x_t (capped costs)
    l1_sum: float               # sum_t ||x_{t-1} - x_t||_1
    tv_sum: float               # sum_t tv_emd(x_{t-1}, x_t)
    switch_count: int
    explore_count: int
    audit_ok: bool
    opt0: float = math.nan
    optk: float = math.nan
    off: float = math.nan
    regret0: float = math.nan
    regretk: float = math.nan
    config: Optional[CombinerConfig] = None
    epochs: Optional[list] = None  # doubling only: [(start_t, opt_guess), ...]
    x_trace: Optional[np.ndarray] = None

    @property
    def cum_costs(self) -> np.ndarray:
        return np.cumsum(self.step_costs)


def _prepare(instance: Instance, paths):
    """Normalize the instance and cap heuristic costs once."""
    if np.all(np.nanmin(np.where(np.isfinite(instance.costs), instance.costs,
                                 np.nan), axis=1) == 0):
        inst = instance
        wrapped = [p if p.charged is not None else wrap_bounded(p, inst)
                   for p in paths]
    else:
        inst = instance.normalized()
        wrapped = [wrap_bounded(HeuristicPath(p.states), inst) for p in paths]
    return inst, wrapped


class _Engine:
    """Stepwise combiner core shared by run_combiner and run_doubling."""

    def __init__(self, inst, wrapped, F_prefix, config, gateway, rng, t_start,
                 b, s, record_x=False):
        self.inst = inst
        self.gw = gateway
        self.cfg = config
        self.rng = rng
        self.FP = F_prefix
        eta = rate_from_gamma(config.gamma)
        self.expert = experts.init(config.ell, eta, config.alpha,
                                   config.expert_kind)
        self.sched = sample_schedule(inst.T, config.epsilon, config.ell,
                                     config.m, rng, t_start)
        self.x = self.expert.distribution()
        self.pending: Optional[np.ndarray] = None
        self.state = ProduceState(i=int(rng.integers(config.ell)), b=b, s=s)
        self.seg_start = t_start
        self.f_dot_x = 0.0
        self.l1_sum = 0.0
        self.tv_sum = 0.0
        self.switches = 0
        self.explores = 0
        self.record_x = record_x
        self.x_rows: list = []

    def _close_segment(self, t_end):
        if t_end >= self.seg_start:
            seg = self.FP[t_end] - self.FP[self.seg_start - 1]
            self.f_dot_x += float(seg @ self.x)

    def step(self, t: int) -> float:
        x_prev = self.x
        if self.pending is not None:
            x_new = self.pending
            self.pending = None
            if np.abs(x_new - self.x).max() > X_EQUAL_TOL:
                self._close_segment(t - 1)
                self.seg_start = t
                self.l1_sum += float(np.abs(x_new - self.x).sum())
                self.tv_sum += tv_emd(self.x, x_new)
            self.x = x_new
        if self.record_x:
            self.x_rows.append(self.x.copy())
        old_i = self.state.i
        self.state, cost, resampled, _ = produce_step(
            self.state, x_prev, self.x, self.sched, self.gw, self.inst, t,
            self.rng,
        )
        if self.state.i != old_i:
            self.switches += 1
        if self.sched.labels[t] == EXPLORE:
            self.explores += 1
            self.expert, x_next = dynamics_step(self.expert, self.sched,
                                                self.gw, t)
            self.pending = x_next
        return cost

    def finish(self, t_end: int):
        self._close_segment(t_end)


def _benchmarks(inst, wrapped, k, with_off=True, with_optk=True):
    F = np.stack([p.charged for p in wrapped], axis=1)
    out = {"opt0": float(F.sum(axis=0).min())}
    out["off"] = offline_opt(inst)[0] if with_off else math.nan
    out["optk"] = opt_k(inst, wrapped, k)[0] if (with_optk and k >= 1) else math.nan
    return out


def run_combiner(instance: Instance, paths, config: CombinerConfig, rng,
                 benchmarks: Optional[dict] = None, record_x: bool = False,
                 with_off: bool = True) -> RunResult:
    """Run schedule, dynamics and production end to end on one instance.

    Deterministic given the rng state. ``benchmarks`` can carry precomputed
    oracle values (keys opt0/optk/off) to avoid recomputing them per trial.
    Exploitation runs are processed in blocks (the revealed portion follows
    the heuristic path directly); skip/explore windows and greedy-fallback
    steps run stepwise. Results are identical to the stepwise reference
    engine for the same rng state.
    """
    inst, wrapped = _prepare(instance, paths)
    if len(wrapped) != config.ell:
        raise ValueError(f"config.ell={config.ell} but {len(wrapped)} paths given")
    if abs(inst.metric.diameter - config.D) > 1e-9:
        raise ValueError(
            f"config.D={config.D} but instance diameter is {inst.metric.diameter}"
        )
    if record_x:
        return _run_combiner_reference(inst, wrapped, config, rng, benchmarks,
                                       record_x=True, with_off=with_off)
    T, ell = inst.T, config.ell
    dist = inst.metric.dist
    costs = inst.costs
    S = np.stack([p.states for p in wrapped])                     # (l, T+1)
    F = np.stack([p.charged for p in wrapped], axis=1)            # charged
    RAW = np.stack(
        [costs[np.arange(T), p.states[1:]] + dist[p.states[:-1], p.states[1:]]
         for p in wrapped], axis=1,
    )
    capcum = np.vstack([np.zeros(ell), np.cumsum(RAW != F, axis=0)])
    FP = np.vstack([np.zeros(ell), np.cumsum(F, axis=0)])
    gw = QueryGateway(config.m, inst, wrapped)
    expert = experts.init(ell, rate_from_gamma(config.gamma), config.alpha,
                          config.expert_kind)
    sched = sample_schedule(T, config.epsilon, ell, config.m, rng)
    labels, picks, wtau = sched.labels, sched.picks, sched.window_tau
    non_exploit = np.flatnonzero(labels[1:] != EXPLOIT) + 1

    x = expert.distribution()
    pending: Optional[np.ndarray] = None
    i_cur = int(rng.integers(ell))
    b = s = inst.start
    step_costs = np.empty(T)
    i_trace = np.empty(T + 1, dtype=np.int64)
    states = np.empty(T + 1, dtype=np.int64)
    i_trace[0], states[0] = i_cur, inst.start
    f_dot_x = l1_sum = tv_sum = 0.0
    switches = explores = 0
    seg_start = 1
    ptr = 0
    t = 1
    while t <= T:
        if pending is not None:  # x_t was set by the explore step at t-1
            if np.abs(pending - x).max() > X_EQUAL_TOL:
                f_dot_x += float((FP[t - 1] - FP[seg_start - 1]) @ x)
                seg_start = t
                l1_sum += float(np.abs(pending - x).sum())
                tv_sum += tv_emd(x, pending)
                new_i = round_step(i_cur, x, pending, rng)
                if new_i != i_cur:
                    switches += 1
                i_cur = new_i
            x = pending
            pending = None
        if labels[t] == EXPLOIT:
            while ptr < non_exploit.size and non_exploit[ptr] < t:
                ptr += 1
            t1 = int(non_exploit[ptr]) - 1 if ptr < non_exploit.size else T
            first = gw.query_run(i_cur, t, t1)
            u = t
            while u < min(first, t1 + 1):  # state unknown: greedy fallback
                crow = costs[u - 1]
                s_u = int(np.argmin(dist[b] + crow))
                cost = float(crow[s_u] + dist[s, s_u])
                if math.isinf(cost):
                    raise ValueError(
                        f"step {u} infeasible: every state has infinite cost"
                    )
                step_costs[u - 1] = cost
                states[u] = s_u
                s = s_u
                u += 1
            if first <= t1:
                pathst = S[i_cur]
                st = int(pathst[first])
                serv = float(costs[first - 1, st])
                if math.isinf(serv):
                    serv = nearest_free_detour(inst, first, st)
                step_costs[first - 1] = float(dist[s, st]) + serv
                states[first] = st
                if first < t1:
                    if capcum[t1, i_cur] > capcum[first, i_cur]:
                        prev = st
                        for v in range(first + 1, t1 + 1):
                            nxt = int(pathst[v])
                            serv = float(costs[v - 1, nxt])
                            if math.isinf(serv):
                                serv = nearest_free_detour(inst, v, nxt)
                            step_costs[v - 1] = float(dist[prev, nxt]) + serv
                            prev = nxt
                    else:
                        step_costs[first:t1] = RAW[first:t1, i_cur]
                    states[first + 1 : t1 + 1] = pathst[first + 1 : t1 + 1]
                s = int(pathst[t1])
                b = s
            i_trace[t : t1 + 1] = i_cur
            t = t1 + 1
        else:  # skip or explore step
            target = int(picks[wtau[t]])
            stq = gw.query(target, t)
            crow = costs[t - 1]
            if stq is not None and target == i_cur:
                serv = float(crow[stq])
                if math.isinf(serv):
                    serv = nearest_free_detour(inst, t, stq)
                step_costs[t - 1] = float(dist[s, stq]) + serv
                s = stq
                b = stq
            else:
                s_t = int(np.argmin(dist[b] + crow))
                cost = float(crow[s_t] + dist[s, s_t])
                if math.isinf(cost):
                    raise ValueError(
                        f"step {t} infeasible: every state has infinite cost"
                    )
                step_costs[t - 1] = cost
                s = s_t
            states[t] = s
            i_trace[t] = i_cur
            if labels[t] == EXPLORE:
                f = gw.observed_cost(target, t)
                if f is None:
                    raise RuntimeError(
                        f"exploration step {t}: cost of pick {target} not observable"
                    )
                g = feedback_vector(f, target, inst.metric.diameter, ell)
                expert = experts.update(expert, g)
                pending = expert.distribution()
                explores += 1
            t += 1
    f_dot_x += float((FP[T] - FP[seg_start - 1]) @ x)

    if benchmarks is None:
        benchmarks = _benchmarks(inst, wrapped, config.k, with_off=with_off)
    total = float(step_costs.sum())
    optk = benchmarks.get("optk", math.nan)
    return RunResult(
        total_cost=total,
        step_costs=step_costs,
        labels=labels.copy(),
        i_trace=i_trace,
        states=states,
        f_dot_x=f_dot_x,
        l1_sum=l1_sum,
        tv_sum=tv_sum,
        switch_count=switches,
        explore_count=explores,
        audit_ok=gw.audit_one_query_per_step(),
        opt0=benchmarks["opt0"],
        optk=optk,
        off=benchmarks.get("off", math.nan),
        regret0=total - benchmarks["opt0"],
        regretk=total - optk if not math.isnan(optk) else math.nan,
        config=config,
    )


def _run_combiner_reference(inst: Instance, wrapped, config: CombinerConfig,
                            rng, benchmarks=None, record_x: bool = False,
                            with_off: bool = True) -> RunResult:
    """Stepwise twin of run_combiner built on the shared engine.

    Serves the record_x path and acts as the oracle in equivalence tests of
    the block-processing fast path. Expects prepared (normalized, wrapped)
    inputs.
    """
    T = inst.T
    F = np.stack([p.charged for p in wrapped], axis=1)
    FP = np.vstack([np.zeros(config.ell), np.cumsum(F, axis=0)])
    gw = QueryGateway(config.m, inst, wrapped)
    eng = _Engine(inst, wrapped, FP, config, gw, rng, 1, inst.start,
                  inst.start, record_x)

    step_costs = np.empty(T)
    i_trace = np.empty(T + 1, dtype=np.int64)
    states = np.empty(T + 1, dtype=np.int64)
    i_trace[0] = eng.state.i
    states[0] = inst.start
    for t in range(1, T + 1):
        step_costs[t - 1] = eng.step(t)
        i_trace[t] = eng.state.i
        states[t] = eng.state.s
    eng.finish(T)

    if benchmarks is None:
        benchmarks = _benchmarks(inst, wrapped, config.k, with_off=with_off)
    total = float(step_costs.sum())
    optk = benchmarks.get("optk", math.nan)
    return RunResult(
        total_cost=total,
        step_costs=step_costs,
        labels=eng.sched.labels.copy(),
        i_trace=i_trace,
        states=states,
        f_dot_x=eng.f_dot_x,
        l1_sum=eng.l1_sum,
        tv_sum=eng.tv_sum,
        switch_count=eng.switches,
        explore_count=eng.explores,
        audit_ok=gw.audit_one_query_per_step(),
        opt0=benchmarks["opt0"],
        optk=optk,
        off=benchmarks.get("off", math.nan),
        regret0=total - benchmarks["opt0"],
        regretk=total - optk if not math.isnan(optk) else math.nan,
        config=config,
        x_trace=np.array(eng.x_rows) if record_x else None,
    )


def run_doubling(instance: Instance, paths, omega: float, R: float, rng,
                 m: int = 2, expert_kind: str = experts.HEDGE, k: int = 0,
                 benchmarks: Optional[dict] = None) -> RunResult:
    """Doubling wrapper: restart with a doubled guess when the epoch's
    offline optimum exceeds R * 2^i * omega.

    The per-epoch offline optimum is maintained online by the same DP as
    offline_opt, rooted at the algorithm's state when the epoch began; the
    restart check happens after receiving c_t (one-step lookahead), before
    acting. Restarts re-initialize the expert state, schedule and followed
    heuristic with hyperparameters derived from the new guess; the query
    gateway persists across epochs. Epoch boundaries are recorded in
    RunResult.epochs as (start step, guess).
    """
    if omega <= 0 or R < 1:
        raise ValueError("need omega > 0 and R >= 1")
    inst, wrapped = _prepare(instance, paths)
    T, n = inst.T, inst.n
    ell = len(wrapped)
    D = inst.metric.diameter
    F = np.stack([p.charged for p in wrapped], axis=1)
    FP = np.vstack([np.zeros(ell), np.cumsum(F, axis=0)])
    gw = QueryGateway(m, inst, wrapped)

    def _cfg(g):
        guess_floor = g if expert_kind == experts.HEDGE else max(g, 2 * max(k, 1))
        return auto_config(D, ell, m, guess_floor, expert_kind, k)

    epoch = 0
    guess = float(omega)
    cfg = _cfg(guess)
    eng = _Engine(inst, wrapped, FP, cfg, gw, rng, 1, inst.start, inst.start)
    epochs = [(1, guess)]
    epoch_start = 1

    dist = inst.metric.dist
    V = np.full(n, math.inf)
    V[inst.start] = 0.0

    step_costs = np.empty(T)
    labels = np.zeros(T + 1, dtype=np.int8)
    i_trace = np.empty(T + 1, dtype=np.int64)
    states = np.empty(T + 1, dtype=np.int64)
    i_trace[0] = eng.state.i
    states[0] = inst.start
    f_dot_x = l1_sum = tv_sum = 0.0
    switches = explores = 0
    for t in range(1, T + 1):
        V = inst.costs[t - 1] + (V[:, None] + dist).min(axis=0)
        if float(V.min()) > R * guess:
            eng.finish(t - 1)
            f_dot_x += eng.f_dot_x
            l1_sum += eng.l1_sum
            tv_sum += eng.tv_sum
            switches += eng.switches
            explores += eng.explores
            labels[epoch_start:t] = eng.sched.labels[epoch_start:t]
            epoch += 1
            guess = float(omega) * 2 ** epoch
            cfg = _cfg(guess)
            prev_i = eng.state.i
            # fresh algorithm instance: b restarts at the current state
            eng = _Engine(inst, wrapped, FP, cfg, gw, rng, t,
                          eng.state.s, eng.state.s)
            if eng.state.i != prev_i:
                switches += 1
            epochs.append((t, guess))
            epoch_start = t
            V = np.full(n, math.inf)
            V[states[t - 1]] = 0.0
            V = inst.costs[t - 1] + (V[:, None] + dist).min(axis=0)
        step_costs[t - 1] = eng.step(t)
        i_trace[t] = eng.state.i
        states[t] = eng.state.s
    eng.finish(T)
    f_dot_x += eng.f_dot_x
    l1_sum += eng.l1_sum
    tv_sum += eng.tv_sum
    switches += eng.switches
    explores += eng.explores
    labels[epoch_start:] = eng.sched.labels[epoch_start:]

    if benchmarks is None:
        benchmarks = _benchmarks(inst, wrapped, k)
    total = float(step_costs.sum())
    optk = benchmarks.get("optk", math.nan)
    return RunResult(
        total_cost=total,
        step_costs=step_costs,
        labels=labels,
        i_trace=i_trace,
        states=states,
        f_dot_x=f_dot_x,
        l1_sum=l1_sum,
        tv_sum=tv_sum,
        switch_count=switches,
        explore_count=explores,
        audit_ok=gw.audit_one_query_per_step(),
        opt0=benchmarks["opt0"],
        optk=optk,
        off=benchmarks.get("off", math.nan),
        regret0=total - benchmarks["opt0"],
        regretk=total - optk if not math.isnan(optk) else math.nan,
        config=cfg,
        epochs=epochs,
    )
