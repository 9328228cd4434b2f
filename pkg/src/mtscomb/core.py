"""Metric spaces, MTS instances, cost accounting, and exact benchmark oracles.

Costs live in [0, +inf] with numpy's inf as the forbidden-state sentinel.
The offline optimum and the best-k-switch combination of heuristic paths are
computed by exact dynamic programming; both support an optional exact
rational mode (fractions) for cross-checking float arithmetic in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

INF = math.inf


class MetricError(ValueError):
    """Raised when a distance matrix violates the metric axioms."""


@dataclass(frozen=True)
class MetricSpace:
    """Finite point set with a validated distance matrix.

    Construct through :func:`validate_metric`; the constructor itself does
    not re-check the axioms.
    """

    dist: np.ndarray
    diameter: float

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])


def validate_metric(dist) -> MetricSpace:
    """Validate a square distance matrix and return a MetricSpace.

    Checks non-negativity, zero diagonal, symmetry and the triangle
    inequality; error messages name the offending entry or triple.
    """
    d = np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MetricError(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if n == 0:
        raise MetricError("metric space must contain at least one point")
    if not np.all(np.isfinite(d)):
        raise MetricError("distances must be finite")
    if np.any(d < 0):
        i, j = np.argwhere(d < 0)[0]
        raise MetricError(f"negative distance at ({i},{j}): {d[i, j]}")
    if np.any(np.diag(d) != 0):
        i = int(np.argwhere(np.diag(d) != 0)[0][0])
        raise MetricError(f"nonzero diagonal at ({i},{i}): {d[i, i]}")
    if not np.array_equal(d, d.T):
        i, j = np.argwhere(d != d.T)[0]
        raise MetricError(f"asymmetry at ({i},{j}): {d[i, j]} != {d[j, i]}")
    # Triangle inequality with a tiny slack for float inputs.
    for k in range(n):
        via = d[:, k][:, None] + d[k, :][None, :]
        bad = np.argwhere(d > via + 1e-12)
        if bad.size:
            i, j = bad[0]
            raise MetricError(
                f"triangle violation {i}-{k}-{j}: d({i},{j})={d[i, j]} > "
                f"d({i},{k})+d({k},{j})={via[i, j]}"
            )
    return MetricSpace(dist=d, diameter=float(d.max()))


def normalize_costs(c) -> np.ndarray:
    """Subtract the finite minimum from a cost vector; +inf entries stay +inf.

    The result always has minimum 0. Raises if every entry is infinite (the
    instance is infeasible at that step).
    """
    c = np.asarray(c, dtype=float)
    finite = c[np.isfinite(c)]
    if finite.size == 0:
        raise ValueError("cost vector has no finite entry; step is infeasible")
    return c - finite.min()


@dataclass(frozen=True)
class Instance:
    """An online MTS input: metric, start state and T cost vectors."""

    metric: MetricSpace
    start: int
    costs: np.ndarray  # shape (T, n)

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=float)
        object.__setattr__(self, "costs", c)
        if c.ndim != 2 or c.shape[1] != self.metric.n:
            raise ValueError(
                f"costs must have shape (T, {self.metric.n}), got {c.shape}"
            )
        if c.shape[0] < 1:
            raise ValueError("instance needs at least one step (T >= 1)")
        if not 0 <= self.start < self.metric.n:
            raise ValueError(f"start state {self.start} out of range")

    @property
    def T(self) -> int:
        return self.costs.shape[0]

    @property
    def n(self) -> int:
        return self.metric.n

    def normalized(self) -> "Instance":
        """Instance with every cost vector shifted to minimum 0."""
        rows = np.stack([normalize_costs(row) for row in self.costs])
        return Instance(self.metric, self.start, rows)


@dataclass(frozen=True)
class HeuristicPath:
    """One heuristic's state sequence; position 0 is its start state.

    ``charged`` optionally holds per-step costs capped by wrap_bounded
    (length T, aligned with steps 1..T); when present it is what the
    cost accessors report.
    """

    states: np.ndarray  # shape (T+1,), int
    charged: Optional[np.ndarray] = None

    def __post_init__(self):
        s = np.asarray(self.states, dtype=int)
        object.__setattr__(self, "states", s)
        if s.ndim != 1 or s.shape[0] < 2:
            raise ValueError("path needs states for positions 0..T with T >= 1")
        if self.charged is not None:
            ch = np.asarray(self.charged, dtype=float)
            object.__setattr__(self, "charged", ch)
            if ch.shape != (s.shape[0] - 1,):
                raise ValueError("charged costs must have length T")

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1


def solution_cost(instance: Instance, states: Sequence[int]) -> float:
    """Total cost of a state sequence: sum of c_t(s_t) + d(s_{t-1}, s_t).

    ``states`` covers steps 1..T; the start state is prepended. Returns
    +inf if any occupied state has infinite cost.
    """
    states = np.asarray(states, dtype=int)
    if states.shape[0] != instance.T:
        raise ValueError(f"expected {instance.T} states, got {states.shape[0]}")
    d = instance.metric.dist
    total = 0.0
    prev = instance.start
    for t in range(instance.T):
        s = int(states[t])
        total += instance.costs[t, s] + d[prev, s]
        prev = s
    return float(total)


def heuristic_step_cost(instance: Instance, path: HeuristicPath, t: int) -> float:
    """f_t(i) = c_t(s_t^i) + d(s_{t-1}^i, s_t^i) for step t in 1..T.

    Uses the capped cost when the path was wrapped.
    """
    if not 1 <= t <= path.T:
        raise IndexError(f"step {t} out of range 1..{path.T}")
    if path.charged is not None:
        return float(path.charged[t - 1])
    s_prev, s = int(path.states[t - 1]), int(path.states[t])
    return float(instance.costs[t - 1, s] + instance.metric.dist[s_prev, s])


def heuristic_costs(instance: Instance, path: HeuristicPath) -> np.ndarray:
    """Per-step costs f_1(i)..f_T(i) as an array."""
    if path.charged is not None:
        return path.charged.copy()
    nxt = path.states[1:]
    return (
        instance.costs[np.arange(instance.T), nxt]
        + instance.metric.dist[path.states[:-1], nxt]
    )


def _to_exact(x: float):
    """float -> Fraction, keeping inf as float inf (comparisons still work)."""
    return x if math.isinf(x) else Fraction(x).limit_denominator(10**9)


def offline_opt(instance: Instance, exact: bool = False):
    """Exact offline optimum via DP over (step, state).

    Returns (cost, states) where states is the lexicographically smallest
    optimal sequence (ascending state index). ``exact=True`` runs the DP in
    rational arithmetic (test mode for float cross-checks); the default path
    is vectorized over states.
    """
    n, T = instance.n, instance.T
    for t in range(T):
        if not np.isfinite(instance.costs[t]).any():
            raise ValueError(f"instance infeasible at step {t + 1}: all costs infinite")
    if exact:
        return _offline_opt_exact(instance)

    dist = instance.metric.dist
    costs = instance.costs
    # B[t][s]: cheapest cost of steps t+1..T starting from state s at time t
    B = np.zeros((T + 1, n))
    for t in range(T - 1, -1, -1):
        tot = costs[t] + B[t + 1]
        B[t] = (dist + tot[None, :]).min(axis=1)
    opt = float(B[0, instance.start])

    # greedy forward walk: lowest state index consistent with optimality
    states = []
    prev = instance.start
    acc = 0.0
    tol = 1e-9 * max(1.0, abs(opt))
    for t in range(1, T + 1):
        vals = acc + dist[prev] + costs[t - 1] + B[t]
        ok = np.flatnonzero(np.abs(vals - opt) <= tol)
        s = int(ok[0]) if ok.size else int(np.nanargmin(np.abs(vals - opt)))
        states.append(s)
        acc += dist[prev, s] + costs[t - 1, s]
        prev = s
    return opt, states


def _offline_opt_exact(instance: Instance):
    """Rational-arithmetic twin of offline_opt (test mode)."""
    n, T = instance.n, instance.T
    conv = _to_exact
    dist = [[conv(instance.metric.dist[i, j]) for j in range(n)] for i in range(n)]
    costs = [[conv(instance.costs[t, s]) for s in range(n)] for t in range(T)]

    B = [[conv(0.0)] * n for _ in range(T + 1)]
    for t in range(T - 1, -1, -1):
        for s in range(n):
            B[t][s] = min(
                dist[s][sn] + costs[t][sn] + B[t + 1][sn]
                for sn in range(n)
                if not math.isinf(costs[t][sn])
            )
    opt = B[0][instance.start]
    states = []
    prev = instance.start
    acc = conv(0.0)
    for t in range(1, T + 1):
        row = costs[t - 1]
        for s in range(n):
            if math.isinf(row[s]):
                continue
            if acc + dist[prev][s] + row[s] + B[t][s] == opt:
                states.append(s)
                acc = acc + dist[prev][s] + row[s]
                prev = s
                break
    return float(opt), states


def _opt_k_tables(instance: Instance, paths: Sequence[HeuristicPath]):
    """Per-step stay costs (T, l) and switch costs (T, j_prev, i_next)."""
    T, ell = instance.T, len(paths)
    S = np.stack([p.states for p in paths])  # (l, T+1)
    stay = np.stack(
        [heuristic_costs(instance, p) for p in paths], axis=1
    )  # (T, l)
    nxt = S[:, 1:]  # (l, T)
    prv = S[:, :-1]
    move = (
        instance.costs[np.arange(T)[None, None, :], nxt[None, :, :]]
        + instance.metric.dist[prv[:, None, :], nxt[None, :, :]]
    )  # (j_prev, i_next, T)
    move = np.transpose(move, (2, 0, 1)).copy()  # (T, j, i)
    idx = np.arange(ell)
    move[:, idx, idx] = INF  # switching to yourself is not a switch
    return stay, move


def opt_k(instance: Instance, paths: Sequence[HeuristicPath], k: int, exact: bool = False):
    """Best combination of heuristics with at most k switches, by exact DP.

    Cost of a combination i_1..i_T is
    sum_t c_t(s_t^{i_t}) + d(s_{t-1}^{i_{t-1}}, s_t^{i_t}); on a no-switch
    step this equals f_t(i) and uses the capped value for wrapped paths.
    Switches are counted within i_1..i_T (the time-0 pick is free). Returns
    (cost, indices), lexicographically smallest among optima.
    """
    if k < 0:
        raise ValueError("switch budget k must be >= 0")
    ell = len(paths)
    if ell < 1:
        raise ValueError("need at least one heuristic path")
    T = instance.T
    for p in paths:
        if p.T != T:
            raise ValueError("all paths must cover steps 0..T")
        if int(p.states[0]) != instance.start:
            raise ValueError("paths must start at the instance start state")
    if exact:
        return _opt_k_exact(instance, paths, k)

    stay, move = _opt_k_tables(instance, paths)
    kmax = min(k, T - 1) if T > 1 else 0
    # B[t][i][s]: cheapest cost of steps t+1..T from heuristic i, s switches used
    B = np.zeros((T + 1, ell, kmax + 1))
    for t in range(T - 1, -1, -1):
        stayv = stay[t][:, None] + B[t + 1]  # (l, k+1)
        B[t] = stayv
        if kmax > 0:
            sw = (move[t][:, :, None] + B[t + 1][None, :, 1:]).min(axis=1)  # (l, k)
            B[t][:, :kmax] = np.minimum(stayv[:, :kmax], sw)
    opt = float(B[0, :, 0].min())
    if math.isinf(opt):
        raise ValueError("no finite-cost combination exists")

    indices = []
    acc = 0.0
    cur, used = None, 0
    tol = 1e-9 * max(1.0, abs(opt))
    for t in range(1, T + 1):
        best_gap, pick = INF, None
        for i in range(ell):
            if cur is None or i == cur:
                step, s_next = float(stay[t - 1][i]), used
            elif used + 1 <= kmax:
                step, s_next = float(move[t - 1][cur][i]), used + 1
            else:
                continue
            if math.isinf(step):
                continue
            gap = abs(acc + step + B[t][i][s_next] - opt)
            if gap <= tol:
                pick = (i, step, s_next)
                break
            if gap < best_gap:
                best_gap, pick = gap, (i, step, s_next)
        i, step, s_next = pick
        indices.append(i)
        acc += step
        cur, used = i, s_next
    return opt, indices


def _opt_k_exact(instance: Instance, paths: Sequence[HeuristicPath], k: int):
    """Rational-arithmetic twin of opt_k (test mode)."""
    ell, T = len(paths), instance.T
    conv = _to_exact
    dmat = instance.metric.dist
    stay = [[conv(heuristic_step_cost(instance, paths[i], t)) for i in range(ell)]
            for t in range(1, T + 1)]
    move = [
        [
            [conv(instance.costs[t - 1, int(paths[i].states[t])]
                  + dmat[int(paths[j].states[t - 1]), int(paths[i].states[t])])
             if j != i else INF
             for i in range(ell)]
            for j in range(ell)
        ]
        for t in range(1, T + 1)
    ]
    kmax = min(k, T - 1) if T > 1 else 0
    B = [[[conv(0.0)] * (kmax + 1) for _ in range(ell)] for _ in range(T + 1)]
    for t in range(T - 1, -1, -1):
        for i in range(ell):
            for s in range(kmax + 1):
                best = stay[t][i] + B[t + 1][i][s]
                if s < kmax:
                    for j in range(ell):
                        if j == i:
                            continue
                        cand = move[t][i][j] + B[t + 1][j][s + 1]
                        if cand < best:
                            best = cand
                B[t][i][s] = best
    opt = min(B[0][i][0] for i in range(ell))
    if math.isinf(opt):
        raise ValueError("no finite-cost combination exists")

    indices = []
    acc = conv(0.0)
    cur, used = None, 0
    for t in range(1, T + 1):
        for i in range(ell):
            if cur is None or i == cur:
                step, s_next = stay[t - 1][i], used
            elif used + 1 <= kmax:
                step, s_next = move[t - 1][cur][i], used + 1
            else:
                continue
            if math.isinf(step):
                continue
            if acc + step + B[t][i][s_next] == opt:
                indices.append(i)
                acc = acc + step
                cur, used = i, s_next
                break
    return float(opt), indices


# ---------------------------------------------------------------------------
# Instance text format: {n, dist row-major, start, costs rows}, "+inf" sentinel.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "+inf" if math.isinf(x) else repr(float(x))


def _parse(tok: str) -> float:
    return INF if tok in ("+inf", "inf") else float(tok)


def write_instance(instance: Instance, path) -> None:
    """Serialize an instance to the structured text format."""
    lines = [f"n {instance.n}", f"start {instance.start}", "dist"]
    for row in instance.metric.dist:
        lines.append(" ".join(_fmt(v) for v in row))
    lines.append(f"T {instance.T}")
    lines.append("costs")
    for row in instance.costs:
        lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_instance(path) -> Instance:
    """Parse an instance from the structured text format."""
    with open(path) as fh:
        toks = fh.read().split()
    pos = 0

    def take(expect=None):
        nonlocal pos
        tok = toks[pos]
        pos += 1
        if expect is not None and tok != expect:
            raise ValueError(f"expected token {expect!r}, got {tok!r}")
        return tok

    take("n")
    n = int(take())
    take("start")
    start = int(take())
    take("dist")
    dist = np.array([[_parse(take()) for _ in range(n)] for _ in range(n)])
    take("T")
    T = int(take())
    take("costs")
    costs = np.array([[_parse(take()) for _ in range(n)] for _ in range(T)])
    return Instance(validate_metric(dist), start, costs)
