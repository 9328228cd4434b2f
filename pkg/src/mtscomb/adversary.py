"""Adversarial lower-bound instances built from three-step cost blocks.

The metric has 3l points r_1..r_l, a_1..a_l, b_1..b_l (part M_i = {r_i, a_i,
b_i}); each block forces any finite-cost solution through an r-state, then an
a/b-state, then one of the sampled block targets sigma_j^i in {a_i, b_i}.
Heuristic i never leaves M_i and its second-step position encodes the block's
loss: it already sits at sigma with probability 1 - loss/2. The exact
multi-scale loss sequence from the switching-cost bandit lower bound is not
reproduced; pluggable stochastic generators stand in for it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import HeuristicPath, Instance, MetricSpace, validate_metric, write_instance

INF = math.inf


def lb_point_names(ell: int) -> list:
    return ([f"r{i + 1}" for i in range(ell)]
            + [f"a{i + 1}" for i in range(ell)]
            + [f"b{i + 1}" for i in range(ell)])


def r_(i: int, ell: int) -> int:
    return i


def a_(i: int, ell: int) -> int:
    return ell + i


def b_(i: int, ell: int) -> int:
    return 2 * ell + i


def build_lb_metric(ell: int) -> MetricSpace:
    """Metric closure of the lower-bound graph on 3l points.

    Edges: r_i - r_j at 1, r_i - a_i and r_i - b_i at 1. The closure gives
    d(r_i, a_j) = d(r_i, b_j) = 2 for j != i, d(a_i, b_i) = 2 and distance 3
    between a/b states of different parts.
    """
    if ell < 1:
        raise ValueError("need at least one heuristic part")
    n = 3 * ell
    dist = np.full((n, n), INF)
    np.fill_diagonal(dist, 0.0)

    def set_edge(u, v, w):
        dist[u, v] = dist[v, u] = min(dist[u, v], w)

    for i in range(ell):
        for j in range(ell):
            if i != j:
                set_edge(r_(i, ell), r_(j, ell), 1.0)
        set_edge(r_(i, ell), a_(i, ell), 1.0)
        set_edge(r_(i, ell), b_(i, ell), 1.0)
    # Floyd-Warshall closure
    for k in range(n):
        via = dist[:, k][:, None] + dist[k, :][None, :]
        np.minimum(dist, via, out=dist)
    return validate_metric(dist)


@dataclass(frozen=True)
class LBInstance:
    """A lower-bound instance plus the sampled block targets and losses."""

    ell: int
    T_blocks: int
    sigma: np.ndarray     # (T_blocks, ell) state indices, each in {a_i, b_i}
    instance: Instance    # 3 * T_blocks steps over 3l points
    losses: np.ndarray    # (T_blocks, ell) in [0, 1]


def build_lb_blocks(ell: int, T_blocks: int, losses, rng,
                    use_finite_sentinel: bool = False) -> LBInstance:
    """Assemble the block cost sequence and sample the targets sigma.

    Per block: step 1 is free exactly on the r-states, step 2 exactly off
    them, step 3 exactly on the sampled targets {sigma_j^1, ..., sigma_j^l}.
    Forbidden states carry +inf, or 2D when ``use_finite_sentinel``. The
    start state is r_1.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.shape != (T_blocks, ell):
        raise ValueError(f"losses must have shape ({T_blocks}, {ell})")
    if np.any(losses < 0) or np.any(losses > 1):
        raise ValueError("losses must lie in [0, 1]")
    metric = build_lb_metric(ell)
    n = 3 * ell
    forbidden = 2.0 * metric.diameter if use_finite_sentinel else INF

    choice = rng.integers(0, 2, size=(T_blocks, ell))  # 0 -> a_i, 1 -> b_i
    sigma = np.where(choice == 0, np.arange(ell) + ell, np.arange(ell) + 2 * ell)

    costs = np.full((3 * T_blocks, n), forbidden)
    costs[0::3, :ell] = 0.0        # step 1: r-states free
    costs[1::3, :] = 0.0           # step 2: start from all free,
    costs[1::3, :ell] = forbidden  #         then forbid the r-states
    rows = np.repeat(np.arange(T_blocks) * 3 + 2, ell)
    costs[rows, sigma.ravel()] = 0.0  # step 3: exactly the sigma targets
    inst = Instance(metric, r_(0, ell), costs)
    return LBInstance(ell=ell, T_blocks=T_blocks, sigma=sigma,
                      instance=inst, losses=losses)


def lb_heuristic(i: int, lb: LBInstance, rng) -> HeuristicPath:
    """Sample heuristic i's path: r_i, then sigma or its sibling, then sigma.

    The second-step state is sigma_t^i with probability 1 - loss_t(i)/2 and
    the other point of {a_i, b_i} otherwise, so the expected block cost is
    2 + loss_t(i) (plus the one-off start-state offset d(s_0, r_i) - 1).
    """
    if not 0 <= i < lb.ell:
        raise IndexError(f"heuristic index {i} out of range")
    ell, T = lb.ell, lb.T_blocks
    ai, bi = a_(i, ell), b_(i, ell)
    states = np.empty(3 * T + 1, dtype=np.int64)
    states[0] = lb.instance.start
    sig = lb.sigma[:, i]
    other = np.where(sig == ai, bi, ai)
    miss = rng.random(T) < lb.losses[:, i] / 2.0
    states[1::3] = r_(i, ell)
    states[2::3] = np.where(miss, other, sig)
    states[3::3] = sig
    return HeuristicPath(states)


def lb_expected_heuristic_cost(lb: LBInstance, i: int) -> float:
    """Closed-form expectation of heuristic i's total cost.

    2T + sum_t loss_t(i), corrected by the start-state boundary term
    d(s_0, r_i) - 1 in the first block.
    """
    d0 = float(lb.instance.metric.dist[lb.instance.start, r_(i, lb.ell)])
    return 2.0 * lb.T_blocks + float(lb.losses[:, i].sum()) + (d0 - 1.0)


def gen_losses(kind: str, ell: int, T_blocks: int, params: dict, rng) -> np.ndarray:
    """Stochastic loss generators standing in for the bandit lower bound.

    iid_bernoulli: every entry Bernoulli(p).
    gap_bernoulli: the best arm has mean 1/2 - delta, the rest 1/2.
    random_walk:   per-arm reflected walk with +-sigma_step increments.
    """
    params = dict(params or {})
    if kind == "iid_bernoulli":
        p = float(params.get("p", 0.5))
        if not 0 <= p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        return (rng.random((T_blocks, ell)) < p).astype(float)
    if kind == "gap_bernoulli":
        delta = float(params.get("delta", 0.1))
        if not 0 < delta < 0.5:
            raise ValueError(f"gap delta must lie in (0, 1/2), got {delta}")
        best = int(params.get("best_arm", 0))
        means = np.full(ell, 0.5)
        means[best] = 0.5 - delta
        return (rng.random((T_blocks, ell)) < means[None, :]).astype(float)
    if kind == "random_walk":
        sigma_step = float(params.get("sigma_step", 0.05))
        start = float(params.get("start", 0.5))
        if sigma_step < 0:
            raise ValueError("sigma_step must be >= 0")
        steps = np.where(rng.random((T_blocks, ell)) < 0.5, -1.0, 1.0) * sigma_step
        out = np.empty((T_blocks, ell))
        cur = np.full(ell, start)
        for t in range(T_blocks):
            cur = cur + steps[t]
            cur = np.abs(cur)          # reflect at 0
            cur = 1 - np.abs(1 - cur)  # reflect at 1
            cur = np.clip(cur, 0.0, 1.0)
            out[t] = cur
        return out
    raise ValueError(f"unknown loss generator {kind!r}")


def pad_with_free_steps(instance: Instance, paths, extra: int):
    """Append zero-cost steps during which every path stays put."""
    if extra < 0:
        raise ValueError("extra must be >= 0")
    if extra == 0:
        return instance, list(paths)
    costs = np.vstack([instance.costs, np.zeros((extra, instance.n))])
    inst = Instance(instance.metric, instance.start, costs)
    out = []
    for p in paths:
        tail = np.full(extra, p.states[-1], dtype=np.int64)
        out.append(HeuristicPath(np.concatenate([p.states, tail])))
    return inst, out


def concat_segments(segments):
    """Concatenate (Instance, paths) segments over a shared metric.

    Cost sequences and paths are joined; the movement between a segment's
    final states and the next segment's first states is charged through the
    shared metric by the usual cost accounting.
    """
    if not segments:
        raise ValueError("need at least one segment")
    inst0, paths0 = segments[0]
    ell = len(paths0)
    for inst, paths in segments[1:]:
        if inst.metric.n != inst0.metric.n or not np.array_equal(
            inst.metric.dist, inst0.metric.dist
        ):
            raise ValueError("segments must share one metric")
        if len(paths) != ell:
            raise ValueError("segments must share the heuristic count")
    costs = np.vstack([inst.costs for inst, _ in segments])
    joined = []
    for i in range(ell):
        parts = [segments[0][1][i].states]
        parts += [seg_paths[i].states[1:] for _, seg_paths in segments[1:]]
        joined.append(HeuristicPath(np.concatenate(parts)))
    return Instance(inst0.metric, inst0.start, costs), joined


def write_lb_instance(lb: LBInstance, instance_path, sidecar_path) -> None:
    """Instance in the core text format plus a JSON sidecar for sigma/losses."""
    write_instance(lb.instance, instance_path)
    payload = {
        "ell": lb.ell,
        "T_blocks": lb.T_blocks,
        "sigma": lb.sigma.tolist(),
        "losses": lb.losses.tolist(),
    }
    with open(sidecar_path, "w") as fh:
        json.dump(payload, fh)
