"""Instance families for experiments.

planted: star-metric instances where one heuristic shadows a near-optimal
offline path with rate-p noise while the others are lazy random walks, so
the best-heuristic benchmark is controllable through the horizon. The
ping-pong path is a maximally expensive filler used for tracking scenarios.
star caching: weighted-star MTS with forbidden off-request states. The
adversarial block family lives in the adversary module.
"""

from __future__ import annotations

import math

import numpy as np

from .core import HeuristicPath, Instance, MetricSpace, offline_opt, validate_metric


def star_metric(n_leaves: int, radius: float = 1.0) -> MetricSpace:
    """Hub state 0 plus n_leaves leaves at the given radius (leaf-leaf = 2r)."""
    n = n_leaves + 1
    dist = np.full((n, n), 2.0 * radius)
    dist[0, :] = radius
    dist[:, 0] = radius
    np.fill_diagonal(dist, 0.0)
    return validate_metric(dist)


def make_planted(rng, T: int, ell: int, n_leaves: int = 4, radius: float = 1.0,
                 miss_cost: float = 1.0, stay: int = 4, p_noise: float = 0.05,
                 walk_move: float = 0.25, req_leaves=None):
    """Planted-expert instance: requests persist for ~stay steps.

    Serving at the requested leaf is free, anywhere else costs miss_cost.
    Heuristic 0 follows the offline optimum, deviating to a random state with
    probability p_noise per step; the rest are lazy random walks that move
    with probability walk_move. ``req_leaves`` restricts which leaves get
    requested (default: all). Returns (instance, paths).
    """
    metric = star_metric(n_leaves, radius)
    n = n_leaves + 1
    leaves = np.asarray(req_leaves if req_leaves is not None
                        else np.arange(1, n), dtype=np.int64)
    req = np.empty(T, dtype=np.int64)
    cur = int(rng.choice(leaves))
    for t in range(T):
        if rng.random() < 1.0 / stay:
            cur = int(rng.choice(leaves))
        req[t] = cur
    costs = np.full((T, n), miss_cost)
    costs[np.arange(T), req] = 0.0
    inst = Instance(metric, 0, costs)

    _, opt_states = offline_opt(inst)
    planted = np.empty(T + 1, dtype=np.int64)
    planted[0] = 0
    noise = rng.random(T) < p_noise
    jumps = rng.integers(0, n, T)
    planted[1:] = np.where(noise, jumps, np.asarray(opt_states))
    paths = [HeuristicPath(planted)]
    for _ in range(ell - 1):
        walk = np.empty(T + 1, dtype=np.int64)
        walk[0] = 0
        moves = rng.random(T) < walk_move
        targets = rng.integers(0, n, T)
        pos = 0
        for t in range(T):
            if moves[t]:
                pos = int(targets[t])
            walk[t + 1] = pos
        paths.append(HeuristicPath(walk))
    return inst, paths


def pingpong_path(T: int, leaf_a: int = 1, leaf_b: int = 2) -> HeuristicPath:
    """Oscillates between two leaves, paying their full distance every step."""
    states = np.empty(T + 1, dtype=np.int64)
    states[0] = 0
    states[1::2] = leaf_a
    states[2::2] = leaf_b
    return HeuristicPath(states)


def make_star_caching(rng, T: int, ell: int, n_states: int = 5,
                      w_min: float = 0.25, w_max: float = 1.0,
                      churn: float = 0.3):
    """Weighted-star caching-like MTS: the requested state must be served.

    State weights are drawn once; d(i, j) = w_i + w_j. Each step one state is
    requested (free), the rest pay the forbidden sentinel, so every solution
    chases requests. Heuristics are noisy request-followers with different
    lag probabilities. Returns (instance, paths).
    """
    w = rng.uniform(w_min, w_max, n_states)
    dist = w[:, None] + w[None, :]
    np.fill_diagonal(dist, 0.0)
    metric = validate_metric(dist)
    req = np.empty(T, dtype=np.int64)
    cur = 0
    for t in range(T):
        if rng.random() < churn:
            cur = int(rng.integers(0, n_states))
        req[t] = cur
    costs = np.full((T, n_states), math.inf)
    costs[np.arange(T), req] = 0.0
    inst = Instance(metric, 0, costs)
    paths = []
    for h in range(ell):
        lag = 0.1 + 0.8 * h / max(ell - 1, 1)
        states = np.empty(T + 1, dtype=np.int64)
        states[0] = 0
        pos = 0
        lags = rng.random(T)
        for t in range(T):
            if lags[t] >= lag:
                pos = int(req[t])
            # a lagging heuristic sits at a forbidden state and gets charged
            # the wrap_bounded detour for that step
            states[t + 1] = pos
        paths.append(HeuristicPath(states))
    return inst, paths
