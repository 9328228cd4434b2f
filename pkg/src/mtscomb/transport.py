"""Total-variation earth-mover distance on the simplex and the Round coupling.

Only the simplex coupling is implemented; rounding with respect to a general
metric (the EMD of the ambient space) is intentionally out of scope, since the
combiner over heuristics only needs the D/2 * l1 overestimate.
"""

from __future__ import annotations

import numpy as np

CLAMP_TOL = 1e-12
SUM_TOL = 1e-9


def as_distribution(p) -> np.ndarray:
    """Validate and clean a simplex point.

    Entries below -1e-12 or a total off by more than 1e-9 are errors; tiny
    negatives (float drift from repeated expert updates) are clamped to 0 and
    the vector renormalized.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("distribution must be a vector")
    if np.any(p < -CLAMP_TOL):
        raise ValueError(f"negative probability beyond tolerance: min={p.min()}")
    total = p.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"probabilities sum to {total}, not 1")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def tv_emd(p, q) -> float:
    """sum_i max(0, p(i) - q(i)), i.e. half the l1 distance."""
    p, q = as_distribution(p), as_distribution(q)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(np.maximum(p - q, 0.0).sum())


def greedy_transport_plan(p, q) -> np.ndarray:
    """Transport plan with row sums p and column sums q.

    The diagonal keeps min(p(i), q(i)); surpluses are matched to deficits in
    ascending index order (northwest corner on the residuals), so the
    off-diagonal mass equals tv_emd(p, q).
    """
    p, q = as_distribution(p), as_distribution(q)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    n = p.shape[0]
    tau = np.zeros((n, n))
    keep = np.minimum(p, q)
    np.fill_diagonal(tau, keep)
    surplus = p - keep
    deficit = q - keep
    i = j = 0
    while i < n and j < n:
        if surplus[i] <= CLAMP_TOL:
            i += 1
            continue
        if deficit[j] <= CLAMP_TOL:
            j += 1
            continue
        move = min(surplus[i], deficit[j])
        tau[i, j] += move
        surplus[i] -= move
        deficit[j] -= move
    return tau


def round_step(i_prev: int, p, q, rng) -> int:
    """One step of the Round coupling: sample the next index.

    Given the previous index i_prev distributed as p, returns j with
    probability tau[i_prev, j] / p(i_prev), so that the output is distributed
    as q and the switch probability equals tv_emd(p, q).
    """
    p_arr, q_arr = as_distribution(p), as_distribution(q)
    if p_arr[i_prev] <= 0:
        raise ValueError(
            f"round_step at index {i_prev} with zero mass; coupling invariant broken"
        )
    tau = greedy_transport_plan(p_arr, q_arr)
    row = tau[i_prev] / tau[i_prev].sum()
    return int(rng.choice(len(row), p=row))
