"""Multi-armed bandits against memory-bounded adversaries.

Reuses the exploration schedule and expert distributions of the combiner:
exploitation steps play the Round-sampled arm, and each skip/explore window
plays its pre-sampled pick for m consecutive steps, so the adversary's loss
for that arm's constant policy is observed exactly at the exploration step.
The loss scale is fixed to 1 here (the MTS diameter plays no role), so the
exploration feedback is the observed loss itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import experts
from .combiner import EXPLORE, SKIP, ExplorationSchedule
from .transport import round_step, tv_emd

EPS_CAP_MAB = 0.49


@dataclass(frozen=True)
class MemoryAdversary:
    """Loss depends only on t and the trailing window of actions.

    ``loss_rule(t, window)`` receives the last ``window`` actions ending at
    step t (padded with the initial arm before the horizon). Constant-window
    losses must lie in [0, 1]; realized losses may exceed 1 when the rule
    encodes penalties such as switching costs.
    """

    window: int
    loss_rule: Callable[[int, tuple], float]
    const: Optional[np.ndarray] = None  # (T, ell) constant-policy losses

    def constant_losses(self, T: int, ell: int) -> np.ndarray:
        if self.const is not None:
            if self.const.shape[0] < T or self.const.shape[1] != ell:
                raise ValueError("precomputed constant losses have wrong shape")
            out = self.const[:T]
        else:
            out = np.array(
                [[self.loss_rule(t, (i,) * self.window) for i in range(ell)]
                 for t in range(1, T + 1)]
            )
        if out.min() < -1e-9 or out.max() > 1 + 1e-9:
            raise ValueError("constant-policy losses must lie in [0, 1]")
        return out


def constant_adversary(value: float, window: int = 2) -> MemoryAdversary:
    """Same loss at every step regardless of play."""
    return MemoryAdversary(window=window, loss_rule=lambda t, w: value)


def switching_cost_adversary(base_losses) -> MemoryAdversary:
    """Loss base[t, i_t] + 1 whenever the arm changed from the previous step."""
    base = np.asarray(base_losses, dtype=float)
    if np.any(base < 0) or np.any(base > 1):
        raise ValueError("base losses must lie in [0, 1]")

    def rule(t, w):
        return float(base[t - 1, w[-1]]) + (1.0 if w[-1] != w[-2] else 0.0)

    return MemoryAdversary(window=2, loss_rule=rule, const=base)


def mab_hyperparams(ell: int, m: int, T: int):
    """(epsilon, gamma) = ((l ln l)^(1/3) m^(-2/3) T^(-1/3),
    (m l ln l)^(1/3) T^(-1/3)), clamped into (0, 0.49]."""
    if T < 1 or ell < 2 or m < 1:
        raise ValueError("need T >= 1, ell >= 2, m >= 1")
    eps = (ell * math.log(ell)) ** (1 / 3) * m ** (-2 / 3) * T ** (-1 / 3)
    gamma = (m * ell * math.log(ell)) ** (1 / 3) * T ** (-1 / 3)
    return min(eps, EPS_CAP_MAB), min(gamma, EPS_CAP_MAB)


@dataclass
class MabResult:
    actions: np.ndarray        # (T+1,), index 0 = initial arm
    total_loss: float
    best_fixed: float          # min over arms of the constant policy's loss
    regret: float
    chain_switches: int        # switches of the Round-sampled arm chain
    tv_sum: float
    explore_count: int


def mab_play(schedule: ExplorationSchedule, expert_state, adversary: MemoryAdversary,
             T: int, rng) -> MabResult:
    """Play T rounds against a memory-bounded adversary.

    The action sequence is generated per the schedule (exploit steps play the
    Round chain, windows play their pick); the realized loss is evaluated
    with the adversary's rule, using the precomputed constant-window matrix
    away from action changes.
    """
    if adversary.window > schedule.m:
        raise ValueError(
            f"adversary window {adversary.window} exceeds schedule delay {schedule.m}"
        )
    ell = expert_state.ell
    m = schedule.m
    const = adversary.constant_losses(T, ell)
    labels = schedule.labels

    actions = np.empty(T + 1, dtype=np.int64)
    actions[0] = int(rng.integers(ell))
    i_cur = int(actions[0])
    x = expert_state.distribution()
    pending = None
    chain_switches = 0
    tv_sum = 0.0

    def _apply_pending():
        nonlocal x, pending, i_cur, chain_switches, tv_sum
        if pending is None:
            return
        if np.abs(pending - x).max() > 1e-12:
            new_i = round_step(i_cur, x, pending, rng)
            tv_sum += tv_emd(x, pending)
            if new_i != i_cur:
                chain_switches += 1
            i_cur = new_i
        x = pending
        pending = None

    # walk windows: exploit runs are constant, each window plays its pick
    explores = np.flatnonzero(labels == EXPLORE)
    seg_start = 1
    for tau in explores:
        tau = int(tau)
        win_start = tau - m + 1
        if win_start > seg_start:
            _apply_pending()
            actions[seg_start:win_start] = i_cur
        e = int(schedule.picks[tau])
        actions[win_start : tau + 1] = e
        g = np.zeros(ell)
        g[e] = const[tau - 1, e]
        expert_state = experts.update(expert_state, g)
        pending = expert_state.distribution()
        seg_start = tau + 1
    if seg_start <= T:
        # trailing exploit run, possibly cut short by a truncated window
        tail_skips = np.flatnonzero(labels[seg_start:] == SKIP)
        cut = seg_start + int(tail_skips[0]) if tail_skips.size else T + 1
        if cut > seg_start:
            _apply_pending()
            actions[seg_start:cut] = i_cur
        if cut <= T:
            actions[cut:] = int(schedule.picks[schedule.window_tau[cut]])
    explore_count = int(explores.size)

    total = float(const[np.arange(T), actions[1:]].sum())
    # correct the steps whose trailing window is not constant
    w = adversary.window
    changes = np.flatnonzero(actions[1:] != actions[:-1]) + 1
    mixed = set()
    for c in changes:
        mixed.update(range(c, min(c + w - 1, T + 1)))
    for t in mixed:
        a_t = int(actions[t])
        lo = t - w + 1
        win = tuple(int(actions[max(u, 0)]) for u in range(lo, t + 1))
        total += adversary.loss_rule(t, win) - float(const[t - 1, a_t])

    col = const.sum(axis=0)
    best_fixed = float(col.min())
    return MabResult(
        actions=actions,
        total_loss=total,
        best_fixed=best_fixed,
        regret=total - best_fixed,
        chain_switches=chain_switches,
        tv_sum=tv_sum,
        explore_count=explore_count,
    )
