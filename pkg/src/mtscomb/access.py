"""The m-delayed bandit query gateway and the cost-boundedness wrapper.

A query of heuristic i at step t reveals its state only if i was also queried
at every step in {t-m+2, ..., t}; steps <= 0 count as satisfied because every
heuristic resides at the start state at time 0. Observing the cost f_t(i)
additionally needs the state at t-1, i.e. queries at t-m+1, ..., t. At most
one heuristic may be queried per time step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import HeuristicPath, Instance, heuristic_step_cost


class BudgetViolation(RuntimeError):
    """A second query was attempted at the same time step."""


@dataclass
class QueryGateway:
    """Mediates all access to the heuristic paths during one run."""

    m: int
    instance: Instance
    paths: list
    _run_len: dict = field(default_factory=dict)   # heuristic -> consecutive-query run length
    _run_end: dict = field(default_factory=dict)   # heuristic -> last queried step
    _last_t: int = 0
    log: list = field(default_factory=list)        # (t, heuristic, revealed)

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"delay parameter m must be >= 2, got {self.m}")
        for p in self.paths:
            if int(p.states[0]) != self.instance.start:
                raise ValueError("heuristic paths must start at the start state")

    def query(self, i: int, t: int) -> Optional[int]:
        """Query heuristic i at step t; returns its state or None.

        The state is revealed iff the query run covers {t-m+2, ..., t}
        (clipped at step 1).
        """
        if not 1 <= t <= self.instance.T:
            raise IndexError(f"step {t} outside 1..{self.instance.T}")
        if t <= self._last_t:
            raise BudgetViolation(
                f"step {t} already used (last query at t={self._last_t})"
            )
        self._last_t = t
        if self._run_end.get(i) == t - 1:
            self._run_len[i] += 1
        else:
            self._run_len[i] = 1
        self._run_end[i] = t
        needed = min(self.m - 1, t)
        revealed = self._run_len[i] >= needed
        self.log.append((t, i, revealed))
        return int(self.paths[i].states[t]) if revealed else None

    def query_run(self, i: int, t0: int, t1: int) -> int:
        """Query heuristic i at every step of t0..t1 in one call.

        Equivalent to calling query(i, t) for t = t0..t1; returns the first
        step whose state is revealed (t1 + 1 if none is).
        """
        if not 1 <= t0 <= t1 <= self.instance.T:
            raise IndexError(f"steps {t0}..{t1} outside 1..{self.instance.T}")
        if t0 <= self._last_t:
            raise BudgetViolation(
                f"step {t0} already used (last query at t={self._last_t})"
            )
        run_before = self._run_len.get(i, 0) if self._run_end.get(i) == t0 - 1 else 0
        if run_before >= t0 - 1:  # the run reaches back to step 1
            first = t0
        else:
            first = max(t0, t0 + (self.m - 2) - run_before)
        self._run_len[i] = run_before + (t1 - t0 + 1)
        self._run_end[i] = t1
        self._last_t = t1
        self.log.extend((u, i, u >= first) for u in range(t0, t1 + 1))
        return min(first, t1 + 1)

    def state_known(self, i: int, t: int) -> bool:
        """Whether the query already made at step t revealed heuristic i."""
        return self._run_end.get(i) == t and self._run_len[i] >= min(self.m - 1, t)

    def observed_cost(self, i: int, t: int) -> Optional[float]:
        """f_t(i) if the states at t-1 and t are both revealed, else None.

        Requires the query run to cover {t-m+1, ..., t}; the time-0 state is
        known a priori.
        """
        if self._run_end.get(i) != t or self._run_len[i] < min(self.m, t):
            return None
        return heuristic_step_cost(self.instance, self.paths[i], t)

    def export_log(self, path) -> None:
        """Audit log as CSV rows (t, heuristic, revealed)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "heuristic", "revealed"])
            writer.writerows(self.log)

    def audit_one_query_per_step(self) -> bool:
        """Every step 1..T queried exactly once."""
        times = [row[0] for row in self.log]
        return times == list(range(1, self.instance.T + 1))


def nearest_free_detour(instance: Instance, t: int, s: int) -> float:
    """Round trip from state s to the nearest zero-cost state of step t."""
    row = instance.costs[t - 1]
    free = np.flatnonzero(row == 0)
    if free.size == 0:
        raise ValueError(
            f"no zero-cost state at step {t}; costs must be normalized first"
        )
    return 2.0 * float(instance.metric.dist[s, free].min())


def wrap_bounded(path: HeuristicPath, instance: Instance) -> HeuristicPath:
    """Cap a heuristic's charged per-step cost at 2D.

    Wherever f_t exceeds twice the diameter, the charged cost becomes the
    detour value: serve at the zero-cost state nearest the predicted state
    and return (at most 2D). The state sequence itself is unchanged.
    """
    if path.T != instance.T:
        raise ValueError("path and instance horizons differ")
    bound = 2.0 * instance.metric.diameter
    nxt = path.states[1:]
    charged = (
        instance.costs[np.arange(instance.T), nxt]
        + instance.metric.dist[path.states[:-1], nxt]
    )
    for t in np.flatnonzero(charged > bound):
        charged[t] = nearest_free_detour(instance, int(t) + 1, int(nxt[t]))
    return HeuristicPath(path.states, charged)
