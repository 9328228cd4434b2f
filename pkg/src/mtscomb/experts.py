"""Full-feedback expert algorithms: HEDGE and SHARE.

Both use the multiplicative weight decay w(i) *= exp(-eta * g(i)); SHARE then
redistributes a fraction of the lost total mass, adding alpha * Delta / l to
every weight, with Delta the sum of the per-expert weight reductions. Updates
return new states; weights are renormalized every 1024 updates to keep them
away from float underflow (the induced distribution is unchanged by this).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

RENORM_EVERY = 1024
LOSS_TOL = 1e-9

HEDGE = "hedge"
SHARE = "share"


@dataclass(frozen=True)
class ExpertState:
    weights: np.ndarray
    eta: float
    alpha: float
    kind: str
    updates: int = 0

    @property
    def ell(self) -> int:
        return self.weights.shape[0]

    def distribution(self) -> np.ndarray:
        return self.weights / self.weights.sum()


def init(ell: int, eta: float, alpha: float = 0.0, kind: str = HEDGE) -> ExpertState:
    """Uniform initial weights w(i) = 1."""
    if ell < 1:
        raise ValueError("need at least one expert")
    if not eta > 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    if not 0 <= alpha <= 0.5:
        raise ValueError(f"sharing parameter must lie in [0, 1/2], got {alpha}")
    if kind not in (HEDGE, SHARE):
        raise ValueError(f"unknown expert algorithm {kind!r}")
    return ExpertState(np.ones(ell), float(eta), float(alpha), kind)


def _check_losses(state: ExpertState, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (state.ell,):
        raise ValueError(f"loss vector must have shape ({state.ell},)")
    if np.any(g < -LOSS_TOL) or np.any(g > 1 + LOSS_TOL):
        raise ValueError(f"losses must lie in [0, 1], got range [{g.min()}, {g.max()}]")
    return np.clip(g, 0.0, 1.0)


def _renorm(w: np.ndarray, updates: int) -> np.ndarray:
    if updates % RENORM_EVERY == 0:
        return w / w.sum()
    return w


def hedge_update(state: ExpertState, g) -> ExpertState:
    g = _check_losses(state, g)
    w = state.weights * np.exp(-state.eta * g)
    n = state.updates + 1
    return replace(state, weights=_renorm(w, n), updates=n)


def share_update(state: ExpertState, g) -> ExpertState:
    g = _check_losses(state, g)
    decayed = state.weights * np.exp(-state.eta * g)
    delta = float((state.weights - decayed).sum())
    w = decayed + state.alpha * delta / state.ell
    n = state.updates + 1
    return replace(state, weights=_renorm(w, n), updates=n)


def update(state: ExpertState, g) -> ExpertState:
    """Dispatch on the state's algorithm kind."""
    return share_update(state, g) if state.kind == SHARE else hedge_update(state, g)


def rate_from_gamma(gamma: float) -> float:
    """Invert gamma = 1 - exp(-eta)."""
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return -math.log1p(-gamma)


def check_stability(x_prev, x_next, g, eta: float, tol: float = 1e-9) -> bool:
    """Stability of one update: the distribution moves at most eta * g . x_prev.

    Movement is measured one-sidedly, sum_i max(0, x_prev(i) - x_next(i)),
    which equals half the l1 distance and is exactly the switch probability
    the rounding coupling pays. This is the inequality the weight-decay
    argument proves; the plain l1 distance only satisfies it with 2 * eta
    (ratios arbitrarily close to 2 occur, e.g. a single losing expert
    carrying almost no mass).
    """
    x_prev = np.asarray(x_prev, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    g = np.asarray(g, dtype=float)
    moved = float(np.maximum(x_prev - x_next, 0.0).sum())
    return moved <= eta * float(g @ x_prev) + tol
