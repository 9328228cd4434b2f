import math

import numpy as np
import pytest

from mtscomb import experts
from mtscomb.combiner import sample_schedule
from mtscomb.experts import rate_from_gamma
from mtscomb.mab import (
    MemoryAdversary,
    constant_adversary,
    mab_hyperparams,
    mab_play,
    switching_cost_adversary,
)


def realized_loss(adversary, actions, T):
    """Literal per-step evaluation of the adversary's rule (test oracle)."""
    total = 0.0
    w = adversary.window
    for t in range(1, T + 1):
        win = tuple(int(actions[max(u, 0)]) for u in range(t - w + 1, t + 1))
        total += adversary.loss_rule(t, win)
    return total


def play(adversary, T, ell=2, m=2, eps=None, gamma=None, seed=0):
    rng = np.random.default_rng(seed)
    if eps is None or gamma is None:
        eps_f, gamma_f = mab_hyperparams(ell, m, T)
        eps = eps if eps is not None else eps_f
        gamma = gamma if gamma is not None else gamma_f
    sched = sample_schedule(T, eps, ell, m, rng)
    st = experts.init(ell, rate_from_gamma(gamma))
    return mab_play(sched, st, adversary, T, rng)


class TestAdversaries:
    def test_constant_loss_total(self):
        res = play(constant_adversary(0.25), T=400, seed=1)
        assert res.total_loss == pytest.approx(400 * 0.25)

    def test_switching_no_switch_no_penalty(self):
        base = np.zeros((10, 2))
        adv = switching_cost_adversary(base)
        actions = np.zeros(11, dtype=int)
        assert realized_loss(adv, actions, 10) == 0

    def test_switching_alternating_pays_t_minus_1(self):
        base = np.zeros((10, 2))
        adv = switching_cost_adversary(base)
        actions = np.array([0] + [(t + 1) % 2 for t in range(1, 11)])
        # first play equals the initial arm, every later step alternates
        assert realized_loss(adv, actions, 10) == 9

    def test_switching_random_play_half_penalty(self):
        rng = np.random.default_rng(2)
        base = np.zeros((200, 2))
        adv = switching_cost_adversary(base)
        pens = []
        for _ in range(300):
            actions = np.concatenate([[0], rng.integers(0, 2, 200)])
            pens.append(realized_loss(adv, actions, 200))
        # switches happen w.p. 1/2 at each of the 200 window positions except
        # the first play matches the initial arm w.p. 1/2 as well
        assert np.mean(pens) == pytest.approx(100, abs=3 * np.std(pens) / math.sqrt(300))

    def test_rejects_base_out_of_range(self):
        with pytest.raises(ValueError):
            switching_cost_adversary(np.full((5, 2), 1.5))


class TestMabHyperparams:
    def test_frozen_value(self):
        eps, gamma = mab_hyperparams(2, 2, 10**6)
        assert eps == pytest.approx((2 * math.log(2)) ** (1 / 3) * 2 ** (-2 / 3) / 100)
        assert eps == pytest.approx(0.0070244, abs=1e-6)

    def test_cube_root_scaling_in_T(self):
        e1, _ = mab_hyperparams(2, 2, 10**3)
        e2, _ = mab_hyperparams(2, 2, 10**6)
        assert e1 == pytest.approx(10 * e2)

    def test_gamma_doubles_with_m_times_8(self):
        _, g1 = mab_hyperparams(2, 2, 10**7)
        _, g8 = mab_hyperparams(2, 16, 10**7)
        assert g8 == pytest.approx(2 * g1)


class TestMabPlay:
    def test_eps_zero_plays_single_arm(self):
        rng = np.random.default_rng(3)
        base = rng.random((300, 3))
        adv = switching_cost_adversary(base)
        res = play(adv, T=300, ell=3, eps=0.0, gamma=0.2, seed=4)
        arm = res.actions[0]
        assert np.all(res.actions == arm)
        assert res.total_loss == pytest.approx(float(base[:, arm].sum()))
        assert res.chain_switches == 0

    def test_total_matches_naive_rule_evaluation(self):
        rng = np.random.default_rng(5)
        for trial in range(15):
            T = int(rng.integers(50, 400))
            ell = int(rng.integers(2, 4))
            m = int(rng.integers(2, 5))
            base = rng.random((T, ell))
            adv = switching_cost_adversary(base)
            res = play(adv, T=T, ell=ell, m=m, eps=0.25, gamma=0.4,
                       seed=100 + trial)
            assert res.total_loss == pytest.approx(
                realized_loss(adv, res.actions, T), abs=1e-9
            )

    def test_three_memory_adversary(self):
        # loss 1 unless the last three actions are identical
        rng = np.random.default_rng(6)

        def rule(t, w):
            return 0.0 if len(set(w)) == 1 else 1.0

        adv = MemoryAdversary(window=3, loss_rule=rule)
        res = play(adv, T=200, ell=2, m=3, eps=0.2, gamma=0.4, seed=7)
        assert res.total_loss == pytest.approx(realized_loss(adv, res.actions, 200))

    def test_window_played_constant_during_explores(self):
        rng = np.random.default_rng(8)
        base = rng.random((500, 2))
        adv = switching_cost_adversary(base)
        res = play(adv, T=500, ell=2, m=4, eps=0.15, gamma=0.3, seed=9)
        sched = sample_schedule(500, 0.15, 2, 4, np.random.default_rng(9))
        explores = np.flatnonzero(sched.labels == 2)
        for tau in explores:
            window = res.actions[tau - 3 : tau + 1]
            assert len(set(window.tolist())) == 1

    def test_adversary_window_exceeding_m_rejected(self):
        adv = MemoryAdversary(window=5, loss_rule=lambda t, w: 0.0)
        with pytest.raises(ValueError, match="window"):
            play(adv, T=50, ell=2, m=2, eps=0.1, gamma=0.3)

    def test_chain_switches_track_tv(self):
        rng = np.random.default_rng(10)
        base = rng.random((60, 2))
        adv = switching_cost_adversary(base)
        diffs = []
        for trial in range(1500):
            res = play(adv, T=60, ell=2, m=2, eps=0.3, gamma=0.5,
                       seed=5000 + trial)
            diffs.append(res.chain_switches - res.tv_sum)
        diffs = np.array(diffs)
        stderr = diffs.std(ddof=1) / math.sqrt(len(diffs))
        assert abs(diffs.mean()) <= 3 * stderr + 1e-12
