import numpy as np
import pytest

from mtscomb.transport import greedy_transport_plan, round_step, tv_emd


def random_simplex(rng, n):
    v = rng.random(n) + 1e-3
    return v / v.sum()


from _oracles import simulate_chain_counts, switch_moments


class TestTvEmd:
    def test_identical(self):
        assert tv_emd([0.5, 0.5], [0.5, 0.5]) == 0

    def test_disjoint(self):
        assert tv_emd([1, 0], [0, 1]) == 1

    def test_spec_value(self):
        assert tv_emd([0.7, 0.3], [0.4, 0.6]) == pytest.approx(0.3)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            tv_emd([1.0], [0.5, 0.5])

    def test_half_l1_and_metric_axioms(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(2, 6))
            p, q, r = (random_simplex(rng, n) for _ in range(3))
            assert tv_emd(p, q) == pytest.approx(0.5 * np.abs(p - q).sum())
            assert tv_emd(p, q) == pytest.approx(tv_emd(q, p))
            assert tv_emd(p, r) <= tv_emd(p, q) + tv_emd(q, r) + 1e-12

    def test_clamps_tiny_negatives(self):
        assert tv_emd([1.0 + 5e-13, -5e-13], [1.0, 0.0]) == pytest.approx(0.0, abs=1e-9)

    def test_rejects_large_negative(self):
        with pytest.raises(ValueError):
            tv_emd([1.1, -0.1], [0.5, 0.5])


class TestGreedyTransportPlan:
    def test_identity(self):
        p = np.array([0.2, 0.3, 0.5])
        tau = greedy_transport_plan(p, p)
        assert np.allclose(tau, np.diag(p))

    def test_spec_example(self):
        tau = greedy_transport_plan([0.7, 0.3], [0.4, 0.6])
        assert np.allclose(tau, [[0.4, 0.3], [0.0, 0.3]])

    def test_single_source_split(self):
        tau = greedy_transport_plan([1, 0, 0], [0, 0.5, 0.5])
        assert tau[0, 1] == pytest.approx(0.5) and tau[0, 2] == pytest.approx(0.5)

    def test_marginals_and_offdiagonal_mass(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            n = int(rng.integers(2, 7))
            p, q = random_simplex(rng, n), random_simplex(rng, n)
            tau = greedy_transport_plan(p, q)
            assert np.all(tau >= 0)
            assert np.allclose(tau.sum(axis=1), p, atol=1e-9)
            assert np.allclose(tau.sum(axis=0), q, atol=1e-9)
            off = tau.sum() - np.trace(tau)
            assert off == pytest.approx(tv_emd(p, q), abs=1e-9)


class TestRoundStep:
    def test_forced_move(self):
        rng = np.random.default_rng(0)
        assert round_step(0, [1, 0], [0, 1], rng) == 1

    def test_identity_plan(self):
        rng = np.random.default_rng(0)
        for i in range(2):
            assert round_step(i, [0.4, 0.6], [0.4, 0.6], rng) == i

    def test_spec_row_probabilities(self):
        rng = np.random.default_rng(1)
        draws = np.array(
            [round_step(0, [0.7, 0.3], [0.4, 0.6], rng) for _ in range(20000)]
        )
        assert (draws == 0).mean() == pytest.approx(4 / 7, abs=0.02)

    def test_zero_mass_rejected(self):
        rng = np.random.default_rng(2)
        with pytest.raises(ValueError, match="zero mass"):
            round_step(1, [1, 0], [0.5, 0.5], rng)

    def test_chain_marginals_and_switches(self):
        rng = np.random.default_rng(33)
        n_samples = 100_000
        for _ in range(10):
            n = int(rng.integers(2, 6))
            T = 20
            chain = [random_simplex(rng, n) for _ in range(T + 1)]
            trace, switches = simulate_chain_counts(chain, n_samples, rng)
            for t, counts in enumerate(trace):
                emp = counts / n_samples
                tv = 0.5 * np.abs(emp - chain[t]).sum()
                assert tv <= 0.02, f"marginal drift {tv} at t={t}"
            mean, var = switch_moments(chain)
            expected = sum(tv_emd(chain[t], chain[t + 1]) for t in range(T))
            assert mean == pytest.approx(expected, abs=1e-9)
            stderr = np.sqrt(var / n_samples)
            assert abs(switches / n_samples - expected) <= 3 * stderr + 1e-9
