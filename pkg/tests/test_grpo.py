import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinkanywhere import _kernels_numba, _kernels_numpy, kernels
from thinkanywhere.grpo import (GroupTooSmall, GrpoConfig, LengthMismatch,
                                Rollout, RolloutGroup, group_advantages,
                                grpo_objective, kl_penalty, prob_ratios)

CFG = GrpoConfig()


def make_rollout(logp_theta, logp_old=None, logp_ref=None, reward=0.0):
    n = len(logp_theta)
    return Rollout(tokens=list(range(n)),
                   logp_theta=logp_theta,
                   logp_old=logp_old if logp_old is not None else logp_theta,
                   logp_ref=logp_ref if logp_ref is not None else logp_theta,
                   reward=reward)


class TestAdvantages:
    def test_hand_case(self):
        adv = group_advantages([1.1, 0.1, 1.1, 0.1], CFG)
        assert np.allclose(adv, [1.0, -1.0, 1.0, -1.0], atol=1e-12)

    def test_degenerate_group_is_zero(self):
        assert np.all(group_advantages([0.5, 0.5, 0.5], CFG) == 0)

    def test_group_too_small(self):
        with pytest.raises(GroupTooSmall):
            group_advantages([1.0], CFG)

    def test_mean_zero_std_one(self):
        rng = random.Random(3)
        for _ in range(50):
            rewards = [rng.random() for _ in range(8)]
            adv = group_advantages(rewards, CFG)
            if np.std(rewards) > CFG.std_floor:
                assert abs(adv.mean()) < 1e-12
                assert abs(np.std(adv) - 1.0) < 1e-9

    def test_reward_shift_invariance(self):
        rewards = [0.0, 0.1, 1.0, 1.1]
        base = group_advantages(rewards, CFG)
        shifted = group_advantages([r + 7.5 for r in rewards], CFG)
        assert np.allclose(base, shifted, atol=1e-12)

    def test_positive_scale_preserves_ordering(self):
        rewards = [0.3, 0.9, 0.1, 0.5]
        base = group_advantages(rewards, CFG)
        scaled = group_advantages([3.0 * r for r in rewards], CFG)
        assert np.array_equal(np.sign(base), np.sign(scaled))
        assert np.array_equal(np.argsort(base), np.argsort(scaled))


class TestRatios:
    def test_on_policy_identity(self):
        r = make_rollout([-1.0, -2.0, -0.5])
        assert np.allclose(prob_ratios(r, CFG), 1.0)

    def test_single_token_hand_case(self):
        r = make_rollout([-1.0], logp_old=[-1.5])
        assert prob_ratios(r, CFG)[0] == pytest.approx(math.exp(0.5),
                                                       abs=1e-12)

    def test_sequence_mode(self):
        cfg = GrpoConfig(ratio_level="sequence")
        r = make_rollout([-1.0, -1.2, -0.7], logp_old=[-1.1, -1.0, -1.0])
        assert prob_ratios(r, cfg) == pytest.approx(math.exp(0.2), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            Rollout(tokens=[1, 2], logp_theta=[-1.0], logp_old=[-1.0, -2.0],
                    logp_ref=[-1.0, -2.0], reward=0.0)


class TestKl:
    def test_reference_match_is_zero(self):
        r = make_rollout([-1.0, -2.0])
        assert np.all(kl_penalty(r) == 0)

    def test_positive_delta_hand_case(self):
        r = make_rollout([-2.0], logp_ref=[-1.0])  # delta = +1
        assert kl_penalty(r)[0] == pytest.approx(math.e - 2.0, abs=1e-9)

    def test_negative_delta_hand_case(self):
        r = make_rollout([-1.0], logp_ref=[-2.0])  # delta = -1
        assert kl_penalty(r)[0] == pytest.approx(math.exp(-1.0), abs=1e-9)

    def test_nonnegative(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            lp = -rng.random(16)
            ref = -rng.random(16)
            r = make_rollout(lp, logp_ref=ref)
            assert np.all(kl_penalty(r) >= 0)


class TestObjective:
    def test_on_policy_objective_is_zero(self):
        group = RolloutGroup("p", [
            make_rollout([-1.0, -2.0], reward=1.1),
            make_rollout([-0.5], reward=0.1),
            make_rollout([-3.0, -1.0, -2.0], reward=1.1),
            make_rollout([-0.1], reward=0.1),
        ])
        res = grpo_objective(group, CFG)
        assert abs(res.objective) < 1e-12
        assert res.clip_fraction == 0.0

    def test_positive_advantage_clip(self):
        # rho = 1.5, A = +1 -> clipped at 1.2
        group = RolloutGroup("p", [
            make_rollout([-0.5], logp_old=[-0.5 - math.log(1.5)], reward=2.0),
            make_rollout([-0.5], reward=0.0),
        ])
        cfg = GrpoConfig(beta=0.0)
        res = grpo_objective(group, cfg)
        assert res.per_rollout[0] == pytest.approx(1.2, abs=1e-9)
        assert res.clip_fraction == pytest.approx(0.5)

    def test_negative_advantage_clip(self):
        # rho = 0.5, A = -1 -> min(-0.5, -0.8) = -0.8
        group = RolloutGroup("p", [
            make_rollout([-0.5], logp_old=[-0.5 - math.log(0.5)], reward=0.0),
            make_rollout([-0.5], reward=2.0),
        ])
        cfg = GrpoConfig(beta=0.0)
        res = grpo_objective(group, cfg)
        assert res.per_rollout[0] == pytest.approx(-0.8, abs=1e-9)

    def test_clip_inert_inside_band(self):
        rng = np.random.default_rng(5)
        rollouts = []
        for reward in (0.0, 0.5, 1.0):
            n = 5
            theta = -rng.random(n)
            # keep ratios within [1-eps, 1+eps]
            old = theta - rng.uniform(-0.15, 0.15, n)
            rollouts.append(Rollout(tokens=list(range(n)), logp_theta=theta,
                                    logp_old=old, logp_ref=theta,
                                    reward=reward))
        res = grpo_objective(RolloutGroup("p", rollouts), GrpoConfig(beta=0.0))
        assert res.clip_fraction == 0.0
        # equals unclipped surrogate
        adv = group_advantages([0.0, 0.5, 1.0], CFG)
        expected = np.mean([
            float(np.mean(np.exp(r.logp_theta - r.logp_old) * a))
            for r, a in zip(rollouts, adv)])
        assert res.objective == pytest.approx(expected, abs=1e-12)

    def test_kl_reduces_objective(self):
        group = RolloutGroup("p", [
            make_rollout([-1.0, -2.0], logp_ref=[-1.5, -2.5], reward=1.0),
            make_rollout([-1.0], logp_ref=[-0.5], reward=0.0),
        ])
        with_kl = grpo_objective(group, GrpoConfig(beta=0.1)).objective
        without = grpo_objective(group, GrpoConfig(beta=0.0)).objective
        assert with_kl < without

    def test_reward_shift_leaves_objective(self):
        rng = np.random.default_rng(9)
        rollouts = [make_rollout(list(-rng.random(4)),
                                 logp_old=list(-rng.random(4)),
                                 reward=float(r))
                    for r in rng.random(4)]
        shifted = [Rollout(r.tokens, r.logp_theta, r.logp_old, r.logp_ref,
                           r.reward + 3.0) for r in rollouts]
        cfg = GrpoConfig(beta=0.0)
        a = grpo_objective(RolloutGroup("p", rollouts), cfg).objective
        b = grpo_objective(RolloutGroup("p", shifted), cfg).objective
        assert a == pytest.approx(b, abs=1e-12)

    def test_sequence_mode_runs(self):
        group = RolloutGroup("p", [
            make_rollout([-1.0, -2.0], reward=1.0),
            make_rollout([-1.5], reward=0.0),
        ])
        res = grpo_objective(group, GrpoConfig(ratio_level="sequence"))
        assert abs(res.objective) < 1e-12

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_advantage_centering_property(self, seed):
        rng = np.random.default_rng(seed)
        rewards = rng.random(rng.integers(2, 12))
        adv = group_advantages(rewards, CFG)
        if np.std(rewards) > CFG.std_floor:
            assert abs(adv.sum()) < 1e-9


class TestKernelBackends:
    def test_backends_agree(self):
        rng = np.random.default_rng(11)
        theta = -rng.random(64)
        old = -rng.random(64)
        ref = -rng.random(64)
        np.testing.assert_allclose(
            _kernels_numpy.token_ratios(theta, old),
            _kernels_numba.token_ratios(theta, old), rtol=1e-14)
        np.testing.assert_allclose(
            _kernels_numpy.kl_terms(theta, ref),
            _kernels_numba.kl_terms(theta, ref), rtol=1e-13, atol=1e-15)
        for adv in (1.3, -0.7):
            t_np, c_np = _kernels_numpy.clipped_terms(
                np.exp(theta - old), _kernels_numpy.kl_terms(theta, ref),
                adv, 0.2, 0.001)
            t_nb, c_nb = _kernels_numba.clipped_terms(
                np.exp(theta - old), _kernels_numba.kl_terms(theta, ref),
                adv, 0.2, 0.001)
            np.testing.assert_allclose(t_np, t_nb, rtol=1e-13, atol=1e-15)
            assert c_np == c_nb

    def test_env_flag_selects_numpy(self, monkeypatch):
        from thinkanywhere.kernels import load_backend
        monkeypatch.setenv("TA_NO_NUMBA", "1")
        assert load_backend().BACKEND == "numpy"

    def test_active_backend_known(self):
        assert kernels.BACKEND in ("numpy", "numba")


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        {"epsilon": 0.0}, {"epsilon": 1.0}, {"beta": -1.0},
        {"std_floor": 0.0}, {"ratio_level": "word"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            GrpoConfig(**kwargs)
