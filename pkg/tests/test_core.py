import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shade.core import (
    EstimateBundle,
    FusionConfig,
    finite_sample_correct,
    fuse,
    score_query,
    shade_entropy,
)
from shade.graph import EntailmentMatrix

from oracles import entropy_oracle

# Frozen from the high-precision oracle before the implementation was built.
ENTROPY_HALVES_SFINAL2 = 0.69382474378629912
ENTROPY_HALVES_SFINAL4 = 0.73451002145755014


class TestFusionConfig:
    def test_defaults_valid(self):
        cfg = FusionConfig()
        assert (cfg.beta, cfg.alpha, cfg.tau, cfg.entail_threshold) == (1.0, 0.1, 0.7, 0.5)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"beta": 0.0},
            {"alpha": -1.0},
            {"tau": 0.0},
            {"tau": 1.0},
            {"entail_threshold": 1.0},
        ],
    )
    def test_out_of_range_rejected(self, kwargs):
        with pytest.raises(ValueError):
            FusionConfig(**kwargs)


class TestFuse:
    def test_convex_branch(self):
        cfg = FusionConfig(tau=0.7)
        assert fuse(5.0, 3.0, 0.8, cfg) == pytest.approx(4.6, abs=1e-12)

    def test_lse_equal_inputs_identity(self):
        cfg = FusionConfig(alpha=0.1, tau=0.7)
        assert fuse(10.0, 10.0, 0.2, cfg) == pytest.approx(10.0 + math.log(2) / 0.1, abs=1e-12)

    def test_lse_stable_form(self):
        cfg = FusionConfig(alpha=1.0, tau=0.7)
        assert fuse(10.0, 2.0, 0.2, cfg) == pytest.approx(10.0 + math.log1p(math.exp(-8.0)), abs=1e-12)

    def test_lse_no_overflow_at_clamped_cardinality(self):
        cfg = FusionConfig(alpha=0.1, tau=0.7)
        assert fuse(1e12, 3.0, 1e-12, cfg) == pytest.approx(1e12)

    def test_gate_boundary_uses_convex_at_tau(self):
        cfg = FusionConfig(tau=0.7)
        assert fuse(5.0, 3.0, 0.7, cfg) == pytest.approx(0.7 * 5.0 + 0.3 * 3.0)

    def test_each_branch_continuous_in_coverage(self):
        cfg = FusionConfig(tau=0.5)
        eps = 1e-9
        # below the gate the LSE branch ignores coverage entirely
        assert fuse(4.0, 6.0, 0.3, cfg) == fuse(4.0, 6.0, 0.5 - eps, cfg)
        # above the gate the convex branch moves smoothly with coverage
        delta = abs(fuse(4.0, 6.0, 0.6 + eps, cfg) - fuse(4.0, 6.0, 0.6, cfg))
        assert delta < 1e-7

    def test_gate_jump_measured_and_reported(self):
        # the branch switch is allowed to be discontinuous; measure the jump
        cfg = FusionConfig(alpha=0.1, tau=0.7)
        cases = [(5.0, 3.0), (3.0, 5.0), (10.0, 10.0), (1.0, 20.0)]
        for a, b in cases:
            at_gate = fuse(a, b, cfg.tau, cfg)          # convex side
            below = fuse(a, b, cfg.tau - 1e-12, cfg)    # LSE side
            jump = at_gate - below
            print(f"gate jump at tau={cfg.tau} for (s_ggt={a}, s_soft={b}): {jump:+.6f}")
            assert at_gate == fuse(a, b, cfg.tau, cfg)  # each side stays well defined

    @given(
        st.floats(0.0, 1e6),
        st.floats(0.0, 1e6),
        st.floats(0.01, 10.0),
    )
    @settings(max_examples=300)
    def test_smooth_max_sandwich(self, a, b, alpha):
        cfg = FusionConfig(alpha=alpha, tau=0.7)
        value = fuse(a, b, 0.1, cfg)
        top = max(a, b)
        assert top - 1e-9 <= value <= top + math.log(2) / alpha + 1e-9

    @given(
        st.floats(0.0, 1e6),
        st.floats(0.0, 1e6),
        st.floats(0.7, 1.0),
    )
    @settings(max_examples=300)
    def test_convex_branch_between_inputs(self, a, b, coverage):
        value = fuse(a, b, coverage, FusionConfig(tau=0.7))
        assert min(a, b) - 1e-9 <= value <= max(a, b) + 1e-9


class TestFiniteSampleCorrect:
    def test_single_class_unchanged(self):
        for n in (1, 5, 100):
            assert finite_sample_correct(3.5, 1, n) == 3.5

    def test_forced_arithmetic(self):
        assert finite_sample_correct(7.0, 4, 5) == pytest.approx(7.3, abs=1e-12)

    def test_direct_evaluation(self):
        assert finite_sample_correct(2.86, 3, 25) == pytest.approx(2.90, abs=1e-12)

    def test_sign_flip(self):
        assert finite_sample_correct(7.0, 4, 5, sign=-1.0) == pytest.approx(6.7, abs=1e-12)


class TestShadeEntropy:
    def test_deterministic_response_set(self):
        value, p_star = shade_entropy([1.0], 1, 5, 1.0)
        assert value == 0.0
        assert p_star == (1.0,)

    def test_two_even_classes(self):
        value, p_star = shade_entropy([0.5, 0.5], 2, 10, 2.0)
        assert p_star == (0.5, 0.5)
        assert value == pytest.approx(ENTROPY_HALVES_SFINAL2, abs=1e-12)

    def test_inflated_cardinality_against_oracle(self):
        value, p_star = shade_entropy([0.5, 0.5], 2, 10, 4.0)
        assert p_star == (0.25, 0.25)
        assert value == pytest.approx(ENTROPY_HALVES_SFINAL4, abs=1e-12)

    def test_frozen_values_match_oracle(self):
        assert entropy_oracle(["0.5", "0.5"], 2, 10, 2) == pytest.approx(ENTROPY_HALVES_SFINAL2, abs=1e-15)
        assert entropy_oracle(["0.5", "0.5"], 2, 10, 4) == pytest.approx(ENTROPY_HALVES_SFINAL4, abs=1e-15)

    def test_invalid_s_final(self):
        with pytest.raises(ValueError, match="s_final"):
            shade_entropy([1.0], 1, 3, 0.0)

    def test_clamping_logged(self, caplog):
        # s_final below k_obs * max(p_hat) pushes p* over 1
        with caplog.at_level(logging.WARNING, logger="shade.core"):
            value, p_star = shade_entropy([0.8, 0.2], 2, 5, 1.2)
        assert p_star[0] == 1.0
        assert 0.0 < p_star[1] <= 1.0
        assert value >= 0.0
        assert any("clamp" in r.message for r in caplog.records)

    def test_bad_p_hat_rejected(self):
        with pytest.raises(ValueError, match="sum"):
            shade_entropy([0.5, 0.4], 2, 5, 2.0)
        with pytest.raises(ValueError, match="positive"):
            shade_entropy([1.0, 0.0], 2, 5, 2.0)

    @given(st.lists(st.integers(1, 20), min_size=2, max_size=8), st.randoms())
    @settings(max_examples=100)
    def test_permutation_invariance(self, counts, rng):
        n = sum(counts)
        p_hat = [c / n for c in counts]
        shuffled = p_hat.copy()
        rng.shuffle(shuffled)
        k = len(counts)
        s_final = 1.5 * k
        assert shade_entropy(p_hat, k, n, s_final)[0] == pytest.approx(
            shade_entropy(shuffled, k, n, s_final)[0], abs=1e-12
        )

    def test_plugin_limit_at_large_n(self):
        p_hat = [0.5, 0.3, 0.2]
        value, _ = shade_entropy(p_hat, 3, 10**6, 3.0)
        plugin = -sum(p * math.log(p) for p in p_hat)
        assert value == pytest.approx(plugin, abs=1e-12)


def distinct_matrix(n):
    """All cross entailment exactly zero: n isolated responses."""
    return np.eye(n)


class TestScoreQuery:
    def test_all_distinct_low_coverage_lse(self):
        bundle = score_query(entailment=distinct_matrix(5))
        assert bundle.k_obs == 5
        assert bundle.s_soft_eigv == pytest.approx(5.0, abs=1e-12)
        # f1 = 5: generalized missing mass (1/5)(1 - 2.08/5^0.7) * 5
        expected_m = (1.0 - 2.08 / 5**0.7)
        assert bundle.coverage_ggt == pytest.approx(1.0 - expected_m, abs=1e-12)
        assert bundle.coverage_ggt < 0.7  # LSE branch
        expected_lse = fuse(bundle.s_ggt, 5.0, bundle.coverage_ggt, FusionConfig())
        assert bundle.s_hybrid == pytest.approx(expected_lse, abs=1e-12)
        assert bundle.s_final == pytest.approx(bundle.s_hybrid + (5 - 1) / 10.0, abs=1e-15)

    def test_identical_responses(self):
        bundle = score_query(entailment=np.ones((5, 5)))
        assert bundle.k_obs == 1
        assert bundle.coverage_ggt == 1.0
        assert bundle.s_hybrid == 1.0 and bundle.s_ggt == 1.0
        assert bundle.s_final == 1.0
        assert bundle.h_shade == 0.0
        assert bundle.numsets == 1.0 and bundle.dse == 0.0

    def test_labels_only_partial_bundle(self):
        bundle = score_query(labels=["A", "A", "B", "C", "C"])
        assert bundle.k_obs == 3
        assert bundle.s_ggt > 0 and bundle.s_gt > 0 and bundle.s_plugin == 3.0
        for name in ("s_soft_eigv", "u_eigv", "s_hybrid", "s_final", "h_shade", "p_star",
                     "s_hybrid_gt", "s_hybrid_ggt"):
            assert getattr(bundle, name) is None

    def test_needs_labels_or_matrix(self):
        with pytest.raises(ValueError, match="labels or an entailment"):
            score_query()

    def test_label_matrix_length_mismatch(self):
        with pytest.raises(ValueError, match="labels"):
            score_query(labels=[0, 1], entailment=np.eye(3))

    def test_p_star_sums_to_k_over_s_final(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(2, 12))
            bundle = score_query(entailment=rng.random((n, n)))
            assert sum(bundle.p_star) == pytest.approx(bundle.k_obs / bundle.s_final, abs=1e-10)
            assert bundle.h_shade >= 0.0
            assert bundle.s_final == bundle.s_hybrid + (bundle.k_obs - 1) / (2.0 * bundle.n)

    def test_ungated_hybrids(self):
        bundle = score_query(entailment=distinct_matrix(4))
        gt_cov = 1.0 - 4 / 4.0  # f1 = n = 4 -> clamped
        assert bundle.s_hybrid_gt == pytest.approx(
            max(gt_cov, 1e-12) * bundle.s_gt + (1 - max(gt_cov, 1e-12)) * bundle.s_soft_eigv
        )
        assert bundle.s_hybrid_ggt == pytest.approx(
            bundle.coverage_ggt * bundle.s_ggt + (1 - bundle.coverage_ggt) * bundle.s_soft_eigv
        )

    def test_order_invariance_end_to_end(self):
        rng = np.random.default_rng(41)
        a = rng.random((8, 8))
        bundle = score_query(entailment=a)
        perm = rng.permutation(8)
        shuffled = score_query(entailment=a[np.ix_(perm, perm)])
        for name in EstimateBundle.SCALAR_FIELDS:
            lhs, rhs = getattr(bundle, name), getattr(shuffled, name)
            if lhs is None:
                assert rhs is None
            elif name in ("s_soft_eigv", "u_eigv", "s_hybrid", "s_final", "h_shade",
                          "s_hybrid_gt", "s_hybrid_ggt"):
                assert rhs == pytest.approx(lhs, abs=1e-9)  # eigensolve order differs
            else:
                assert rhs == lhs  # occupancy route is bit-identical
        assert shuffled.p_hat == bundle.p_hat

    def test_correction_sign_flag(self):
        plus = score_query(entailment=distinct_matrix(5), correction_sign=1.0)
        minus = score_query(entailment=distinct_matrix(5), correction_sign=-1.0)
        assert plus.s_hybrid == minus.s_hybrid
        assert plus.s_final - minus.s_final == pytest.approx(2 * (5 - 1) / 10.0, abs=1e-12)

    def test_accepts_entailment_matrix_instance(self):
        m = EntailmentMatrix(np.eye(3))
        assert score_query(entailment=m).k_obs == 3
