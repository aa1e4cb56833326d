import pytest

from thinkanywhere.parser import ViolationKind
from thinkanywhere.rewards import (RewardConfig, combined_reward,
                                   correctness_reward, structure_only_reward,
                                   structure_reward)
from thinkanywhere.sandbox import IoTest, Status, TestCase

CFG = RewardConfig()

GOOD = ("<think>double the input</think>"
        "print(int(input())<thinkanywhere>overflow is fine here"
        "</thinkanywhere>*2)")
GOOD_WRONG_CODE = ("<think>double</think>"
                   "print(<thinkanywhere>hm</thinkanywhere>7)")
NO_TA = "<think>plan</think>print(int(input())*2)"
NO_THINK = "print(int(input())<thinkanywhere>ok</thinkanywhere>*2)"
BARE = "print(int(input())*2)"
TESTS = [TestCase(IoTest("3", "6"))]


class TestStructureReward:
    def test_valid(self):
        r, report = structure_reward(GOOD, CFG)
        assert r == 1
        assert report.ta_block_count == 1

    def test_upfront_without_ta(self):
        assert structure_reward(NO_TA, CFG)[0] == 0

    def test_ta_without_upfront(self):
        assert structure_reward(NO_THINK, CFG)[0] == 0

    def test_unmatched_tag_scores_zero(self):
        raw = "<think>p</think>x<thinkanywhere>y"
        r, report = structure_reward(raw, CFG)
        assert r == 0
        assert report.violations[0].kind is ViolationKind.UNMATCHED_TAG

    def test_think_after_code_scores_zero(self):
        raw = ("<think>p</think>x<thinkanywhere>y</thinkanywhere>"
               "<think>late</think>")
        assert structure_reward(raw, CFG)[0] == 0

    def test_strict_code_validity(self):
        bad_code = ("<think>p</think>def f(:<thinkanywhere>y</thinkanywhere>")
        strict = CFG.replace(strict_code_validity=True)
        assert structure_reward(bad_code, CFG)[0] == 1
        assert structure_reward(bad_code, strict)[0] == 0
        assert structure_reward(GOOD, strict)[0] == 1

    def test_never_raises_on_garbage(self):
        for raw in ("", "</think>", "<thinkanywhere>", "\x00<think>"):
            r, _ = structure_reward(raw, CFG)
            assert r == 0


class TestCorrectnessReward:
    def test_all_pass(self, shared_sandbox):
        r, verdicts, code = correctness_reward(GOOD, TESTS, CFG,
                                               shared_sandbox)
        assert r == 1
        assert code == "print(int(input())*2)"

    def test_partial_pass_is_zero(self, shared_sandbox):
        tests = TESTS + [TestCase(IoTest("5", "11"))]
        r, verdicts, _ = correctness_reward(GOOD, tests, CFG, shared_sandbox)
        assert r == 0
        assert [v.status for v in verdicts] == \
            [Status.PASS, Status.WRONG_OUTPUT]

    def test_mid_expression_block_stripped(self, shared_sandbox):
        # the raw text is not valid Python until the block is removed
        r, _, code = correctness_reward(GOOD, TESTS, CFG, shared_sandbox)
        assert "<thinkanywhere>" not in code
        assert r == 1

    def test_best_effort_on_broken_structure(self, shared_sandbox):
        broken = "<think>p</think>print(int(input())*2)<thinkanywhere>hm"
        r, _, code = correctness_reward(broken, TESTS, CFG, shared_sandbox)
        assert code == "print(int(input())*2)"
        assert r == 1

    def test_empty_tests_rejected(self, shared_sandbox):
        with pytest.raises(ValueError):
            correctness_reward(GOOD, [], CFG, shared_sandbox)


class TestCombinedReward:
    @pytest.mark.parametrize("raw,expected", [
        (GOOD, 1.1),
        (GOOD_WRONG_CODE, 0.1),
        (BARE, 1.0),
        ("print(7)", 0.0),
    ])
    def test_value_matrix(self, raw, expected, shared_sandbox):
        b = combined_reward(raw, TESTS, CFG, shared_sandbox)
        assert b.total == expected

    def test_total_formula(self, shared_sandbox):
        cfg = CFG.replace(alpha=0.3, correct_coeff=2.0)
        b = combined_reward(GOOD, TESTS, cfg, shared_sandbox)
        assert b.total == 0.3 * b.r_struct + 2.0 * b.r_correct == 2.3

    def test_gated_mode(self, shared_sandbox):
        gated = CFG.replace(gated=True)
        assert combined_reward(GOOD, TESTS, gated, shared_sandbox).total == 1.1
        assert combined_reward(BARE, TESTS, gated, shared_sandbox).total == 0.0

    def test_monotonicity(self, shared_sandbox):
        totals = {
            (b.r_struct, b.r_correct): b.total
            for b in (combined_reward(raw, TESTS, CFG, shared_sandbox)
                      for raw in (GOOD, GOOD_WRONG_CODE, BARE, "print(7)"))
        }
        assert totals[(1, 1)] >= totals[(0, 1)] >= totals[(0, 0)]
        assert totals[(1, 1)] >= totals[(1, 0)] >= totals[(0, 0)]

    def test_extraction_consistency(self, shared_sandbox):
        from thinkanywhere.parser import extract_code, parse_mixed_sequence
        b = combined_reward(GOOD, TESTS, CFG, shared_sandbox)
        assert b.code == extract_code(parse_mixed_sequence(GOOD, CFG.scheme))

    def test_think_content_never_executed(self, shared_sandbox):
        # thinking block would crash if it reached the interpreter
        raw = ("<think>import sys; sys.exit(9)</think>"
               "print(int(input())<thinkanywhere>1/0</thinkanywhere>*2)")
        b = combined_reward(raw, TESTS, CFG, shared_sandbox)
        assert b.r_correct == 1


class TestStructureOnly:
    def test_alpha_scaling(self):
        b = structure_only_reward(GOOD, CFG)
        assert b.total == pytest.approx(0.1)
        assert b.verdicts == []

    def test_zero_when_malformed(self):
        assert structure_only_reward(BARE, CFG).total == 0.0


class TestConfig:
    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            RewardConfig(alpha=-0.1)

    def test_invalid_coeff(self):
        with pytest.raises(ValueError):
            RewardConfig(correct_coeff=0)
