"""Hierarchical reward: structure gate plus all-tests-pass correctness.

total = alpha * r_struct + correct_coeff * r_correct, so with the defaults
(alpha=0.1, correct_coeff=1.0) the attainable totals are {0, 0.1, 1.0, 1.1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .parser import (DelimiterScheme, MixedSequence, ParseError,
                     StructureReport, extract_code, parse_mixed_sequence,
                     strip_all_blocks, validate_structure)
from .sandbox import Sandbox, Status, TestCase, TestVerdict, default_sandbox


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 0.1
    correct_coeff: float = 1.0
    strict_code_validity: bool = False
    gated: bool = False  # total = r_struct * (alpha + r_correct) when set
    scheme: DelimiterScheme = field(default_factory=DelimiterScheme)
    lang_profile: str = "python3"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.correct_coeff <= 0:
            raise ValueError("correct_coeff must be > 0")

    def replace(self, **kwargs) -> "RewardConfig":
        from dataclasses import replace
        return replace(self, **kwargs)


@dataclass
class RewardBreakdown:
    r_struct: int
    r_correct: int
    total: float
    structure_report: StructureReport
    verdicts: list[TestVerdict]
    code: str


def _parse(raw: str, cfg: RewardConfig) -> tuple[Optional[MixedSequence],
                                                 StructureReport]:
    try:
        seq = parse_mixed_sequence(raw, cfg.scheme)
    except ParseError as err:
        return None, validate_structure(err)
    return seq, validate_structure(seq)


def _code_is_valid(code: str) -> bool:
    try:
        compile(code, "<candidate>", "exec")
    except (SyntaxError, ValueError):
        return False
    return True


def structure_reward(raw: str, cfg: RewardConfig = RewardConfig()
                     ) -> tuple[int, StructureReport]:
    """1 iff the output has a nonempty initial think block, at least one
    inline block, and no structural violations.  Never raises on bad input.
    """
    seq, report = _parse(raw, cfg)
    ok = (report.has_initial_think and report.ta_block_count >= 1
          and not report.violations)
    if ok and cfg.strict_code_validity:
        ok = _code_is_valid(extract_code(seq))
    return (1 if ok else 0), report


def correctness_reward(raw: str, tests: Sequence[TestCase],
                       cfg: RewardConfig = RewardConfig(),
                       sandbox: Optional[Sandbox] = None
                       ) -> tuple[int, list[TestVerdict], str]:
    """1 iff the stripped code passes every test.

    Code extraction is best-effort: structurally broken generations still
    get their delimited regions removed before execution.
    """
    if not tests:
        raise ValueError("tests must be nonempty")
    try:
        code = extract_code(parse_mixed_sequence(raw, cfg.scheme))
    except ParseError:
        code = strip_all_blocks(raw, cfg.scheme)
    sandbox = sandbox or default_sandbox()
    verdicts = sandbox.run_tests(code, tests, cfg.lang_profile)
    passed = all(v.status is Status.PASS for v in verdicts)
    return (1 if passed else 0), verdicts, code


def combined_reward(raw: str, tests: Sequence[TestCase],
                    cfg: RewardConfig = RewardConfig(),
                    sandbox: Optional[Sandbox] = None) -> RewardBreakdown:
    r_struct, report = structure_reward(raw, cfg)
    r_correct, verdicts, code = correctness_reward(raw, tests, cfg, sandbox)
    total = compute_total(r_struct, r_correct, cfg)
    return RewardBreakdown(r_struct=r_struct, r_correct=r_correct, total=total,
                           structure_report=report, verdicts=verdicts,
                           code=code)


def structure_only_reward(raw: str, cfg: RewardConfig = RewardConfig()
                          ) -> RewardBreakdown:
    """Degenerate mode for requests without tests: total = alpha * r_struct."""
    r_struct, report = structure_reward(raw, cfg)
    try:
        code = extract_code(parse_mixed_sequence(raw, cfg.scheme))
    except ParseError:
        code = strip_all_blocks(raw, cfg.scheme)
    return RewardBreakdown(r_struct=r_struct, r_correct=0,
                           total=cfg.alpha * r_struct,
                           structure_report=report, verdicts=[], code=code)


def compute_total(r_struct: int, r_correct: int, cfg: RewardConfig) -> float:
    if cfg.gated:
        return r_struct * (cfg.alpha + cfg.correct_coeff * r_correct)
    return cfg.alpha * r_struct + cfg.correct_coeff * r_correct
