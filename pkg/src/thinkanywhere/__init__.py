"""Toolkit for inline-reasoning code generation: mixed-sequence parsing,
gated structure/correctness rewards with sandboxed execution, group-relative
policy-optimization math, trigger-token embedding initialization, cold-start
dataset construction, and trace analytics."""

__version__ = "0.1.0"

from .parser import (CodeSegment, DelimiterScheme, MixedSequence, ParseError,
                     SchemeConflict, StructureReport, ThinkBlock, Violation,
                     ViolationKind, block_stats, extract_code,
                     parse_mixed_sequence, serialize, strip_all_blocks,
                     validate_raw, validate_structure)
from .rewards import (RewardBreakdown, RewardConfig, combined_reward,
                      correctness_reward, structure_reward)
from .sandbox import (AssertTest, IoTest, Sandbox, Status, TestCase,
                      TestVerdict, compare_io, run_tests)
