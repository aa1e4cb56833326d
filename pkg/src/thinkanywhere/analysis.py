"""Offline analytics over generation traces.

Covers entropy windows around inline-thinking onsets (with paired
enabled/disabled counterfactual runs), AST classification of thinking
positions, the unbiased pass@k estimator, and token-cost breakdowns.
"""

from __future__ import annotations

import ast
import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .parser import CodeSegment, MixedSequence, ThinkBlock


class NoEntropyData(Exception):
    pass


class PositionOutOfRange(Exception):
    pass


class PairingMismatch(Exception):
    pass


class DomainError(Exception):
    pass


class EmptyCorpus(Exception):
    pass


class GrammarUnavailable(Exception):
    pass


class Block(enum.Enum):
    UPFRONT = "upfront"
    CODE = "code"
    TA = "ta"


@dataclass(frozen=True)
class TraceToken:
    text: str
    block: Block
    byte_span: Optional[tuple[int, int]] = None


@dataclass
class GenerationTrace:
    tokens: list[TraceToken]
    entropies: Optional[np.ndarray] = None
    top_k_logprobs: Optional[list[list[tuple[str, float]]]] = None
    pairing_id: Optional[str] = None

    def __post_init__(self):
        if self.entropies is not None:
            self.entropies = np.asarray(self.entropies, dtype=np.float64)
            if self.entropies.shape != (len(self.tokens),):
                raise ValueError("entropies must align 1:1 with tokens")
        if (self.top_k_logprobs is not None
                and len(self.top_k_logprobs) != len(self.tokens)):
            raise ValueError("top_k_logprobs must align 1:1 with tokens")

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationTrace":
        tokens = [TraceToken(t["text"], Block(t["block"]),
                             tuple(t["byte_span"]) if t.get("byte_span") else None)
                  for t in d["tokens"]]
        top_k = None
        if d.get("top_k") is not None:
            top_k = [[(tok, float(lp)) for tok, lp in entries]
                     for entries in d["top_k"]]
        return cls(tokens=tokens, entropies=d.get("entropies"),
                   top_k_logprobs=top_k, pairing_id=d.get("pairing_id"))


def entropy_from_top_k(entries: Sequence[tuple[str, float]]) -> float:
    """Entropy (nats) of the top-k probabilities plus one residual bucket
    carrying the leftover mass.  A lower-fidelity estimate than a
    full-distribution entropy; bounded by log(k+1)."""
    probs = np.exp([lp for _, lp in entries])
    total = probs.sum()
    if total > 1.0:  # float slack
        probs = probs / total
        total = 1.0
    residual = 1.0 - total
    if residual > 0:
        probs = np.append(probs, residual)
    probs = probs[probs > 0]
    return float(-(probs * np.log(probs)).sum())


def token_entropies(trace: GenerationTrace) -> np.ndarray:
    if trace.entropies is not None:
        return trace.entropies
    if trace.top_k_logprobs is not None:
        return np.array([entropy_from_top_k(e) for e in trace.top_k_logprobs])
    raise NoEntropyData("trace has neither entropies nor top-k logprobs")


def window_entropy(trace: GenerationTrace, position: int, n: int = 10) -> float:
    """Mean entropy over the next n tokens after position, skipping
    inline-thinking tokens.  Truncated windows average what remains; at
    least one usable token is required."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if position < -1 or position >= len(trace.tokens):
        raise PositionOutOfRange(f"position {position} out of range")
    ent = token_entropies(trace)
    window = []
    for idx in range(position + 1, len(trace.tokens)):
        if trace.tokens[idx].block is Block.TA:
            continue
        window.append(ent[idx])
        if len(window) == n:
            break
    if not window:
        raise PositionOutOfRange(
            f"no non-thinking tokens after position {position}")
    return float(np.mean(window))


def ta_onsets(trace: GenerationTrace) -> list[int]:
    """Indices of the first token of each inline-thinking run."""
    onsets = []
    prev_ta = False
    for i, tok in enumerate(trace.tokens):
        is_ta = tok.block is Block.TA
        if is_ta and not prev_ta:
            onsets.append(i)
        prev_ta = is_ta
    return onsets


@dataclass
class EntropyDiff:
    position: int
    diff: Optional[float]
    error: Optional[str] = None


def entropy_diff(enabled: GenerationTrace, disabled: GenerationTrace,
                 n: int = 10) -> list[EntropyDiff]:
    """Entropy-window differences at inline-thinking onsets.

    The disabled trace is a counterfactual run with thinking suppressed from
    the same prefix; onsets are mapped through the longest common code-token
    prefix.  diff = disabled window - enabled window, so positive means
    suppressing thinking raised uncertainty.
    """
    if enabled.pairing_id != disabled.pairing_id or enabled.pairing_id is None:
        raise PairingMismatch("traces must share a pairing_id")
    en_code = [(i, t.text) for i, t in enumerate(enabled.tokens)
               if t.block is Block.CODE]
    dis_code = [(i, t.text) for i, t in enumerate(disabled.tokens)
                if t.block is Block.CODE]
    common = 0
    for (_, a), (_, b) in zip(en_code, dis_code):
        if a != b:
            break
        common += 1

    results: list[EntropyDiff] = []
    for onset in ta_onsets(enabled):
        # code tokens preceding this onset
        j = sum(1 for i, _ in en_code if i < onset)
        if j > common:
            results.append(EntropyDiff(onset, None, "UnmappablePosition"))
            continue
        mapped = dis_code[j - 1][0] if j > 0 else -1
        if j > len(dis_code):
            results.append(EntropyDiff(onset, None, "UnmappablePosition"))
            continue
        try:
            d = window_entropy(disabled, mapped, n) - \
                window_entropy(enabled, onset, n)
        except PositionOutOfRange:
            results.append(EntropyDiff(onset, None, "UnmappablePosition"))
            continue
        results.append(EntropyDiff(onset, d))
    return results


class SyntaxCategory(enum.Enum):
    ASSIGN = "Assign"
    RETURN = "Return"
    IF = "If"
    WHILE = "While"
    FUNCTION_DEF = "FunctionDef"
    BIN_OP = "BinOp"
    OTHER = "Other"


@dataclass(frozen=True)
class SyntaxProfile:
    grammar_id: str = "python"


_STATEMENT_KINDS = {
    ast.Assign: SyntaxCategory.ASSIGN,
    ast.AugAssign: SyntaxCategory.ASSIGN,
    ast.AnnAssign: SyntaxCategory.ASSIGN,
    ast.Return: SyntaxCategory.RETURN,
    ast.If: SyntaxCategory.IF,
    ast.While: SyntaxCategory.WHILE,
    ast.FunctionDef: SyntaxCategory.FUNCTION_DEF,
    ast.AsyncFunctionDef: SyntaxCategory.FUNCTION_DEF,
}
_EXPRESSION_KINDS = {
    ast.BinOp: SyntaxCategory.BIN_OP,
}


def _byte_spans(code: str, tree: ast.AST) -> list[tuple[ast.AST, int, int]]:
    data = code.encode("utf-8")
    line_starts = [0]
    for i, b in enumerate(data):
        if b == 0x0A:
            line_starts.append(i + 1)

    def abs_offset(lineno: int, col: int) -> int:
        return line_starts[lineno - 1] + col

    spans = []
    for node in ast.walk(tree):
        if not hasattr(node, "lineno") or node.end_lineno is None:
            continue
        start = abs_offset(node.lineno, node.col_offset)
        end = abs_offset(node.end_lineno, node.end_col_offset)
        spans.append((node, start, end))
    return spans


def classify_syntax_position(code: str, byte_offset: int,
                             profile: SyntaxProfile = SyntaxProfile()
                             ) -> SyntaxCategory:
    """Category of the innermost syntax node enclosing a byte offset in the
    stripped code.  Expression kinds count only when the offset is strictly
    inside their span; unparseable code or uncovered offsets give Other."""
    if profile.grammar_id != "python":
        raise GrammarUnavailable(f"no grammar {profile.grammar_id!r}")
    try:
        tree = ast.parse(code)
    except (SyntaxError, ValueError):
        return SyntaxCategory.OTHER
    best: Optional[tuple[int, SyntaxCategory]] = None
    for node, start, end in _byte_spans(code, tree):
        kind = _STATEMENT_KINDS.get(type(node))
        if kind is not None:
            inside = start <= byte_offset <= end
        else:
            kind = _EXPRESSION_KINDS.get(type(node))
            inside = kind is not None and start < byte_offset < end
        if kind is None or not inside:
            continue
        size = end - start
        if best is None or size < best[0]:
            best = (size, kind)
    return best[1] if best else SyntaxCategory.OTHER


def onset_offsets(seq: MixedSequence) -> list[int]:
    """Byte offsets of each inline-block stripping point in the extracted
    code."""
    offsets = []
    pos = 0
    for seg in seq.segments:
        if isinstance(seg, CodeSegment):
            pos += len(seg.text.encode("utf-8"))
        else:
            offsets.append(pos)
    return offsets


@dataclass
class SyntaxHistogram:
    counts: dict[SyntaxCategory, int]

    @property
    def ranked(self) -> list[tuple[SyntaxCategory, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0].value))

    @property
    def top5(self) -> list[tuple[SyntaxCategory, int]]:
        return self.ranked[:5]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def syntax_histogram(corpus: Sequence[tuple[MixedSequence, SyntaxProfile]]
                     ) -> SyntaxHistogram:
    counter: Counter = Counter()
    for seq, profile in corpus:
        from .parser import extract_code
        code = extract_code(seq)
        for off in onset_offsets(seq):
            counter[classify_syntax_position(code, off, profile)] += 1
    return SyntaxHistogram(dict(counter))


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased estimator 1 - C(n-c, k)/C(n, k) in stable product form."""
    if not (0 <= c <= n) or not (1 <= k <= n):
        raise DomainError(f"need 0 <= c <= n and 1 <= k <= n, got "
                          f"n={n}, c={c}, k={k}")
    if n - c < k:
        return 1.0
    return float(1.0 - np.prod(1.0 - k / np.arange(n - c + 1, n + 1)))


@dataclass
class TokenCostBreakdown:
    upfront_mean: float
    ta_mean: float
    code_mean: float

    def reasoning_cost(self) -> str:
        return f"{self.upfront_mean:.1f} + {self.ta_mean:.1f}"


def token_cost_breakdown(corpus: Sequence[GenerationTrace]
                         ) -> TokenCostBreakdown:
    """Mean token counts per trace by block label."""
    if not corpus:
        raise EmptyCorpus("token_cost_breakdown requires a nonempty corpus")
    sums = {Block.UPFRONT: 0, Block.TA: 0, Block.CODE: 0}
    for trace in corpus:
        for tok in trace.tokens:
            sums[tok.block] += 1
    n = len(corpus)
    return TokenCostBreakdown(upfront_mean=sums[Block.UPFRONT] / n,
                              ta_mean=sums[Block.TA] / n,
                              code_mean=sums[Block.CODE] / n)
