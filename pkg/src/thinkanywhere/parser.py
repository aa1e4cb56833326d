"""Parsing of mixed think/code sequences.

A generation is an optional upfront thinking block followed by code with
inline thinking blocks embedded at arbitrary positions.  Parsing splits the
raw text into the upfront block, code segments, and inline blocks; stripping
the blocks and concatenating the code segments recovers the executable
program.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

DEFAULT_OPEN_THINK = "<think>"
DEFAULT_CLOSE_THINK = "</think>"
DEFAULT_OPEN_TA = "<thinkanywhere>"
DEFAULT_CLOSE_TA = "</thinkanywhere>"


class ViolationKind(enum.Enum):
    UNMATCHED_TAG = "UnmatchedTag"
    NESTED_BLOCK = "NestedBlock"
    THINK_AFTER_CODE = "ThinkAfterCode"
    TA_INSIDE_THINK = "TaInsideThink"
    EMPTY_OUTPUT = "EmptyOutput"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    byte_offset: int


class ParseError(Exception):
    """Hard structural failure: the raw text has no valid decomposition."""

    def __init__(self, kind: ViolationKind, offset: int, message: str,
                 outer: Optional[str] = None, inner: Optional[str] = None):
        super().__init__(f"{kind.value} at byte {offset}: {message}")
        self.kind = kind
        self.offset = offset
        # For nesting errors: which block was open ("think" / "ta", with
        # "upfront" for the leading think block) and which tag intruded.
        self.outer = outer
        self.inner = inner


class SchemeConflict(Exception):
    """Segment text collides with the delimiter scheme; cannot serialize."""


class EmptyCorpus(Exception):
    pass


@dataclass(frozen=True)
class DelimiterScheme:
    open_think: str = DEFAULT_OPEN_THINK
    close_think: str = DEFAULT_CLOSE_THINK
    open_ta: str = DEFAULT_OPEN_TA
    close_ta: str = DEFAULT_CLOSE_TA
    mode: str = "text"  # "text" or "ids"
    # In "ids" mode each delimiter is a single dedicated vocabulary entry;
    # the textual form above is still what appears in decoded output.
    token_ids: Optional[tuple[int, int, int, int]] = None

    def __post_init__(self):
        tags = (self.open_think, self.close_think, self.open_ta, self.close_ta)
        if len(set(tags)) != 4:
            raise ValueError("delimiters must be pairwise distinct")
        for a in tags:
            if not a:
                raise ValueError("delimiters must be nonempty")
            for b in tags:
                if a is not b and a in b:
                    raise ValueError(f"delimiter {a!r} is a substring of {b!r}")
        if self.mode not in ("text", "ids"):
            raise ValueError(f"unknown scheme mode {self.mode!r}")
        if self.mode == "ids":
            if self.token_ids is None or len(self.token_ids) != 4:
                raise ValueError("ids mode requires four token ids")
            if len(set(self.token_ids)) != 4:
                raise ValueError("token ids must be distinct")

    @classmethod
    def single_token(cls, open_ta: str = "<ta>", close_ta: str = "</ta>",
                     token_ids: tuple[int, int, int, int] = (0, 1, 2, 3)):
        return cls(open_ta=open_ta, close_ta=close_ta, mode="ids",
                   token_ids=token_ids)

    @classmethod
    def from_dict(cls, d: dict) -> "DelimiterScheme":
        mode = d.get("mode", "text")
        kwargs = {k: d[k] for k in
                  ("open_think", "close_think", "open_ta", "close_ta") if k in d}
        if mode == "ids":
            ids = d.get("token_ids")
            return cls(mode="ids", token_ids=tuple(ids) if ids else (0, 1, 2, 3),
                       **kwargs)
        return cls(**kwargs)


@dataclass(frozen=True)
class CodeSegment:
    text: str


@dataclass(frozen=True)
class ThinkBlock:
    text: str


Segment = Union[CodeSegment, ThinkBlock]


@dataclass
class MixedSequence:
    """Decomposition of a generation into upfront thinking, code segments,
    and inline thinking blocks.

    Segments alternate code/think/code/..., always starting and ending with
    a (possibly empty) code segment, so a sequence with M inline blocks has
    2M+1 segments.
    """

    upfront: Optional[str]
    segments: list[Segment]
    prefix: str = ""  # whitespace preceding the upfront block in the raw text
    source_span_map: Optional[list[tuple[int, int]]] = field(
        default=None, compare=False)
    upfront_span: Optional[tuple[int, int]] = field(default=None, compare=False)
    soft_violations: list[Violation] = field(default_factory=list, compare=False)

    def __post_init__(self):
        if not self.segments:
            self.segments = [CodeSegment("")]
        if self.upfront is None and self.prefix:
            raise ValueError("prefix requires an upfront block")

    @property
    def think_blocks(self) -> list[ThinkBlock]:
        return [s for s in self.segments if isinstance(s, ThinkBlock)]

    @property
    def num_blocks(self) -> int:
        return len(self.think_blocks)


@dataclass
class StructureReport:
    has_initial_think: bool
    ta_block_count: int
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


def _next_tag(raw: str, pos: int, scheme: DelimiterScheme):
    """Earliest delimiter occurrence at or after pos, as (index, name, tag)."""
    best = None
    for name, tag in (("open_think", scheme.open_think),
                      ("close_think", scheme.close_think),
                      ("open_ta", scheme.open_ta),
                      ("close_ta", scheme.close_ta)):
        i = raw.find(tag, pos)
        if i != -1 and (best is None or i < best[0]):
            best = (i, name, tag)
    return best


def parse_mixed_sequence(raw: str, scheme: DelimiterScheme = DelimiterScheme()
                         ) -> MixedSequence:
    """Decompose raw text into upfront thinking, code, and inline blocks.

    Raises ParseError (UnmatchedTag or NestedBlock) on hard structural
    failures.  A think block appearing after code has started is not a hard
    failure: its raw text stays inside the code segment and a ThinkAfterCode
    violation is recorded for the reward layer.
    """
    upfront: Optional[str] = None
    upfront_span: Optional[tuple[int, int]] = None
    prefix = ""
    segments: list[Segment] = []
    spans: list[tuple[int, int]] = []
    soft: list[Violation] = []

    code_start = 0
    code_buf: list[str] = []
    code_region_started = False  # a TA block or non-whitespace code was seen
    pos = 0

    def flush_code(end: int):
        segments.append(CodeSegment("".join(code_buf)))
        spans.append((code_start, end))

    while True:
        hit = _next_tag(raw, pos, scheme)
        if hit is None:
            code_buf.append(raw[pos:])
            flush_code(len(raw))
            break
        i, name, tag = hit
        code_buf.append(raw[pos:i])
        if raw[pos:i].strip():
            code_region_started = True

        if name == "open_think":
            inner_start = i + len(tag)
            nxt = _next_tag(raw, inner_start, scheme)
            if nxt is None:
                raise ParseError(ViolationKind.UNMATCHED_TAG, i,
                                 f"{tag!r} is never closed")
            j, inner_name, inner_tag = nxt
            if inner_name != "close_think":
                if inner_name in ("open_ta", "open_think"):
                    raise ParseError(
                        ViolationKind.NESTED_BLOCK, j,
                        f"{inner_tag!r} opened inside {tag!r}",
                        outer="upfront" if not code_region_started and upfront is None
                        else "think",
                        inner="ta" if inner_name == "open_ta" else "think")
                raise ParseError(ViolationKind.UNMATCHED_TAG, j,
                                 f"{inner_tag!r} without matching open")
            end = j + len(scheme.close_think)
            content = raw[inner_start:j]
            if (upfront is None and not segments
                    and not code_region_started
                    and not "".join(code_buf).strip()):
                prefix = "".join(code_buf)
                upfront = content
                upfront_span = (i, end)
                code_buf = []
                code_start = end
            else:
                soft.append(Violation(ViolationKind.THINK_AFTER_CODE, i))
                code_buf.append(raw[i:end])
                code_region_started = True
            pos = end
        elif name == "open_ta":
            inner_start = i + len(tag)
            nxt = _next_tag(raw, inner_start, scheme)
            if nxt is None:
                raise ParseError(ViolationKind.UNMATCHED_TAG, i,
                                 f"{tag!r} is never closed")
            j, inner_name, inner_tag = nxt
            if inner_name in ("open_ta", "open_think"):
                raise ParseError(ViolationKind.NESTED_BLOCK, j,
                                 f"{inner_tag!r} opened inside {tag!r}",
                                 outer="ta",
                                 inner="ta" if inner_name == "open_ta" else "think")
            if inner_name == "close_think":
                raise ParseError(ViolationKind.UNMATCHED_TAG, j,
                                 f"{inner_tag!r} without matching open")
            end = j + len(scheme.close_ta)
            flush_code(i)
            code_buf = []
            code_start = end
            segments.append(ThinkBlock(raw[inner_start:j]))
            spans.append((i, end))
            code_region_started = True
            pos = end
        else:
            # bare close tag
            raise ParseError(ViolationKind.UNMATCHED_TAG, i,
                             f"{tag!r} without matching open")

    return MixedSequence(upfront=upfront, segments=segments, prefix=prefix,
                         source_span_map=spans, upfront_span=upfront_span,
                         soft_violations=soft)


def extract_code(seq: MixedSequence) -> str:
    """Concatenate all code segments, dropping upfront and inline thinking."""
    return "".join(s.text for s in seq.segments if isinstance(s, CodeSegment))


def strip_all_blocks(raw: str, scheme: DelimiterScheme = DelimiterScheme()) -> str:
    """Best-effort removal of every delimited thinking region.

    Unlike parse_mixed_sequence this never fails: unmatched opens drop
    everything to end of text, stray closes are deleted.  Used to extract
    runnable code from structurally broken generations.
    """
    out: list[str] = []
    pos = 0
    while True:
        hit = _next_tag(raw, pos, scheme)
        if hit is None:
            out.append(raw[pos:])
            return "".join(out)
        i, name, tag = hit
        out.append(raw[pos:i])
        if name in ("close_think", "close_ta"):
            pos = i + len(tag)
            continue
        close = scheme.close_think if name == "open_think" else scheme.close_ta
        j = raw.find(close, i + len(tag))
        if j == -1:
            return "".join(out)
        pos = j + len(close)


def validate_structure(seq_or_error: Union[MixedSequence, ParseError],
                       raw: Optional[str] = None) -> StructureReport:
    """Structural report for a parsed sequence or a hard parse failure."""
    if isinstance(seq_or_error, ParseError):
        err = seq_or_error
        kind = err.kind
        if (kind is ViolationKind.NESTED_BLOCK and err.outer == "upfront"
                and err.inner == "ta"):
            kind = ViolationKind.TA_INSIDE_THINK
        return StructureReport(has_initial_think=False, ta_block_count=0,
                               violations=[Violation(kind, err.offset)])
    seq = seq_or_error
    violations = list(seq.soft_violations)
    code = extract_code(seq)
    if seq.upfront is None and seq.num_blocks == 0 and not code.strip():
        violations.append(Violation(ViolationKind.EMPTY_OUTPUT, 0))
    has_initial = seq.upfront is not None and bool(seq.upfront.strip())
    return StructureReport(has_initial_think=has_initial,
                           ta_block_count=seq.num_blocks,
                           violations=violations)


def validate_raw(raw: str, scheme: DelimiterScheme = DelimiterScheme()
                 ) -> StructureReport:
    try:
        seq = parse_mixed_sequence(raw, scheme)
    except ParseError as err:
        return validate_structure(err)
    return validate_structure(seq)


def serialize(seq: MixedSequence, scheme: DelimiterScheme = DelimiterScheme()
              ) -> str:
    """Render a MixedSequence back to raw text; inverse of parsing."""
    tags = (scheme.open_think, scheme.close_think,
            scheme.open_ta, scheme.close_ta)
    if seq.prefix.strip():
        raise SchemeConflict("prefix must be whitespace")
    if seq.upfront is not None:
        for t in tags:
            if t in seq.upfront:
                raise SchemeConflict(f"upfront block contains delimiter {t!r}")
    out: list[str] = [seq.prefix]
    if seq.upfront is not None:
        out += [scheme.open_think, seq.upfront, scheme.close_think]
    reparse_needed = False
    for seg in seq.segments:
        if isinstance(seg, ThinkBlock):
            for t in tags:
                if t in seg.text:
                    raise SchemeConflict(
                        f"thinking block contains delimiter {t!r}")
            out += [scheme.open_ta, seg.text, scheme.close_ta]
        else:
            if scheme.open_ta in seg.text or scheme.close_ta in seg.text:
                raise SchemeConflict("code segment contains an inline delimiter")
            if scheme.open_think in seg.text or scheme.close_think in seg.text:
                # Legal only if it reparses to the same structure
                # (an embedded, matched think block after code).
                reparse_needed = True
            out.append(seg.text)
    text = "".join(out)
    if reparse_needed:
        try:
            if parse_mixed_sequence(text, scheme) != seq:
                raise SchemeConflict("embedded think delimiters change the parse")
        except ParseError as err:
            raise SchemeConflict(f"embedded think delimiters do not reparse: {err}")
    return text


def _fallback_token_count(text: str) -> int:
    # Approximate: whitespace-delimited words.  Real token counts should be
    # supplied alongside the corpus.
    return len(text.split())


def block_stats(corpus: Sequence[MixedSequence],
                token_lengths: Optional[Sequence[Sequence[int]]] = None
                ) -> dict:
    """Average inline-block frequency and length over a corpus.

    avg_freq is the mean number of inline blocks per sequence; avg_len the
    mean token count per block over all blocks (0 if there are none).
    token_lengths, when given, holds one list of per-block token counts per
    sequence; otherwise a whitespace word count is used.
    """
    if not corpus:
        raise EmptyCorpus("block_stats requires a nonempty corpus")
    freqs = []
    lens: list[float] = []
    for idx, seq in enumerate(corpus):
        blocks = seq.think_blocks
        freqs.append(len(blocks))
        if token_lengths is not None:
            counts = token_lengths[idx]
            if len(counts) != len(blocks):
                raise ValueError(
                    f"sequence {idx}: {len(counts)} token counts for "
                    f"{len(blocks)} blocks")
            lens.extend(counts)
        else:
            lens.extend(_fallback_token_count(b.text) for b in blocks)
    avg_freq = sum(freqs) / len(freqs)
    avg_len = sum(lens) / len(lens) if lens else 0.0
    return {"avg_freq": avg_freq, "avg_len": avg_len}
