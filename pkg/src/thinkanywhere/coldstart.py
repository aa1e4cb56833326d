"""Cold-start dataset construction.

Render the instruction template for each coding requirement, query a
generation backend, keep only structurally well-formed completions, and
emit a prompt/completion JSONL dataset.  Code correctness is deliberately
never a filter criterion.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Optional, Protocol, Sequence, TextIO

from .parser import DelimiterScheme, ViolationKind, validate_raw

PLACEHOLDER = "{requirement}"
BACKEND_TOKEN_ENV = "TA_BACKEND_TOKEN"


class EmptyRequirement(Exception):
    pass


class BackendError(Exception):
    pass


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = 4096
    temperature: float = 0.7  # artifact default; synthesis params unspecified


class GenerationBackend(Protocol):
    def generate(self, prompt: str, params: GenerationParams) -> str: ...


def template_text() -> str:
    return (resources.files("thinkanywhere") / "assets"
            / "coldstart_template.txt").read_text()


def template_hash() -> str:
    return hashlib.sha256(template_text().encode()).hexdigest()


def render_template(requirement: str) -> str:
    """Substitute the requirement into the instruction template, verbatim."""
    if not requirement:
        raise EmptyRequirement("requirement must be nonempty")
    tpl = template_text()
    if "<thinkanywhere>" in requirement or "<think>" in requirement:
        warnings.warn("requirement contains delimiter-like text; "
                      "rendered verbatim", stacklevel=2)
    return tpl.replace(PLACEHOLDER, requirement, 1)


@dataclass
class FilterResult:
    keep: bool
    reason: Optional[ViolationKind] = None


def filter_sample(completion: str,
                  scheme: DelimiterScheme = DelimiterScheme()) -> FilterResult:
    """Keep iff the completion is structurally well formed: initial think
    block, at least one inline block, no violations."""
    report = validate_raw(completion, scheme)
    if report.violations:
        return FilterResult(False, report.violations[0].kind)
    if not report.has_initial_think:
        return FilterResult(False, ViolationKind.EMPTY_OUTPUT
                            if not completion.strip() else None)
    if report.ta_block_count < 1:
        return FilterResult(False, None)
    return FilterResult(True)


@dataclass
class ColdStartSample:
    prompt: str
    completion: str
    structure_ok: bool
    ta_blocks: int
    correctness_known: Optional[bool] = None

    def to_record(self) -> dict:
        return {"prompt": self.prompt, "completion": self.completion,
                "meta": {"ta_blocks": self.ta_blocks,
                         "structure_ok": self.structure_ok}}


@dataclass
class BuildReport:
    kept: int = 0
    dropped_by_reason: dict[str, int] = field(default_factory=dict)
    total_calls: int = 0
    exhausted: bool = False

    @property
    def dropped(self) -> int:
        return sum(self.dropped_by_reason.values())


def build_dataset(requirements: Sequence[str], backend: GenerationBackend,
                  target_count: int,
                  scheme: DelimiterScheme = DelimiterScheme(),
                  params: GenerationParams = GenerationParams(),
                  max_calls: Optional[int] = None,
                  ) -> tuple[list[ColdStartSample], BuildReport]:
    """Cycle through requirements, sampling fresh completions, until
    target_count samples are kept or the call budget runs out.

    max_calls defaults to the budget of one call per requirement; the
    report's exhausted flag marks a partial dataset.
    """
    if target_count <= 0:
        raise ValueError("target_count must be positive")
    if not requirements:
        raise ValueError("requirements must be nonempty")
    if max_calls is None:
        max_calls = len(requirements)
    samples: list[ColdStartSample] = []
    report = BuildReport()
    i = 0
    while len(samples) < target_count and report.total_calls < max_calls:
        requirement = requirements[i % len(requirements)]
        i += 1
        prompt = render_template(requirement)
        completion = backend.generate(prompt, params)
        report.total_calls += 1
        result = filter_sample(completion, scheme)
        if result.keep:
            stats = validate_raw(completion, scheme)
            samples.append(ColdStartSample(
                prompt=prompt, completion=completion, structure_ok=True,
                ta_blocks=stats.ta_block_count))
        else:
            reason = result.reason.value if result.reason else "MissingStructure"
            report.dropped_by_reason[reason] = \
                report.dropped_by_reason.get(reason, 0) + 1
    report.kept = len(samples)
    report.exhausted = report.kept < target_count
    return samples, report


def write_dataset(samples: Iterable[ColdStartSample], fp: TextIO) -> None:
    for s in samples:
        fp.write(json.dumps(s.to_record()) + "\n")


class ScriptedBackend:
    """Deterministic test backend replaying a sequence of completions or a
    completion-producing callable."""

    def __init__(self, completions: Sequence[str] | Callable[[int], str]):
        self._completions = completions
        self._calls = 0

    def generate(self, prompt: str, params: GenerationParams) -> str:
        i = self._calls
        self._calls += 1
        if callable(self._completions):
            return self._completions(i)
        return self._completions[i % len(self._completions)]


class HttpBackend:
    """Minimal JSON-over-HTTP backend: POST {prompt, max_tokens, temperature}
    to the endpoint, expect {"text": ...}.  Auth token read from the
    TA_BACKEND_TOKEN environment variable."""

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def generate(self, prompt: str, params: GenerationParams) -> str:
        import httpx
        headers = {}
        token = os.environ.get(BACKEND_TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = httpx.post(self.endpoint, timeout=self.timeout,
                              headers=headers,
                              json={"prompt": prompt,
                                    "max_tokens": params.max_tokens,
                                    "temperature": params.temperature})
            resp.raise_for_status()
            return resp.json()["text"]
        except Exception as e:
            raise BackendError(str(e))
