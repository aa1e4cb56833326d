"""Sandboxed execution of candidate code against test cases.

Each test runs in a fresh child process with its own temporary working
directory, a wall-clock time limit, and an address-space limit.  Verdicts
feed the correctness reward.
"""

from __future__ import annotations

import enum
import os
import resource
import shutil
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

DEFAULT_TIME_LIMIT_MS = 5000
DEFAULT_MEMORY_LIMIT_BYTES = 256 * 1024 * 1024
_EXCERPT_LEN = 4096


class SandboxError(Exception):
    """Environment-level failure, distinct from a failing candidate."""


class ProfileNotConfigured(SandboxError):
    pass


class SandboxSpawnFailure(SandboxError):
    pass


class Status(enum.Enum):
    PASS = "Pass"
    WRONG_OUTPUT = "WrongOutput"
    RUNTIME_ERROR = "RuntimeError"
    TIMEOUT = "Timeout"
    MEMORY_EXCEEDED = "MemoryExceeded"
    COMPILE_ERROR = "CompileError"


@dataclass(frozen=True)
class IoTest:
    stdin: str
    expected_stdout: str


@dataclass(frozen=True)
class AssertTest:
    check_script: str


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    kind: IoTest | AssertTest
    time_limit_ms: int = DEFAULT_TIME_LIMIT_MS
    memory_limit_bytes: int = DEFAULT_MEMORY_LIMIT_BYTES

    def __post_init__(self):
        if self.time_limit_ms <= 0:
            raise ValueError("time_limit_ms must be positive")
        if self.memory_limit_bytes <= 0:
            raise ValueError("memory_limit_bytes must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "TestCase":
        limits = {}
        if "time_limit_ms" in d and d["time_limit_ms"] is not None:
            limits["time_limit_ms"] = int(d["time_limit_ms"])
        if "memory_limit_bytes" in d and d["memory_limit_bytes"] is not None:
            limits["memory_limit_bytes"] = int(d["memory_limit_bytes"])
        if d["kind"] == "io":
            return cls(IoTest(d["stdin"], d["expected_stdout"]), **limits)
        if d["kind"] == "assert":
            return cls(AssertTest(d["check_script"]), **limits)
        raise ValueError(f"unknown test kind {d['kind']!r}")


def load_test_suite(d: dict) -> list[TestCase]:
    """Parse the test-suite JSON object format."""
    defaults = {}
    if d.get("time_limit_ms") is not None:
        defaults["time_limit_ms"] = int(d["time_limit_ms"])
    if d.get("memory_limit_bytes") is not None:
        defaults["memory_limit_bytes"] = int(d["memory_limit_bytes"])
    tests = []
    for t in d["tests"]:
        merged = {**defaults, **{k: v for k, v in t.items() if k != "kind"
                                 and v is not None}, "kind": t["kind"]}
        tests.append(TestCase.from_dict(merged))
    return tests


@dataclass
class TestVerdict:
    __test__ = False  # not a pytest class

    status: Status
    stdout_excerpt: str = ""
    stderr_excerpt: str = ""
    wall_time_ms: float = 0.0


@dataclass(frozen=True)
class LanguageProfile:
    """How to run a candidate: command template with a {source} placeholder."""
    name: str
    command: tuple[str, ...]
    source_suffix: str = ".py"
    compile_check: bool = False  # syntax-check Python source before running


_PROFILES: dict[str, LanguageProfile] = {
    "python3": LanguageProfile(
        name="python3",
        command=(sys.executable, "-I", "{source}"),
        compile_check=True,
    ),
    "command": LanguageProfile(
        name="command",
        command=(sys.executable, "-I", "{source}"),
    ),
}


def register_profile(profile: LanguageProfile) -> None:
    _PROFILES[profile.name] = profile


def get_profile(name: str) -> LanguageProfile:
    try:
        return _PROFILES[name]
    except KeyError:
        raise ProfileNotConfigured(f"no language profile named {name!r}")


def compare_io(actual: str, expected: str) -> bool:
    """Line-wise comparison ignoring trailing whitespace and trailing blank
    lines on both sides."""
    def norm(text: str) -> list[str]:
        lines = [ln.rstrip() for ln in text.splitlines()]
        while lines and lines[-1] == "":
            lines.pop()
        return lines
    return norm(actual) == norm(expected)


def _limits_preexec(memory_limit_bytes: int):
    def apply():
        os.setsid()
        resource.setrlimit(resource.RLIMIT_AS,
                           (memory_limit_bytes, memory_limit_bytes))
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
    return apply


def _run_one(source_text: str, stdin: str, test: TestCase,
             profile: LanguageProfile) -> TestVerdict:
    workdir = tempfile.mkdtemp(prefix="ta-sandbox-")
    try:
        source = os.path.join(workdir, "candidate" + profile.source_suffix)
        with open(source, "w") as f:
            f.write(source_text)
        cmd = [a.format(source=source) for a in profile.command]
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, cwd=workdir, text=True,
                preexec_fn=_limits_preexec(test.memory_limit_bytes),
                env={"PATH": os.environ.get("PATH", ""), "HOME": workdir},
            )
        except OSError as e:
            raise SandboxSpawnFailure(str(e))
        try:
            out, err = proc.communicate(stdin, timeout=test.time_limit_ms / 1000)
        except subprocess.TimeoutExpired:
            _kill_group(proc)
            out, err = proc.communicate()
            wall = (time.monotonic() - start) * 1000
            return TestVerdict(Status.TIMEOUT, _clip(out), _clip(err), wall)
        wall = (time.monotonic() - start) * 1000
        if proc.returncode != 0:
            status = Status.MEMORY_EXCEEDED if _looks_oom(err, proc.returncode) \
                else Status.RUNTIME_ERROR
            return TestVerdict(status, _clip(out), _clip(err), wall)
        # full stdout kept here; run_tests compares then clips
        return TestVerdict(Status.PASS, out or "", _clip(err), wall)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), 9)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def _looks_oom(stderr: str, returncode: int) -> bool:
    return "MemoryError" in stderr or returncode == -9 and "Killed" in stderr


def _clip(text: Optional[str]) -> str:
    return (text or "")[:_EXCERPT_LEN]


class Sandbox:
    """Bounded worker pool for candidate execution.

    run_tests may be called concurrently from any thread; at most
    max_workers child processes run at a time.
    """

    def __init__(self, max_workers: int = 4):
        self.max_workers = max_workers
        self._pool = ThreadPoolExecutor(max_workers=max_workers,
                                        thread_name_prefix="ta-sandbox")
        self._in_flight = 0
        import threading
        self._lock = threading.Lock()

    @property
    def workers_free(self) -> int:
        with self._lock:
            return max(0, self.max_workers - self._in_flight)

    @property
    def in_flight(self) -> int:
        with self._lock:
            return self._in_flight

    def run_tests(self, code: str, tests: Sequence[TestCase],
                  lang_profile: str = "python3") -> list[TestVerdict]:
        """One verdict per test, in order."""
        if not tests:
            raise ValueError("tests must be nonempty")
        profile = get_profile(lang_profile)
        if profile.compile_check:
            try:
                compile(code, "<candidate>", "exec")
            except (SyntaxError, ValueError) as e:
                return [TestVerdict(Status.COMPILE_ERROR, "", str(e), 0.0)
                        for _ in tests]

        def task(test: TestCase) -> TestVerdict:
            with self._lock:
                self._in_flight += 1
            try:
                if isinstance(test.kind, IoTest):
                    verdict = _run_one(code, test.kind.stdin, test, profile)
                    if verdict.status is Status.PASS and not compare_io(
                            verdict.stdout_excerpt, test.kind.expected_stdout):
                        verdict.status = Status.WRONG_OUTPUT
                    verdict.stdout_excerpt = _clip(verdict.stdout_excerpt)
                    return verdict
                combined = code + "\n\n" + test.kind.check_script
                verdict = _run_one(combined, "", test, profile)
                verdict.stdout_excerpt = _clip(verdict.stdout_excerpt)
                return verdict
            finally:
                with self._lock:
                    self._in_flight -= 1

        futures = [self._pool.submit(task, t) for t in tests]
        return [f.result() for f in futures]

    def shutdown(self):
        self._pool.shutdown(wait=True)


_default_sandbox: Optional[Sandbox] = None


def default_sandbox() -> Sandbox:
    global _default_sandbox
    if _default_sandbox is None:
        _default_sandbox = Sandbox()
    return _default_sandbox


def run_tests(code: str, tests: Sequence[TestCase],
              lang_profile: str = "python3") -> list[TestVerdict]:
    return default_sandbox().run_tests(code, tests, lang_profile)
