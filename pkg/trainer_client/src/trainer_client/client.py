"""HTTP client for the reward scoring service.

The client is a transport shim: it never computes rewards locally, so
reward semantics live in exactly one place (the service). Retries with
exponential backoff apply only to transport-level failures (connection
errors, timeouts, 5xx responses); per-item scoring errors come back
in-position as `ItemError` markers and are never retried, so a retry can
never reorder or duplicate rollouts.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Union

import httpx


class EmptyGroup(ValueError):
    """score_group was called with an empty rollout list."""


class TransportFailure(RuntimeError):
    """All attempts failed at the transport level."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


@dataclass(frozen=True)
class ItemError:
    """Per-item scoring failure, returned in-position."""

    id: str
    message: str


@dataclass(frozen=True)
class ClientConfig:
    base_url: str
    timeout: float = 10.0
    retries: int = 2
    backoff_base: float = 0.25
    batch_cap: int = 32
    jitter_seed: Optional[int] = None

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.batch_cap < 1:
            raise ValueError("batch_cap must be >= 1")
        if self.backoff_base < 0:
            raise ValueError("backoff_base must be >= 0")


GroupResult = list[Union[float, ItemError]]


class RewardClient:
    """One connection pool per instance; safe for concurrent use."""

    def __init__(self, cfg: ClientConfig,
                 transport: Optional[httpx.BaseTransport] = None):
        self.cfg = cfg
        self._http = httpx.Client(base_url=cfg.base_url,
                                  timeout=cfg.timeout, transport=transport)
        self._rng = random.Random(cfg.jitter_seed)
        self._rng_lock = threading.Lock()

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def backoff_delay(self, attempt: int) -> float:
        """Delay before retry `attempt` (0-based): exponential plus jitter.

        Jitter is drawn from the seeded generator, so a fixed jitter_seed
        gives a reproducible schedule.
        """
        with self._rng_lock:
            jitter = self._rng.random() * self.cfg.backoff_base
        return self.cfg.backoff_base * (2 ** attempt) + jitter

    def _post(self, path: str, payload: Any) -> Any:
        attempts = self.cfg.retries + 1
        last = "transport error"
        for attempt in range(attempts):
            try:
                resp = self._http.post(path, json=payload)
                if resp.status_code >= 500 or resp.status_code == 503:
                    last = f"server returned {resp.status_code}"
                elif resp.status_code >= 400:
                    resp.raise_for_status()  # caller error: never retried
                else:
                    return resp.json()
            except httpx.TransportError as e:
                last = str(e) or type(e).__name__
            if attempt < attempts - 1:
                time.sleep(self.backoff_delay(attempt))
        raise TransportFailure(last, attempts)

    def health(self) -> dict:
        attempts = self.cfg.retries + 1
        try:
            resp = self._http.get("/health")
            resp.raise_for_status()
            return resp.json()
        except httpx.TransportError as e:
            raise TransportFailure(str(e) or type(e).__name__, 1)

    def score_group(self, pairs: Sequence[tuple[str, str]],
                    tests: Sequence[dict] = (),
                    config: Optional[dict] = None) -> GroupResult:
        """Score a group of (prompt, completion) rollouts in one call.

        Returns total rewards in input order; a rollout the service could
        not score yields an ItemError in its position. Shared `tests` are
        plain dicts matching the service's test-case schema.
        """
        if not pairs:
            raise EmptyGroup("rollout group must be nonempty")
        tests_json = list(tests)
        out: GroupResult = []
        cap = self.cfg.batch_cap
        for start in range(0, len(pairs), cap):
            chunk = pairs[start:start + cap]
            body = [{"id": f"g{start + i}", "prompt": p, "completion": c,
                     "tests": tests_json, "config": config}
                    for i, (p, c) in enumerate(chunk)]
            for item in self._post("/score_batch", body):
                if item.get("error") is not None:
                    out.append(ItemError(item.get("id") or "",
                                         item["error"]))
                else:
                    out.append(item["result"]["total"])
        return out
