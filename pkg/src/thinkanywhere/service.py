"""Reward scoring service: JSON over HTTP.

Routes: POST /score, POST /score_batch, GET /health.  Stateless; the
sandbox worker pool is the single bounded resource.  Provenance logging is
newline-JSON to the sink named by TA_LOG_SINK.
"""

from __future__ import annotations

import json
import os
import threading
import time
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .parser import DelimiterScheme
from .rewards import (RewardConfig, combined_reward, structure_only_reward)
from .sandbox import Sandbox, TestCase

LOG_SINK_ENV = "TA_LOG_SINK"


class TestCaseModel(BaseModel):
    kind: str
    stdin: Optional[str] = None
    expected_stdout: Optional[str] = None
    check_script: Optional[str] = None
    time_limit_ms: Optional[int] = None
    memory_limit_bytes: Optional[int] = None

    def to_test_case(self) -> TestCase:
        return TestCase.from_dict(self.model_dump())


class ConfigOverrides(BaseModel):
    alpha: Optional[float] = None
    correct_coeff: Optional[float] = None
    strict_code_validity: Optional[bool] = None
    gated: Optional[bool] = None


class ScoreRequest(BaseModel):
    id: str
    prompt: str = ""
    completion: str
    tests: list[TestCaseModel] = Field(default_factory=list)
    config: Optional[ConfigOverrides] = None


class ScoreResponse(BaseModel):
    id: str
    r_struct: int
    r_correct: Optional[int]
    total: float
    violations: list[str]
    verdicts: list[str]
    wall_time_ms: int


class BatchResponseItem(BaseModel):
    id: Optional[str] = None
    error: Optional[str] = None
    result: Optional[ScoreResponse] = None


class HealthResponse(BaseModel):
    status: str
    sandbox_workers_free: int
    version: str


class RewardService:
    def __init__(self, cfg: RewardConfig = RewardConfig(), workers: int = 4,
                 queue_depth: int = 32, batch_cap: int = 64,
                 log_sink: Optional[str] = None):
        self.cfg = cfg
        self.sandbox = Sandbox(max_workers=workers)
        self.queue_depth = queue_depth
        self.batch_cap = batch_cap
        self._admitted = 0
        self._lock = threading.Lock()
        self._log_sink = log_sink if log_sink is not None \
            else os.environ.get(LOG_SINK_ENV)
        self._log_lock = threading.Lock()

    def _effective_cfg(self, overrides: Optional[ConfigOverrides]
                       ) -> RewardConfig:
        if overrides is None:
            return self.cfg
        changes = {k: v for k, v in overrides.model_dump().items()
                   if v is not None}
        return self.cfg.replace(**changes) if changes else self.cfg

    def _admit(self) -> bool:
        with self._lock:
            if self._admitted >= self.sandbox.max_workers + self.queue_depth:
                return False
            self._admitted += 1
            return True

    def _release(self):
        with self._lock:
            self._admitted -= 1

    def _log(self, record: dict):
        if not self._log_sink:
            return
        with self._log_lock:
            with open(self._log_sink, "a") as f:
                f.write(json.dumps(record) + "\n")

    def score(self, req: ScoreRequest) -> ScoreResponse:
        cfg = self._effective_cfg(req.config)
        start = time.monotonic()
        if not self._admit():
            raise HTTPException(status_code=503, detail="sandbox pool saturated")
        try:
            if req.tests:
                tests = [t.to_test_case() for t in req.tests]
                breakdown = combined_reward(req.completion, tests, cfg,
                                            self.sandbox)
                r_correct: Optional[int] = breakdown.r_correct
            else:
                breakdown = structure_only_reward(req.completion, cfg)
                r_correct = None
        finally:
            self._release()
        wall = int((time.monotonic() - start) * 1000)
        resp = ScoreResponse(
            id=req.id,
            r_struct=breakdown.r_struct,
            r_correct=r_correct,
            total=breakdown.total,
            violations=[v.kind.value
                        for v in breakdown.structure_report.violations],
            verdicts=[v.status.value for v in breakdown.verdicts],
            wall_time_ms=wall,
        )
        self._log({"id": req.id, "total": resp.total,
                   "r_struct": resp.r_struct, "r_correct": r_correct,
                   "wall_time_ms": wall})
        return resp

    def score_batch(self, reqs: list[ScoreRequest]) -> list[BatchResponseItem]:
        if len(reqs) > self.batch_cap:
            raise HTTPException(status_code=400,
                                detail=f"batch exceeds cap {self.batch_cap}")
        out: list[BatchResponseItem] = []
        for req in reqs:
            try:
                out.append(BatchResponseItem(id=req.id, result=self.score(req)))
            except HTTPException:
                raise
            except Exception as e:  # per-item isolation
                out.append(BatchResponseItem(id=req.id, error=str(e)))
        return out

    def health(self) -> HealthResponse:
        free = self.sandbox.workers_free
        return HealthResponse(status="ok" if free > 0 else "busy",
                              sandbox_workers_free=free,
                              version=__version__)


def create_app(service: Optional[RewardService] = None) -> FastAPI:
    service = service or RewardService()
    app = FastAPI(title="thinkanywhere reward service")
    app.state.service = service

    @app.post("/score", response_model=ScoreResponse)
    def score(req: ScoreRequest):
        return service.score(req)

    @app.post("/score_batch", response_model=list[BatchResponseItem])
    def score_batch(reqs: list[ScoreRequest]):
        return service.score_batch(reqs)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return service.health()

    return app


def serve(host: str = "127.0.0.1", port: int = 8700, workers: int = 4,
          queue_depth: int = 32, cfg: RewardConfig = RewardConfig()):
    import uvicorn
    app = create_app(RewardService(cfg=cfg, workers=workers,
                                   queue_depth=queue_depth))
    uvicorn.run(app, host=host, port=port)
