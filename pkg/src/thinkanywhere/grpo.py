"""Group-relative policy optimization math over rollout groups.

Pure numeric layer: group-normalized advantages, probability ratios from
logprob traces, a nonnegative per-token KL estimator, and the clipped
surrogate objective.  No gradients, no optimizer; an external trainer
consumes these numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels


class GroupTooSmall(Exception):
    pass


class LengthMismatch(Exception):
    pass


@dataclass(frozen=True)
class GrpoConfig:
    epsilon: float = 0.2      # clip radius; conventional default
    beta: float = 0.001       # KL weight; conventional default
    ratio_level: str = "token"  # "token" or "sequence"
    std_floor: float = 1e-8

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must be in (0, 1)")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.std_floor <= 0:
            raise ValueError("std_floor must be > 0")
        if self.ratio_level not in ("token", "sequence"):
            raise ValueError("ratio_level must be 'token' or 'sequence'")


@dataclass
class Rollout:
    tokens: list[int]
    logp_theta: np.ndarray
    logp_old: np.ndarray
    logp_ref: np.ndarray
    reward: float

    def __post_init__(self):
        self.logp_theta = np.asarray(self.logp_theta, dtype=np.float64)
        self.logp_old = np.asarray(self.logp_old, dtype=np.float64)
        self.logp_ref = np.asarray(self.logp_ref, dtype=np.float64)
        n = len(self.tokens)
        for name in ("logp_theta", "logp_old", "logp_ref"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise LengthMismatch(
                    f"{name} has length {arr.shape[0]}, expected {n}")

    @classmethod
    def from_dict(cls, d: dict) -> "Rollout":
        return cls(tokens=list(d["tokens"]), logp_theta=d["logp_theta"],
                   logp_old=d["logp_old"], logp_ref=d["logp_ref"],
                   reward=float(d["reward"]))


@dataclass
class RolloutGroup:
    prompt_id: str
    rollouts: list[Rollout]

    @property
    def size(self) -> int:
        return len(self.rollouts)

    @classmethod
    def from_dict(cls, d: dict) -> "RolloutGroup":
        return cls(prompt_id=str(d["prompt_id"]),
                   rollouts=[Rollout.from_dict(r) for r in d["rollouts"]])


def group_advantages(rewards: Sequence[float],
                     cfg: GrpoConfig = GrpoConfig()) -> np.ndarray:
    """Mean-centered, std-normalized rewards (population std, floored).

    A group with identical rewards gets all-zero advantages instead of a
    division failure, so degenerate groups are safe mid-training.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.size < 2:
        raise GroupTooSmall("advantage normalization needs >= 2 rollouts")
    std = float(np.std(rewards))  # population std
    return (rewards - rewards.mean()) / max(std, cfg.std_floor)


def prob_ratios(rollout: Rollout, cfg: GrpoConfig = GrpoConfig()):
    """exp(logp_theta - logp_old) per token, or exp of the summed diff in
    sequence mode."""
    if cfg.ratio_level == "sequence":
        return float(np.exp(np.sum(rollout.logp_theta - rollout.logp_old)))
    return kernels.token_ratios(rollout.logp_theta, rollout.logp_old)


def kl_penalty(rollout: Rollout) -> np.ndarray:
    """Nonnegative per-token KL estimator exp(d) - d - 1 with
    d = logp_ref - logp_theta."""
    return kernels.kl_terms(rollout.logp_theta, rollout.logp_ref)


@dataclass
class ObjectiveResult:
    objective: float
    per_rollout: list[float]
    clip_fraction: float
    advantages: list[float] = field(default_factory=list)


def grpo_objective(group: RolloutGroup,
                   cfg: GrpoConfig = GrpoConfig()) -> ObjectiveResult:
    """Clipped surrogate with KL penalty.

    Per token: min(rho*A, clip(rho, 1-eps, 1+eps)*A) - beta*k; the rollout
    value is the token mean, the objective the rollout mean.  clip_fraction
    counts tokens where the clipped branch was strictly smaller.
    """
    adv = group_advantages([r.reward for r in group.rollouts], cfg)
    per_rollout: list[float] = []
    clipped = 0
    total_tokens = 0
    for rollout, a in zip(group.rollouts, adv):
        if len(rollout.tokens) == 0:
            raise LengthMismatch(
                f"rollout in group {group.prompt_id} has no tokens")
        if cfg.ratio_level == "sequence":
            rho = np.array([prob_ratios(rollout, cfg)])
            kl = np.array([float(np.mean(kl_penalty(rollout)))])
        else:
            rho = prob_ratios(rollout, cfg)
            kl = kl_penalty(rollout)
        terms, n_clip = kernels.clipped_terms(
            np.asarray(rho, dtype=np.float64), np.asarray(kl, dtype=np.float64),
            float(a), cfg.epsilon, cfg.beta)
        per_rollout.append(float(np.mean(terms)))
        clipped += n_clip
        total_tokens += terms.shape[0]
    return ObjectiveResult(
        objective=float(np.mean(per_rollout)),
        per_rollout=per_rollout,
        clip_fraction=clipped / total_tokens if total_tokens else 0.0,
        advantages=[float(a) for a in adv],
    )
