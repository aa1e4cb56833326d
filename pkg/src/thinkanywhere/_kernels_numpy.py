"""Pure-numpy reference kernels for the policy-gradient math."""

import numpy as np

BACKEND = "numpy"


def token_ratios(logp_theta, logp_old):
    return np.exp(logp_theta - logp_old)


def kl_terms(logp_theta, logp_ref):
    delta = logp_ref - logp_theta
    return np.exp(delta) - delta - 1.0


def clipped_terms(ratios, kl, advantage, epsilon, beta):
    """Per-token surrogate terms and the count of tokens where the clipped
    branch was strictly smaller."""
    unclipped = ratios * advantage
    clipped = np.clip(ratios, 1.0 - epsilon, 1.0 + epsilon) * advantage
    terms = np.minimum(unclipped, clipped) - beta * kl
    n_clipped = int(np.count_nonzero(clipped < unclipped))
    return terms, n_clipped
