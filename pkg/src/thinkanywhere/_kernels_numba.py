"""numba-compiled twins of the numpy kernels.

Fused single-pass loops; worthwhile when auditing objectives over large
rollout files.  Numerics match _kernels_numpy to within a few ulps (numba's
libm and numpy's may differ in the last bit of exp).
"""

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True)
def token_ratios(logp_theta, logp_old):
    out = np.empty(logp_theta.shape[0], dtype=np.float64)
    for t in range(logp_theta.shape[0]):
        out[t] = np.exp(logp_theta[t] - logp_old[t])
    return out


@njit(cache=True)
def kl_terms(logp_theta, logp_ref):
    out = np.empty(logp_theta.shape[0], dtype=np.float64)
    for t in range(logp_theta.shape[0]):
        delta = logp_ref[t] - logp_theta[t]
        out[t] = np.exp(delta) - delta - 1.0
    return out


@njit(cache=True)
def clipped_terms(ratios, kl, advantage, epsilon, beta):
    n = ratios.shape[0]
    terms = np.empty(n, dtype=np.float64)
    n_clipped = 0
    lo = 1.0 - epsilon
    hi = 1.0 + epsilon
    for t in range(n):
        r = ratios[t]
        rc = lo if r < lo else (hi if r > hi else r)
        unclipped = r * advantage
        clipped = rc * advantage
        if clipped < unclipped:
            n_clipped += 1
            terms[t] = clipped - beta * kl[t]
        else:
            terms[t] = unclipped - beta * kl[t]
    return terms, n_clipped
