"""Slow, literal reference implementations used as test oracles.

Everything here is written as explicit loops over the defining sums so that
it shares no code path with the package.
"""

import cmath
import math

import numpy as np


def idaft_scalar(x, c1, c2):
    """Symbol-rate AFDM samples by direct summation."""
    n_sub = len(x)
    c2 = np.broadcast_to(np.asarray(c2, dtype=float), (n_sub,))
    out = np.zeros(n_sub, dtype=complex)
    for n in range(n_sub):
        acc = 0j
        for m in range(n_sub):
            acc += x[m] * cmath.exp(2j * math.pi * (c1 * n * n + m * n / n_sub + c2[m] * m * m))
        out[n] = acc / math.sqrt(n_sub)
    return out


def oversampled_scalar(v, c1, lp, T=1.0):
    """Oversampled samples from the sampled chirp basis with explicit wrapping."""
    n_sub = len(v)
    dt = T / n_sub
    c1p = c1 / dt**2
    C = int(round(2 * c1 * n_sub))
    out = np.zeros(n_sub * lp, dtype=complex)
    for n in range(n_sub * lp):
        t = n * T / (n_sub * lp)
        acc = 0j
        for m in range(n_sub):
            q = 0
            for qq in range(1, C + 1):
                tq = (-m / T + math.sqrt((m / T) ** 2 + 4 * c1p * qq / dt)) / (2 * c1p)
                if t >= tq:
                    q = qq
            phase = c1p * t * t + m * t / T - q * t / dt
            acc += v[m] * cmath.exp(2j * math.pi * phase)
        out[n] = acc / math.sqrt(n_sub * lp)
    return out


def shift_matrix(n, tau, mu):
    """Dense ``J_τ D(μ)``."""
    J = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if (i - j - tau) % n == 0:
                J[i, j] = 1.0
    D = np.diag([cmath.exp(-2j * math.pi * mu * k / n) for k in range(n)])
    return J @ D


def ambiguity_dense(s, tau, mu):
    s = np.asarray(s, dtype=complex)
    return complex(np.conj(s) @ shift_matrix(len(s), tau, mu) @ s)


def weighted_isl_dense(s, taus, mus, weights):
    total = 0.0
    for i, tau in enumerate(taus):
        for j, mu in enumerate(mus):
            if tau == 0 and abs(mu) < 1e-12:
                continue
            total += weights[i][j] * abs(ambiguity_dense(s, tau, mu)) ** 2
    return total


def papr_direct(samples):
    p = [abs(z) ** 2 for z in samples]
    return max(p) / (sum(p) / len(p))
