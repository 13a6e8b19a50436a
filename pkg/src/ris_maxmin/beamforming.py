"""Closed-form optimal receive combiners and the SINR they induce.

For user k with effective channel g_k, interference covariance
S_k = sum_{i != k} p_i g_i g_i^H and noise sigma2*I, the SINR-optimal
combiner is (S_k + sigma2*I)^{-1} g_k (normalized), and the resulting SINR
is p_k g_k^H (S_k + sigma2*I)^{-1} g_k. All solves go through a Cholesky
factorization; the matrix is Hermitian positive definite by construction.
"""

import numpy as np
import scipy.linalg as sla

from .core import (Beamformer, ChannelRealization, PhaseVector, SinrReport,
                   _power_array, effective_channel)
from .errors import ConfigurationError, NumericError


def interference_cholesky(g: np.ndarray, p: np.ndarray, sigma2: float) -> list:
    """Cholesky factors of S_k + sigma2*I for every user.

    S_k is assembled from one shared Gram matrix sum_i p_i g_i g_i^H with a
    rank-one downdate per user, so the cost is O(k m^2) plus k factorizations.
    """
    m, k = g.shape
    if not np.all(np.isfinite(g)):
        raise NumericError("effective channel contains non-finite entries")
    total = (g * p) @ g.conj().T
    eye = sigma2 * np.eye(m)
    factors = []
    for i in range(k):
        s_i = total - p[i] * np.outer(g[:, i], g[:, i].conj()) + eye
        s_i = 0.5 * (s_i + s_i.conj().T)
        try:
            factors.append(sla.cho_factor(s_i, lower=True, check_finite=False))
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"interference matrix for user {i} is not positive definite") from exc
    return factors


def optimal_beamformers(chan: ChannelRealization, phase: PhaseVector, powers,
                        sigma2: float) -> Beamformer:
    """Per-user SINR-maximizing unit-norm receive combiners.

    A user with a zero effective channel gets the first standard basis
    vector; every other row is (S_k + sigma2*I)^{-1} g_k normalized.
    """
    if sigma2 <= 0:
        raise ConfigurationError(f"sigma2 must be positive, got {sigma2}")
    p = _power_array(powers)
    g = effective_channel(chan, phase)
    factors = interference_cholesky(g, p, sigma2)
    rows = np.zeros((chan.k, chan.m), dtype=complex)
    for i in range(chan.k):
        if np.linalg.norm(g[:, i]) == 0.0:
            rows[i, 0] = 1.0
            continue
        x = sla.cho_solve(factors[i], g[:, i], check_finite=False)
        rows[i] = x / np.linalg.norm(x)
    return Beamformer(rows=rows)


def post_bf_sinr_values(g: np.ndarray, p: np.ndarray, sigma2: float) -> np.ndarray:
    """SINRs under the optimal combiner, straight from the effective channels."""
    factors = interference_cholesky(g, p, sigma2)
    out = np.empty(g.shape[1])
    for i, factor in enumerate(factors):
        x = sla.cho_solve(factor, g[:, i], check_finite=False)
        out[i] = p[i] * np.real(np.vdot(g[:, i], x))
    return out


def post_bf_sinr(chan: ChannelRealization, phase: PhaseVector, powers,
                 sigma2: float) -> SinrReport:
    """SINR of every user assuming each applies its optimal receive combiner."""
    if sigma2 <= 0:
        raise ConfigurationError(f"sigma2 must be positive, got {sigma2}")
    p = _power_array(powers)
    g = effective_channel(chan, phase)
    return SinrReport.from_per_user(post_bf_sinr_values(g, p, sigma2))
