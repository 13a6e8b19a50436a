"""Max-min SINR power control under per-user caps, plus the exposure cap fold.

The max-min problem (maximize the smallest SINR subject to 0 <= p_k <=
cap_k) is solved by bisection on the target SINR tau. Feasibility of a
candidate tau is decided by iterating the standard interference mapping

    p_k <- min(cap_k, tau * (sum_{i != k} p_i f[k, i] + n_k) / f[k, k])

from p = 0 to its fixed point: the iteration is monotone nondecreasing, and
tau is feasible exactly when the fixed point meets every SINR target within
the caps. This solves the same optimization a geometric-programming solver
would, without the dependency.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import ChannelRealization, PhaseVector, PowerAllocation, _bf_matrix, effective_channel
from .errors import ConfigurationError, DomainError, NumericError

FIXED_POINT_MAX_ITER = 500
FIXED_POINT_ATOL = 1e-10
BISECTION_RTOL = 1e-8


@dataclass(frozen=True)
class GainTable:
    """Link gains f[k, i] = |b_k^H g_i|^2 and noise terms n_k = sigma2*||b_k||^2."""

    f: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        f = np.atleast_2d(np.asarray(self.f, dtype=float))
        n = np.atleast_1d(np.asarray(self.n, dtype=float))
        if f.shape[0] != f.shape[1] or f.shape[0] != n.shape[0]:
            raise ConfigurationError(f"gain table shapes inconsistent: f {f.shape}, n {n.shape}")
        if np.any(f < 0) or np.any(n <= 0):
            raise ConfigurationError("gains must be nonnegative and noise terms positive")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "n", n)

    @property
    def k(self) -> int:
        return self.n.shape[0]


def gain_table(chan: ChannelRealization, phase: PhaseVector, bf, sigma2: float) -> GainTable:
    """Evaluate the power-control gain table for fixed combiners and phases."""
    rows = _bf_matrix(bf)
    g = effective_channel(chan, phase)
    cross = rows.conj() @ g
    return GainTable(f=np.abs(cross) ** 2, n=sigma2 * np.sum(np.abs(rows) ** 2, axis=1))


class PowerControlResult(NamedTuple):
    power: PowerAllocation
    tau: float
    degenerate: bool


def _interference(f: np.ndarray, p: np.ndarray) -> np.ndarray:
    return f @ p - np.diagonal(f) * p


def _fixed_point(f: np.ndarray, n: np.ndarray, cap: np.ndarray, tau: float):
    """Run the capped interference iteration from p = 0.

    Returns (p, feasible). Non-convergence within the iteration budget is
    treated as infeasible, which errs on the conservative side.
    """
    diag = np.diagonal(f)
    p = np.zeros_like(cap)
    for _ in range(FIXED_POINT_MAX_ITER):
        required = tau * (_interference(f, p) + n) / diag
        p_new = np.minimum(cap, required)
        if np.max(np.abs(p_new - p)) <= FIXED_POINT_ATOL:
            p = p_new
            required = tau * (_interference(f, p) + n) / diag
            return p, bool(np.all(required <= cap * (1.0 + 1e-9)))
        p = p_new
    return p, False


def max_min_power(gains: GainTable, p_cap) -> PowerControlResult:
    """Globally optimal max-min SINR power allocation under per-user caps.

    Returns the optimizing powers, the achieved minimum SINR, and a
    degeneracy flag. When several power vectors achieve the optimum (users
    decoupled enough that some have headroom), the minimal-power one is
    returned: it comes straight out of the fixed-point iteration and emits
    the least exposure. A user with zero direct gain makes the problem
    degenerate: the caps are returned with tau = 0 so an enclosing
    alternating loop can continue.
    """
    cap = np.atleast_1d(np.asarray(p_cap, dtype=float))
    if cap.shape != gains.n.shape:
        raise ConfigurationError(f"cap shape {cap.shape} does not match k={gains.k}")
    if np.any(cap <= 0):
        raise ConfigurationError("power caps must be positive")
    if not (np.all(np.isfinite(gains.f)) and np.all(np.isfinite(gains.n))):
        raise NumericError("gain table contains non-finite entries")

    diag = np.diagonal(gains.f)
    if np.any(diag <= 0.0):
        return PowerControlResult(PowerAllocation(cap.copy()), 0.0, True)

    tau_hi = float(np.min(cap * diag / gains.n))
    p_best, feasible = _fixed_point(gains.f, gains.n, cap, tau_hi)
    if not feasible:
        lo, hi = 0.0, tau_hi
        p_best = np.zeros_like(cap)
        while hi - lo > BISECTION_RTOL * hi:
            mid = 0.5 * (lo + hi)
            p_mid, ok = _fixed_point(gains.f, gains.n, cap, mid)
            if ok:
                lo, p_best = mid, p_mid
            else:
                hi = mid

    sinr = diag * p_best / (_interference(gains.f, p_best) + gains.n)
    return PowerControlResult(PowerAllocation(p_best), float(sinr.min()), False)


def effective_power_cap(p_max: float, sar_ref, emf_max) -> np.ndarray:
    """Fold the exposure limit into the transmit power cap.

    Each user's cap is min(p_max, emf_max_k / sar_ref_k): exposure is
    sar_ref_k watts-per-kilogram per transmitted watt, so the quotient is the
    largest power that keeps exposure within emf_max_k.
    """
    sar = np.atleast_1d(np.asarray(sar_ref, dtype=float))
    emf = np.atleast_1d(np.asarray(emf_max, dtype=float))
    if np.any(sar <= 0):
        raise DomainError("sar_ref must be positive")
    return np.minimum(p_max, emf / sar)
