"""RIS phase optimization: quadratic-form machinery, the smooth-min gradient
method, and the quantized random-swap heuristic.

The fixed-combiner SINR of user k is a ratio of quadratic forms in the
scaled phase vector u = alpha * phi:

    sinr_k(u) = p_k |v[k,k]^H u|^2 / (sum_{i != k} p_i |v[k,i]^H u|^2 + noise_k)

where v[k,i] = conj(h2[i]) * ((h1 @ ris_corr_sqrt)^H b_k). Note the pair
indexing: interference from user i flows through user k's combiner, so one
vector per (combiner, transmitter) pair is needed to reproduce the true
SINR. The diagonal v[k,k] satisfies v[k,k]^H u = b_k^H g_k exactly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import (TWO_PI, ChannelRealization, PhaseVector, _bf_matrix,
                   _power_array)
from .errors import ConfigurationError, DomainError, NumericError


@dataclass(frozen=True, eq=False)
class QuadraticFormSet:
    """Pairwise rank-one forms for the fixed-combiner SINR.

    ``pair_vectors``: (k, k, n) complex; entry [k, i] is the vector whose
    inner product with the scaled phase vector equals b_k^H g_i.
    ``noise``: sigma2 * ||b_k||^2 per user. ``powers``: watts per user.
    """

    pair_vectors: np.ndarray
    noise: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        pv = np.asarray(self.pair_vectors, dtype=complex)
        if pv.ndim != 3 or pv.shape[0] != pv.shape[1]:
            raise ConfigurationError(f"pair_vectors must be (k, k, n), got {pv.shape}")
        object.__setattr__(self, "pair_vectors", pv)
        object.__setattr__(self, "noise", np.asarray(self.noise, dtype=float))
        object.__setattr__(self, "powers", np.asarray(self.powers, dtype=float))

    @property
    def k(self) -> int:
        return self.pair_vectors.shape[0]

    @property
    def n(self) -> int:
        return self.pair_vectors.shape[2]

    @property
    def vectors(self) -> np.ndarray:
        """Diagonal (k, n) vectors: vectors[k]^H u equals b_k^H g_k."""
        idx = np.arange(self.k)
        return self.pair_vectors[idx, idx]

    def rank_one(self, k: int, i: int | None = None) -> np.ndarray:
        """The Hermitian PSD rank-one matrix of pair (k, i); i defaults to k."""
        v = self.pair_vectors[k, k if i is None else i]
        return np.outer(v, v.conj())

    def sinr(self, phi_vec: np.ndarray) -> np.ndarray:
        """Per-user SINR at one scaled phase vector."""
        inner = np.einsum("kin,n->ki", self.pair_vectors.conj(), phi_vec)
        gains = np.abs(inner) ** 2
        signal = self.powers * np.diagonal(gains)
        interference = gains @ self.powers - signal
        return signal / (interference + self.noise)

    def min_sinr(self, phi_vec: np.ndarray) -> float:
        return float(self.sinr(phi_vec).min())

    def sinr_batch(self, phi_vecs: np.ndarray) -> np.ndarray:
        """Per-user SINRs for a batch of scaled phase vectors, shape (n, c) -> (k, c)."""
        k = self.k
        flat = self.pair_vectors.conj().reshape(k * k, self.n)
        gains = np.abs(flat @ phi_vecs).reshape(k, k, -1) ** 2
        signal = self.powers[:, None] * gains[np.arange(k), np.arange(k)]
        interference = np.einsum("kic,i->kc", gains, self.powers) - signal
        return signal / (interference + self.noise[:, None])

    def lifted_sinr(self, v: np.ndarray) -> np.ndarray:
        """Per-user SINR ratio evaluated on a lifted matrix V in place of u u^H."""
        quads = np.real(np.einsum("kin,nm,kim->ki", self.pair_vectors.conj(), v, self.pair_vectors))
        quads = np.maximum(quads, 0.0)
        signal = self.powers * np.diagonal(quads)
        interference = quads @ self.powers - signal
        return signal / (interference + self.noise)


def build_quadratic_forms(chan: ChannelRealization, bf, powers, sigma2: float) -> QuadraticFormSet:
    """Assemble the quadratic forms for the current combiners and powers."""
    if sigma2 <= 0:
        raise ConfigurationError(f"sigma2 must be positive, got {sigma2}")
    rows = _bf_matrix(bf)
    p = _power_array(powers)
    cascade = chan.cascade_matrix()
    projected = cascade.conj().T @ rows.T          # column k: (h1 R^(1/2))^H b_k
    pair = chan.h2.conj()[None, :, :] * projected.T[:, None, :]
    return QuadraticFormSet(
        pair_vectors=pair,
        noise=sigma2 * np.sum(np.abs(rows) ** 2, axis=1),
        powers=p,
    )


def lse_objective(sinr_values) -> float:
    """Smooth surrogate for the minimum: log(sum_k exp(1/sinr_k)).

    Its reciprocal lower-bounds min_k sinr_k, so driving it down pushes the
    worst SINR up. Computed with a shifted log-sum-exp to avoid overflow.
    """
    rho = np.asarray(sinr_values, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("all SINR values must be positive")
    x = 1.0 / rho
    shift = x.max()
    return float(shift + np.log(np.sum(np.exp(x - shift))))


def _effective_channel_fast(cascade: np.ndarray, h2: np.ndarray, phi_vec: np.ndarray) -> np.ndarray:
    return cascade @ (phi_vec[:, None] * h2.T)


def sinr_phase_derivative(chan: ChannelRealization, powers, phase: PhaseVector,
                          sigma2: float):
    """Complex derivative of every post-combining SINR w.r.t. every phase.

    Returns (deriv, sinr): ``deriv[k, n]`` is the Wirtinger derivative of
    sinr_k with respect to conj(phi_n) (the amplitude factor included), and
    sinr_k = p_k g_k^H (S_k + sigma2*I)^{-1} g_k. Writing T = (S_k +
    sigma2*I)^{-1}, A = h1 @ ris_corr_sqrt and c_i = g_k^H T g_i,

        deriv[k] = p_k * alpha * (conj(h2[k]) - sum_{i != k} p_i c_i conj(h2[i])) * (A^H T g_k)

    elementwise over n, which is the trace form of the matrix-inverse
    derivative identity collapsed onto rank-one factors. The real tangent
    along the unit circle is 2*Re(j * phi_n * conj(deriv[k, n])).
    """
    if sigma2 <= 0:
        raise ConfigurationError(f"sigma2 must be positive, got {sigma2}")
    p = _power_array(powers)
    cascade = chan.cascade_matrix()
    g = _effective_channel_fast(cascade, chan.h2, phase.phi_vec)
    if not np.all(np.isfinite(g)):
        raise NumericError("effective channel contains non-finite entries")
    m, k = g.shape
    total = (g * p) @ g.conj().T
    eye = sigma2 * np.eye(m)
    deriv = np.zeros((k, chan.n), dtype=complex)
    sinr = np.zeros(k)
    for j in range(k):
        s_j = total - p[j] * np.outer(g[:, j], g[:, j].conj()) + eye
        s_j = 0.5 * (s_j + s_j.conj().T)
        try:
            factor = sla.cho_factor(s_j, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"interference matrix for user {j} is not positive definite") from exc
        solved = sla.cho_solve(factor, g, check_finite=False)     # T g_i for all i
        coupling = g[:, j].conj() @ solved                         # c_i = g_j^H T g_i
        sinr[j] = p[j] * coupling[j].real
        weights = -p * coupling
        weights[j] = 1.0
        combo = weights @ chan.h2.conj()                           # (n,)
        deriv[j] = p[j] * phase.alpha * combo * (cascade.conj().T @ solved[:, j])
    return deriv, sinr


def sinr_phase_tangent(chan: ChannelRealization, powers, phase: PhaseVector,
                       sigma2: float):
    """Real derivative of every post-combining SINR along each phase angle."""
    deriv, sinr = sinr_phase_derivative(chan, powers, phase, sigma2)
    tangent = 2.0 * np.real(1j * phase.phi[None, :] * deriv.conj())
    return tangent, sinr


@dataclass(frozen=True)
class LseOptions:
    max_iters: int = 200
    grad_tol: float = 1e-6
    armijo_c: float = 1e-4
    step_shrink: float = 0.5
    step_init: float = 1.0
    max_backtracks: int = 50
    check_gradient: bool = False


@dataclass
class LseResult:
    phase: PhaseVector
    min_sinr: float
    iterations: int
    converged: bool
    grad_norm: float
    warning: str | None = None


def _postbf_values(cascade, h2, p, sigma2, alpha, theta):
    from .beamforming import post_bf_sinr_values

    phi_vec = alpha * np.exp(1j * theta)
    return post_bf_sinr_values(_effective_channel_fast(cascade, h2, phi_vec), p, sigma2)


def lse_gradient_phase(chan: ChannelRealization, powers, init: PhaseVector,
                       sigma2: float, options: LseOptions | None = None) -> LseResult:
    """Projected gradient descent on the smooth-min surrogate over the angles.

    Minimizes lse_objective of the post-combining SINRs with Armijo
    backtracking; the unit-modulus constraint is kept by working in the
    angle parametrization and wrapping mod 2*pi. Returns the iterate with
    the best minimum SINR seen, never worse than ``init``.
    """
    opts = options or LseOptions()
    p = _power_array(powers)
    cascade = chan.cascade_matrix()
    alpha = init.alpha
    theta = init.theta.copy()

    rho = _postbf_values(cascade, chan.h2, p, sigma2, alpha, theta)
    if np.any(rho <= 0):
        return LseResult(init, float(rho.min()), 0, False, np.inf,
                         warning="degenerate SINR at the initial phase")
    best_min, best_theta = float(rho.min()), theta.copy()
    objective = lse_objective(rho)

    converged = False
    grad_norm = np.inf
    iterations = 0
    for iterations in range(1, opts.max_iters + 1):
        phase = PhaseVector(theta=theta, alpha=alpha)
        tangent, rho = sinr_phase_tangent(chan, p, phase, sigma2)
        if opts.check_gradient and iterations == 1:
            _assert_tangent_matches_fd(chan, p, phase, sigma2, tangent)
        inv = 1.0 / rho
        weights = np.exp(inv - inv.max())
        weights /= weights.sum()
        grad = -(weights / rho ** 2) @ tangent
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < opts.grad_tol:
            converged = True
            break

        step = opts.step_init
        gsq = float(grad @ grad)
        accepted = False
        for _ in range(opts.max_backtracks):
            theta_new = np.mod(theta - step * grad, TWO_PI)
            rho_new = _postbf_values(cascade, chan.h2, p, sigma2, alpha, theta_new)
            if np.all(rho_new > 0):
                obj_new = lse_objective(rho_new)
                if obj_new <= objective - opts.armijo_c * step * gsq:
                    accepted = True
                    break
            step *= opts.step_shrink
        if not accepted:
            break
        theta, objective = theta_new, obj_new
        if rho_new.min() > best_min:
            best_min, best_theta = float(rho_new.min()), theta_new.copy()

    return LseResult(
        phase=PhaseVector(theta=best_theta, alpha=alpha),
        min_sinr=best_min,
        iterations=iterations,
        converged=converged,
        grad_norm=grad_norm,
    )


def finite_difference_tangent(chan: ChannelRealization, powers, phase: PhaseVector,
                              sigma2: float, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of the post-combining SINRs over each angle."""
    p = _power_array(powers)
    cascade = chan.cascade_matrix()
    fd = np.zeros((chan.k, phase.n))
    for n in range(phase.n):
        theta_hi = phase.theta.copy()
        theta_hi[n] += step
        theta_lo = phase.theta.copy()
        theta_lo[n] -= step
        hi = _postbf_values(cascade, chan.h2, p, sigma2, phase.alpha, theta_hi)
        lo = _postbf_values(cascade, chan.h2, p, sigma2, phase.alpha, theta_lo)
        fd[:, n] = (hi - lo) / (2.0 * step)
    return fd


def _assert_tangent_matches_fd(chan, p, phase, sigma2, tangent, step=1e-6, rtol=1e-5):
    fd = finite_difference_tangent(chan, p, phase, sigma2, step)
    scale = max(np.abs(fd).max(), 1e-12)
    err = np.abs(tangent - fd)
    if np.any(err > rtol * np.maximum(np.abs(fd), 1e-4 * scale)):
        raise NumericError("analytic phase gradient disagrees with finite differences")


def phase_grid(bits: int) -> np.ndarray:
    """The 2^bits equispaced angles 2*pi*i/2^bits, i = 0..2^bits-1."""
    if bits < 1:
        raise ConfigurationError(f"bits must be >= 1, got {bits}")
    q = 2 ** bits
    return TWO_PI * np.arange(q) / q


def grid_phase_from_uniform(u: np.ndarray, bits: int, alpha: float) -> PhaseVector:
    """Map uniform(0,1) draws onto the quantized grid; coarser grids of the
    same draws are coarsenings of finer ones, which pairs runs across bit
    depths."""
    grid = phase_grid(bits)
    idx = np.minimum((np.asarray(u) * grid.size).astype(int), grid.size - 1)
    return PhaseVector(theta=grid[idx], alpha=alpha)


@dataclass(frozen=True)
class QuantOptions:
    bits: int = 3
    window: int = 50
    epsilon: float = 1e-8
    max_evals: int = 200_000


@dataclass
class QuantResult:
    phase: PhaseVector
    min_sinr: float
    evaluations: int
    tau_trace: np.ndarray
    warning: str | None = None


def quantized_heuristic_phase(objective, init: PhaseVector, rng: np.random.Generator,
                              options: QuantOptions | None = None) -> QuantResult:
    """Random single-element swaps over the quantized phase grid.

    ``objective`` maps a unit-modulus complex vector to the minimum SINR.
    Repeatedly pick a random element and try every grid level there, keeping
    a swap only when the objective strictly increases. One history entry is
    recorded per candidate evaluated; the search stops once the summed
    improvement across the trailing window drops below ``epsilon``, which is
    guaranteed to happen because strict improvements on a finite grid are
    finite in number.
    """
    opts = options or QuantOptions()
    if opts.window < 1:
        raise ConfigurationError(f"window must be >= 1, got {opts.window}")
    grid = phase_grid(opts.bits)
    q = grid.size
    idx = np.argmin(np.abs(np.mod(init.theta[:, None] - grid[None, :] + np.pi, TWO_PI) - np.pi), axis=1)
    if np.max(np.abs(np.mod(init.theta - grid[idx] + np.pi, TWO_PI) - np.pi)) > 1e-9:
        raise ConfigurationError(f"initial phases must lie on the {q}-point grid")

    phi = np.exp(1j * grid[idx])
    current = float(objective(phi))
    trace = [current]
    warning = None
    while True:
        n = int(rng.integers(init.n))
        for level in range(q):
            if level != idx[n]:
                cand = phi.copy()
                cand[n] = np.exp(1j * grid[level])
                value = float(objective(cand))
                # strict increase beyond roundoff of the phase arithmetic
                if value > current * (1.0 + 1e-12):
                    idx[n] = level
                    phi = cand
                    current = value
            trace.append(current)
        if len(trace) > opts.window:
            recent = trace[-opts.window - 1:-1]
            if sum(trace[-1] - t for t in recent) < opts.epsilon:
                break
        if len(trace) >= opts.max_evals:
            warning = "evaluation budget exhausted before the improvement window settled"
            break

    return QuantResult(
        phase=PhaseVector(theta=grid[idx], alpha=init.alpha),
        min_sinr=current,
        evaluations=len(trace) - 1,
        tau_trace=np.asarray(trace),
        warning=warning,
    )
