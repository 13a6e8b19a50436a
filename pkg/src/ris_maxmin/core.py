"""Shared value types and the exact uplink SINR arithmetic.

All powers are stored in watts and all SINRs in linear scale; dBm/dB
conversions happen only at the CLI/CSV boundary. Every type here is an
immutable value object and every operation is a pure function, so they are
safe to share across threads.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

TWO_PI = 2.0 * np.pi


def noise_power(bandwidth_hz: float) -> float:
    """Thermal noise power in watts: -174 dBm/Hz plus 10*log10(bandwidth)."""
    if bandwidth_hz <= 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    dbm = -174.0 + 10.0 * np.log10(bandwidth_hz)
    return float(10.0 ** (dbm / 10.0) * 1e-3)


def db10(x):
    """Linear power ratio to dB; zero maps to -inf."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def _as_float_array(value, k: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(k, arr.item())
    if arr.shape != (k,):
        raise ConfigurationError(f"{name} must be a scalar or length-{k} sequence, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Scenario constants: dimensions, powers, noise, geometry, exposure caps.

    ``m`` BS antennas, ``n`` RIS elements, ``k`` single-antenna users.
    ``sigma2`` defaults to the thermal noise power for ``bandwidth_hz``.
    ``sar_ref`` (W/kg per watt transmitted) and ``emf_max`` (W/kg) may be
    scalars or per-user sequences; they are stored as length-``k`` arrays.
    Element spacings ``d_bs`` and ``d_ris`` are fractions of the carrier
    wavelength, which is why no carrier frequency appears anywhere.
    """

    m: int
    n: int
    k: int
    alpha: float = 1.0
    sigma2: float | None = None
    kappa: float = 10.0
    p_max: float = 0.5
    sar_ref: np.ndarray | float = 63e-4
    emf_max: np.ndarray | float = 0.0029
    gain_bs_dbi: float = 5.0
    gain_ris_dbi: float = 0.0
    gain_user_dbi: float = 0.0
    ris_position: tuple[float, float] = (0.5, 0.5)
    r_min: float = 10.0
    r_max: float = 70.0
    bandwidth_hz: float = 1e8
    d_bs: float = 0.5
    d_ris: float = 0.5
    ris_corr_rho: float = 0.0

    def __post_init__(self):
        for name in ("m", "n", "k"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
            object.__setattr__(self, name, int(getattr(self, name)))
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.sigma2 is None:
            object.__setattr__(self, "sigma2", noise_power(self.bandwidth_hz))
        if self.sigma2 <= 0:
            raise ConfigurationError(f"sigma2 must be positive, got {self.sigma2}")
        if self.p_max <= 0:
            raise ConfigurationError(f"p_max must be positive, got {self.p_max}")
        if not self.r_min < self.r_max:
            raise ConfigurationError(f"need r_min < r_max, got {self.r_min} >= {self.r_max}")
        if not 0.0 <= self.ris_corr_rho < 1.0:
            raise ConfigurationError(f"ris_corr_rho must lie in [0, 1), got {self.ris_corr_rho}")
        object.__setattr__(self, "sar_ref", _as_float_array(self.sar_ref, self.k, "sar_ref"))
        object.__setattr__(self, "emf_max", _as_float_array(self.emf_max, self.k, "emf_max"))
        object.__setattr__(self, "ris_position", (float(self.ris_position[0]), float(self.ris_position[1])))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One random draw of the propagation state.

    ``h1``: (m, n) BS-RIS matrix. ``ris_corr_sqrt``: (n, n) square root of
    the RIS spatial correlation matrix. ``h2``: (k, n), row ``i`` is the
    RIS-to-user-``i`` channel with its amplitude path loss absorbed.
    ``user_positions``: (k, 2) planar coordinates in metres.
    """

    h1: np.ndarray
    ris_corr_sqrt: np.ndarray
    h2: np.ndarray
    user_positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h1", np.asarray(self.h1, dtype=complex))
        object.__setattr__(self, "ris_corr_sqrt", np.asarray(self.ris_corr_sqrt, dtype=complex))
        object.__setattr__(self, "h2", np.atleast_2d(np.asarray(self.h2, dtype=complex)))
        object.__setattr__(self, "user_positions", np.atleast_2d(np.asarray(self.user_positions, dtype=float)))
        m, n = self.h1.shape
        if self.ris_corr_sqrt.shape != (n, n):
            raise ConfigurationError(
                f"ris_corr_sqrt shape {self.ris_corr_sqrt.shape} does not match n={n}")
        if self.h2.shape[1] != n:
            raise ConfigurationError(f"h2 shape {self.h2.shape} does not match n={n}")
        if self.user_positions.shape != (self.h2.shape[0], 2):
            raise ConfigurationError(
                f"user_positions shape {self.user_positions.shape} does not match k={self.h2.shape[0]}")
        for name in ("h1", "ris_corr_sqrt", "h2"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ConfigurationError(f"{name} contains non-finite entries")

    @property
    def m(self) -> int:
        return self.h1.shape[0]

    @property
    def n(self) -> int:
        return self.h1.shape[1]

    @property
    def k(self) -> int:
        return self.h2.shape[0]

    def cascade_matrix(self) -> np.ndarray:
        """The (m, n) product h1 @ ris_corr_sqrt shared by every optimizer."""
        return self.h1 @ self.ris_corr_sqrt


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """Unit-modulus RIS coefficients with their common reflection amplitude.

    ``theta`` holds the n phase angles in [0, 2*pi); ``phi`` is exp(j*theta)
    and ``phi_vec`` the amplitude-scaled vector the quadratic forms consume.
    """

    theta: np.ndarray
    alpha: float = 1.0
    phi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        theta = np.mod(np.asarray(self.theta, dtype=float), TWO_PI)
        if theta.ndim != 1:
            raise ConfigurationError("theta must be a 1-d array of angles")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", np.exp(1j * theta))

    @classmethod
    def from_phi(cls, phi, alpha: float = 1.0) -> "PhaseVector":
        phi = np.asarray(phi, dtype=complex)
        dev = np.abs(np.abs(phi) - 1.0)
        if dev.size and dev.max() > 1e-9:
            raise ConfigurationError(f"phase coefficients must be unit modulus, worst deviation {dev.max():.3e}")
        return cls(theta=np.angle(phi), alpha=alpha)

    @classmethod
    def random(cls, n: int, alpha: float, rng: np.random.Generator) -> "PhaseVector":
        return cls(theta=rng.uniform(0.0, TWO_PI, size=n), alpha=alpha)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def phi_vec(self) -> np.ndarray:
        return self.alpha * self.phi


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-user transmit powers in watts."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ConfigurationError("powers must be a 1-d array of finite nonnegative watts")
        object.__setattr__(self, "p", p)

    @property
    def k(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True, eq=False)
class Beamformer:
    """Unit-norm receive combiners, one length-m row per user."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=complex))
        norms = np.linalg.norm(rows, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ConfigurationError(
                f"combiner rows must be unit norm, worst deviation {np.abs(norms - 1.0).max():.3e}")
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True, eq=False)
class SinrReport:
    """Per-user linear SINRs, their minimum, and an optional per-stage trace."""

    per_user: np.ndarray
    minimum: float
    stage_trace: tuple = ()

    def __post_init__(self):
        per_user = np.asarray(self.per_user, dtype=float)
        if np.any(per_user < 0):
            raise ConfigurationError("SINRs cannot be negative")
        if abs(self.minimum - per_user.min()) > 1e-12 * max(1.0, abs(self.minimum)):
            raise ConfigurationError("minimum does not match per-user SINRs")
        object.__setattr__(self, "per_user", per_user)
        object.__setattr__(self, "stage_trace", tuple(self.stage_trace))

    @classmethod
    def from_per_user(cls, per_user, stage_trace=()) -> "SinrReport":
        per_user = np.asarray(per_user, dtype=float)
        return cls(per_user=per_user, minimum=float(per_user.min()), stage_trace=stage_trace)


def _power_array(powers) -> np.ndarray:
    if isinstance(powers, PowerAllocation):
        return powers.p
    return np.asarray(powers, dtype=float)


def _bf_matrix(bf) -> np.ndarray:
    if isinstance(bf, Beamformer):
        return bf.rows
    return np.atleast_2d(np.asarray(bf, dtype=complex))


def effective_channel(chan: ChannelRealization, phase: PhaseVector) -> np.ndarray:
    """Per-user effective BS channels through the RIS.

    Returns the (m, k) matrix whose column i is
    h1 @ ris_corr_sqrt @ diag(alpha * phi) @ h2[i]; linear in alpha and in
    each user channel.
    """
    if phase.n != chan.n:
        raise ConfigurationError(f"phase has {phase.n} elements but channel has {chan.n}")
    return chan.cascade_matrix() @ (phase.phi_vec[:, None] * chan.h2.T)


def sinr_per_user(chan: ChannelRealization, phase: PhaseVector, powers, bf,
                  sigma2: float) -> SinrReport:
    """Uplink SINR of every user for the given powers and receive combiners.

    user i's SINR is p_i |b_i^H g_i|^2 over the sum of p_j |b_i^H g_j|^2 for
    j != i plus sigma2 * ||b_i||^2. The noise term uses the actual combiner
    norm, so un-normalized probe combiners are handled correctly.
    """
    if sigma2 <= 0:
        raise ConfigurationError(f"sigma2 must be positive, got {sigma2}")
    p = _power_array(powers)
    rows = _bf_matrix(bf)
    g = effective_channel(chan, phase)
    cross = rows.conj() @ g                      # entry (i, j) = b_i^H g_j
    gains = np.abs(cross) ** 2
    signal = p * np.diagonal(gains)
    interference = gains @ p - signal
    noise = sigma2 * np.sum(np.abs(rows) ** 2, axis=1)
    return SinrReport.from_per_user(signal / (interference + noise))
