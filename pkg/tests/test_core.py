import numpy as np
import pytest

from ris_maxmin import (Beamformer, ChannelRealization, ConfigurationError,
                        PhaseVector, PowerAllocation, SinrReport, SystemConfig,
                        effective_channel, noise_power, sinr_per_user)

from conftest import random_beamformer, random_phase, synth_channel


def test_config_defaults_and_noise():
    cfg = SystemConfig(m=12, n=24, k=6)
    assert cfg.p_max == 0.5
    assert cfg.kappa == 10.0
    assert cfg.bandwidth_hz == 1e8
    # -94 dBm for 100 MHz
    assert cfg.sigma2 == pytest.approx(10 ** (-9.4) * 1e-3, rel=1e-12)
    assert cfg.sar_ref.shape == (6,)
    assert cfg.emf_max.shape == (6,)


@pytest.mark.parametrize("kwargs", [
    dict(m=0, n=1, k=1),
    dict(m=1, n=1, k=1, alpha=0.0),
    dict(m=1, n=1, k=1, alpha=1.5),
    dict(m=1, n=1, k=1, sigma2=-1.0),
    dict(m=1, n=1, k=1, p_max=0.0),
    dict(m=1, n=1, k=1, r_min=70.0, r_max=10.0),
])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ConfigurationError):
        SystemConfig(**kwargs)


def test_phase_vector_round_trip(rng):
    phase = random_phase(rng, 8, alpha=0.7)
    assert np.allclose(np.abs(phase.phi), 1.0, atol=1e-12)
    assert np.allclose(phase.phi_vec, 0.7 * phase.phi)
    again = PhaseVector.from_phi(phase.phi, alpha=0.7)
    assert np.allclose(again.theta, phase.theta)
    with pytest.raises(ConfigurationError):
        PhaseVector.from_phi(np.array([1.0, 0.5 + 0.0j]))


def test_beamformer_requires_unit_rows(rng):
    with pytest.raises(ConfigurationError):
        Beamformer(rows=np.array([[1.0, 1.0]], dtype=complex))


def test_report_checks_minimum():
    with pytest.raises(ConfigurationError):
        SinrReport(per_user=np.array([1.0, 2.0]), minimum=2.0)
    rep = SinrReport.from_per_user(np.array([3.0, 1.5, 2.0]))
    assert rep.minimum == 1.5


def test_effective_channel_identity_case():
    chan = ChannelRealization(h1=np.ones((1, 1)), ris_corr_sqrt=np.ones((1, 1)),
                              h2=np.ones((1, 1)), user_positions=np.zeros((1, 2)))
    phase = PhaseVector(theta=np.zeros(1), alpha=1.0)
    assert effective_channel(chan, phase) == pytest.approx(np.array([[1.0]]))
    half = PhaseVector(theta=np.zeros(1), alpha=0.5)
    assert effective_channel(chan, half) == pytest.approx(np.array([[0.5]]))


def test_effective_channel_matches_direct_product(rng):
    chan = synth_channel(rng, 3, 2, 2, identity_corr=False)
    phase = random_phase(rng, 2, alpha=0.9)
    g = effective_channel(chan, phase)
    for k in range(2):
        direct = chan.h1 @ chan.ris_corr_sqrt @ np.diag(phase.phi_vec) @ chan.h2[k]
        assert np.abs(g[:, k] - direct).max() < 1e-12


def test_effective_channel_linear_in_user_channel_and_alpha(rng):
    chan = synth_channel(rng, 4, 3, 2)
    phase = random_phase(rng, 3, alpha=1.0)
    scaledc = ChannelRealization(h1=chan.h1, ris_corr_sqrt=chan.ris_corr_sqrt,
                                 h2=3.0 * chan.h2, user_positions=chan.user_positions)
    assert np.allclose(effective_channel(scaledc, phase), 3.0 * effective_channel(chan, phase))
    half = PhaseVector(theta=phase.theta, alpha=0.5)
    assert np.allclose(effective_channel(chan, half), 0.5 * effective_channel(chan, phase))


def test_effective_channel_dimension_mismatch(rng):
    chan = synth_channel(rng, 3, 4, 2)
    with pytest.raises(ConfigurationError):
        effective_channel(chan, random_phase(rng, 5))


def test_single_user_no_interference():
    chan = ChannelRealization(h1=np.ones((1, 1)), ris_corr_sqrt=np.ones((1, 1)),
                              h2=np.ones((1, 1)), user_positions=np.zeros((1, 2)))
    phase = PhaseVector(theta=np.zeros(1), alpha=1.0)
    bf = Beamformer(rows=np.ones((1, 1), dtype=complex))
    rep = sinr_per_user(chan, phase, PowerAllocation(np.array([1.0])), bf, sigma2=0.5)
    assert rep.per_user[0] == pytest.approx(2.0, rel=1e-14)


def test_zero_power_means_zero_sinr(rng):
    chan = synth_channel(rng, 3, 4, 3)
    phase = random_phase(rng, 4)
    bf = random_beamformer(rng, 3, 3)
    rep = sinr_per_user(chan, phase, np.zeros(3), bf, sigma2=1.0)
    assert np.all(rep.per_user == 0.0)
    assert rep.minimum == 0.0


def test_two_user_scalar_oracle(rng):
    # hand-enumerable 2x2 gain arithmetic, checked against the vector path
    chan = synth_channel(rng, 2, 2, 2)
    phase = random_phase(rng, 2)
    bf = random_beamformer(rng, 2, 2)
    p = np.array([0.8, 0.4])
    sigma2 = 0.7
    g = effective_channel(chan, phase)
    expected = []
    for k in range(2):
        sig = p[k] * abs(np.vdot(bf.rows[k], g[:, k])) ** 2
        other = 1 - k
        intf = p[other] * abs(np.vdot(bf.rows[k], g[:, other])) ** 2
        expected.append(sig / (intf + sigma2 * np.linalg.norm(bf.rows[k]) ** 2))
    rep = sinr_per_user(chan, phase, p, bf, sigma2)
    assert np.abs(rep.per_user - np.array(expected)).max() < 1e-12


def test_sinr_invariant_to_combiner_phase(rng):
    chan = synth_channel(rng, 3, 4, 3)
    phase = random_phase(rng, 4)
    bf = random_beamformer(rng, 3, 3)
    p = rng.uniform(0.1, 1.0, 3)
    base = sinr_per_user(chan, phase, p, bf, 1.0).per_user
    for _ in range(5):
        spins = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        spun = Beamformer(rows=bf.rows * spins[:, None])
        assert np.allclose(sinr_per_user(chan, phase, p, spun, 1.0).per_user, base, rtol=1e-12)


def test_single_user_sinr_linear_in_power(rng):
    chan = synth_channel(rng, 3, 4, 1)
    phase = random_phase(rng, 4)
    bf = random_beamformer(rng, 1, 3)
    one = sinr_per_user(chan, phase, np.array([1.0]), bf, 1.0).minimum
    for c in (0.25, 2.0, 7.5):
        scaled = sinr_per_user(chan, phase, np.array([c]), bf, 1.0).minimum
        assert scaled == pytest.approx(c * one, rel=1e-12)


def test_report_minimum_matches_per_user(rng):
    for _ in range(20):
        chan = synth_channel(rng, 3, 4, 4)
        rep = sinr_per_user(chan, random_phase(rng, 4), rng.uniform(0, 1, 4),
                            random_beamformer(rng, 4, 3), 1.0)
        assert rep.minimum == rep.per_user.min()


def test_sigma_must_be_positive(rng):
    chan = synth_channel(rng, 2, 2, 2)
    with pytest.raises(ConfigurationError):
        sinr_per_user(chan, random_phase(rng, 2), np.ones(2), random_beamformer(rng, 2, 2), 0.0)


def test_noise_power_values():
    assert noise_power(1.0) == pytest.approx(10 ** (-17.4) * 1e-3, rel=1e-12)
    assert noise_power(1e8) == pytest.approx(10 ** (-9.4) * 1e-3, rel=1e-12)
