import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ris_maxmin import (DomainError, GainTable, effective_power_cap,
                        gain_table, max_min_power)
from ris_maxmin.power import _fixed_point

from conftest import random_beamformer, random_phase, synth_channel


def grid_search_two_users(f, n, caps, points=2000):
    """Dense grid oracle for the K=2 max-min problem."""
    p1 = np.linspace(0.0, caps[0], points)
    p2 = np.linspace(0.0, caps[1], points)
    s1 = f[0, 0] * p1[:, None] / (f[0, 1] * p2[None, :] + n[0])
    s2 = f[1, 1] * p2[None, :] / (f[1, 0] * p1[:, None] + n[1])
    return np.minimum(s1, s2).max()


def random_gain_table(rng, k):
    f = rng.uniform(0.0, 1.0, (k, k))
    f[np.arange(k), np.arange(k)] = rng.uniform(0.5, 2.0, k)
    return GainTable(f=f, n=rng.uniform(0.1, 1.0, k))


def test_gain_table_entries(rng):
    chan = synth_channel(rng, 3, 4, 2)
    phase = random_phase(rng, 4)
    bf = random_beamformer(rng, 2, 3)
    table = gain_table(chan, phase, bf, sigma2=0.8)
    from ris_maxmin import effective_channel
    g = effective_channel(chan, phase)
    for k in range(2):
        for i in range(2):
            assert table.f[k, i] == pytest.approx(abs(np.vdot(bf.rows[k], g[:, i])) ** 2, rel=1e-12)
        assert table.n[k] == pytest.approx(0.8 * np.linalg.norm(bf.rows[k]) ** 2, rel=1e-12)


def test_single_user_takes_cap():
    table = GainTable(f=np.array([[2.0]]), n=np.array([0.5]))
    result = max_min_power(table, np.array([0.4]))
    assert result.power.p[0] == pytest.approx(0.4, rel=1e-9)
    assert result.tau == pytest.approx(0.4 * 2.0 / 0.5, rel=1e-8)
    assert not result.degenerate


def test_decoupled_users_reach_the_bottleneck_optimum():
    f = np.diag([1.0, 2.0, 4.0])
    n = np.array([0.5, 0.5, 1.0])
    caps = np.array([0.3, 0.4, 0.2])
    result = max_min_power(GainTable(f=f, n=n), caps)
    # tau is pinned by the bottleneck user; that user transmits at its cap.
    # Among the tied optima the minimal-power vector is returned, so the
    # other users sit below cap at exactly tau.
    assert result.tau == pytest.approx(min(caps * np.diag(f) / n), rel=1e-8)
    bottleneck = int(np.argmin(caps * np.diag(f) / n))
    assert result.power.p[bottleneck] == pytest.approx(caps[bottleneck], rel=1e-8)
    sinr = np.diag(f) * result.power.p / n
    assert np.allclose(sinr, result.tau, rtol=1e-8)


def test_degenerate_direct_gain():
    f = np.array([[0.0, 0.1], [0.2, 1.0]])
    result = max_min_power(GainTable(f=f, n=np.array([1.0, 1.0])), np.array([0.5, 0.5]))
    assert result.degenerate
    assert result.tau == 0.0
    assert np.allclose(result.power.p, [0.5, 0.5])


def test_two_user_grid_oracle(rng):
    for _ in range(25):
        table = random_gain_table(rng, 2)
        caps = rng.uniform(0.2, 1.0, 2)
        result = max_min_power(table, caps)
        oracle = grid_search_two_users(table.f, table.n, caps)
        assert result.tau == pytest.approx(oracle, rel=1e-3)


def test_tau_equals_min_sinr_at_solution(rng):
    for k in (2, 3, 5):
        table = random_gain_table(rng, k)
        caps = rng.uniform(0.2, 1.0, k)
        result = max_min_power(table, caps)
        p = result.power.p
        sinr = np.diag(table.f) * p / (table.f @ p - np.diag(table.f) * p + table.n)
        assert result.tau == pytest.approx(sinr.min(), rel=1e-8)


def test_local_perturbation_cannot_improve(rng):
    for _ in range(10):
        table = random_gain_table(rng, 3)
        caps = rng.uniform(0.2, 1.0, 3)
        result = max_min_power(table, caps)
        p = result.power.p

        def min_sinr(q):
            return (np.diag(table.f) * q / (table.f @ q - np.diag(table.f) * q + table.n)).min()

        base = min_sinr(p)
        for k in range(3):
            for sign in (1.0, -1.0):
                q = p.copy()
                q[k] = np.clip(q[k] + sign * 1e-4 * caps[k], 0.0, caps[k])
                assert min_sinr(q) <= base * (1.0 + 1e-6)


def test_monotone_in_caps(rng):
    for _ in range(10):
        table = random_gain_table(rng, 3)
        caps = rng.uniform(0.2, 1.0, 3)
        tau0 = max_min_power(table, caps).tau
        bigger = caps.copy()
        bigger[rng.integers(3)] *= 1.5
        tau1 = max_min_power(table, bigger).tau
        assert tau1 >= tau0 * (1.0 - 1e-7)


def test_fixed_point_iterates_monotone(rng):
    table = random_gain_table(rng, 3)
    caps = rng.uniform(0.5, 1.0, 3)
    tau = 0.2
    diag = np.diag(table.f)
    p = np.zeros(3)
    for _ in range(60):
        p_new = np.minimum(caps, tau * (table.f @ p - diag * p + table.n) / diag)
        assert np.all(p_new >= p - 1e-15)
        p = p_new


def test_effective_cap_reference_constants():
    cap = effective_power_cap(0.5, 63e-4, 0.0029)
    assert cap[0] == pytest.approx(0.0029 / 0.0063, rel=1e-12)
    assert cap[0] == pytest.approx(0.4603, abs=5e-5)


@settings(max_examples=100, deadline=None)
@given(p_max=st.floats(1e-3, 10.0), sar=st.floats(1e-6, 1.0), emf=st.floats(1e-6, 10.0))
def test_effective_cap_properties(p_max, sar, emf):
    cap = effective_power_cap(p_max, sar, emf)[0]
    assert cap <= p_max
    assert cap * sar <= emf * (1 + 1e-12) or cap == p_max
    assert effective_power_cap(p_max, sar, np.inf)[0] == p_max
    if sar * p_max <= emf:
        assert cap == p_max


def test_effective_cap_rejects_bad_sar():
    with pytest.raises(DomainError):
        effective_power_cap(0.5, 0.0, 1.0)


def test_fixed_point_infeasible_tau():
    f = np.array([[1.0, 5.0], [5.0, 1.0]])
    n = np.array([1.0, 1.0])
    caps = np.array([1.0, 1.0])
    p, ok = _fixed_point(f, n, caps, tau=10.0)
    assert not ok
