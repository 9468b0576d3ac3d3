import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from otawave.allocation import (
    AllocationError,
    ChannelRealization,
    kkt_batch,
    mse_closed_form,
    oracle_grid_search,
    read_channels_csv,
    solve_isi,
    solve_no_isi,
    write_allocation_csv,
)
from otawave.moments import WaveformMoments, all_moments
from otawave.waveforms import btrc, raised_cosine


def rayleigh(rng, K):
    return np.abs(rng.standard_normal(K) + 1j * rng.standard_normal(K)) / math.sqrt(2)


def joint_optimum(m, h, P, sigma2, seed=0):
    """Box-constrained joint minimization over (a, b) from several starts."""
    h = np.sort(h)
    K = h.size
    sp = math.sqrt(P)

    def f(v):
        return mse_closed_form(v[0], v[1:], h, m, sigma2)

    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(6):
        x0 = np.concatenate([[rng.uniform(0.05, 2)], rng.uniform(0.05, sp, K)])
        r = minimize(f, x0, method="L-BFGS-B", bounds=[(1e-6, 50)] + [(1e-9, sp)] * K,
                     options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 5000})
        best = min(best, r.fun)
    return best


def test_single_device_no_isi():
    al = solve_no_isi(1.0, 1.0, [1.0], 1.0, 1.0)
    assert al.a == pytest.approx(0.5)
    assert np.allclose(al.b, [1.0])
    assert al.mse == pytest.approx(0.5)
    ref = oracle_grid_search(WaveformMoments.from_scalars(1.0, 1.0), [1.0], 1.0, 1.0)
    assert ref.a == pytest.approx(0.5, rel=1e-6)


def test_single_device_isi():
    al = solve_isi(WaveformMoments.from_scalars(1.0, 2.0), [1.0], 1.0, 1.0)
    assert al.a == pytest.approx(1 / 3)
    assert np.allclose(al.b, [1.0])


def test_perfect_inversion():
    m = all_moments(raised_cosine(0.5), 0.0, 0)
    h = np.array([0.3, 0.9, 1.7])
    al = solve_no_isi(m.eps1, m.eps2, h, 1e6, 0.0)
    assert al.mse < 1e-9
    assert np.allclose(al.a * al.b * al.channels.h, 1.0)


def test_rayleigh_instance_matches_oracles():
    rng = np.random.default_rng(42)
    m = all_moments(raised_cosine(0.5), 0.1, 0)
    h = rayleigh(rng, 20)
    sigma2 = 1 / 10
    al = solve_no_isi(m.eps1, m.eps2, h, 1.0, sigma2)
    grid = oracle_grid_search(m, h, 1.0, sigma2)
    assert abs(al.mse - grid.mse) <= 1e-6 * grid.mse
    assert al.mse <= joint_optimum(m, h, 1.0, sigma2) + 1e-9


def test_two_device_isi_instance():
    m = all_moments(raised_cosine(0.2), 0.2, 6)
    h = [0.5, 2.0]
    al = solve_isi(m, h, 1.0, 0.1)
    grid = oracle_grid_search(m, h, 1.0, 0.1)
    assert abs(al.mse - grid.mse) <= 1e-6 * grid.mse
    assert al.mse <= joint_optimum(m, h, 1.0, 0.1) + 1e-9


def test_seeded_k5_self_consistency():
    rng = np.random.default_rng(7)
    m = all_moments(btrc(0.5), 0.1, 6)
    h = rayleigh(rng, 5)
    al = solve_isi(m, h, 1.0, 0.1)
    assert abs(al.mse - oracle_grid_search(m, h, 1.0, 0.1).mse) <= 1e-6 * al.mse


def test_collapse_to_no_isi():
    m = all_moments(raised_cosine(0.3), 0.0, 6)
    h = [0.2, 0.7, 1.1, 2.4]
    a1 = solve_isi(m, h, 1.0, 0.1)
    a2 = solve_no_isi(m.eps1, m.eps2, h, 1.0, 0.1)
    assert a1.a == a2.a and np.array_equal(a1.b, a2.b) and a1.i_star == a2.i_star


@settings(max_examples=40, deadline=None)
@given(K=st.integers(1, 20), seed=st.integers(0, 2**31), snr=st.floats(0, 20),
       P=st.floats(0.5, 2.0), alpha=st.sampled_from([0.2, 0.5, 0.8]), sigma=st.sampled_from([0.05, 0.1, 0.2]))
def test_kkt_conditions(K, seed, snr, P, alpha, sigma):
    m = all_moments(raised_cosine(alpha), sigma, 6)
    h = rayleigh(np.random.default_rng(seed), K)
    sigma2 = P / 10 ** (snr / 10)
    al = solve_isi(m, h, P, sigma2)
    sp = math.sqrt(P)
    hs, b, a = al.channels.h, al.b, al.a
    # complementary slackness
    assert np.all(b[:al.i_star] == sp)
    assert np.all(b[al.i_star:] <= sp * (1 + 1e-12))
    assert np.all(b > 0)
    # stationarity by central differences

    def f(a_, b_):
        return mse_closed_form(a_, b_, hs, m, sigma2)

    d = 1e-6
    scale = max(1.0, al.mse)
    assert abs((f(a + d, b) - f(a - d, b)) / (2 * d)) < 1e-6 * scale / max(a, 1e-3)
    for k in range(al.i_star, K):
        e = np.zeros(K)
        e[k] = d
        assert abs((f(a, b + e) - f(a, b - e)) / (2 * d)) < 1e-6 * scale
    assert al.mse == pytest.approx(al.mse_candidates[al.i_star - 1])
    assert al.mse <= oracle_grid_search(m, h, P, sigma2).mse + 1e-6


def test_candidates_min_is_returned():
    rng = np.random.default_rng(3)
    m = all_moments(raised_cosine(0.5), 0.1, 6)
    al = solve_isi(m, rayleigh(rng, 12), 1.0, 0.1)
    finite = al.mse_candidates[np.isfinite(al.mse_candidates)]
    assert al.mse == pytest.approx(finite.min())
    assert np.isfinite(al.mse_candidates[-1])


def test_ties_pick_smallest_index():
    # identical channels with no noise: every candidate gives the same objective
    a, b, i_star, table = kkt_batch(1.0, 1.0, np.ones((1, 4)), 1.0, 0.0)
    finite = table[0][np.isfinite(table[0])]
    assert np.allclose(finite, finite[0])
    assert i_star[0] == int(np.argmax(np.isfinite(table[0]))) + 1


def test_degenerate_floor():
    m = all_moments(raised_cosine(0.5), 0.1, 6)
    h = [0.5, 1.0, 1.5]
    al = solve_isi(m, h, 1e8, 0.0)
    floor = 3 * (1 - m.eps_check**2 / m.eps_hat)
    assert al.mse == pytest.approx(floor, rel=1e-9)


def test_mse_closed_form_examples():
    m = WaveformMoments.from_scalars(1.0, 1.0)
    assert mse_closed_form(0.0, [0.3, 2.0, 1.0], [1.0, 2.0, 3.0], m, 1.0) == 3.0
    assert mse_closed_form(1.0, [1.0, 0.5], [1.0, 2.0], m, 0.0) == pytest.approx(0.0)
    assert mse_closed_form(0.5, [1.0], [1.0], m, 1.0) == pytest.approx(0.5)
    with pytest.raises(AllocationError):
        mse_closed_form(1.0, [1.0], [1.0, 2.0], m, 0.0)


def test_mse_against_direct_expectation():
    # E over uniform data of (a*sum_k b_k h_k x_k z_k - sum x_k)^2, evaluated term by term
    m = all_moments(raised_cosine(0.4), 0.15, 2)
    a, b, h, s2 = 0.7, np.array([0.4, 0.9]), np.array([1.2, 0.8]), 0.05
    g = a * b * h
    direct = sum(gk * gk * m.eps_tilde[0] - 2 * gk * m.eps_check + 1 for gk in g)
    direct += sum(gk * gk * (m.eps_tilde[-1] + m.eps_tilde[1]) for gk in g) + s2 * a * a
    assert mse_closed_form(a, b, h, m, s2) == pytest.approx(direct, rel=1e-14)


def test_unsorted_input_and_permutation():
    m = all_moments(raised_cosine(0.5), 0.1, 6)
    h = [1.5, 0.2, 0.9]
    al = solve_isi(m, h, 1.0, 0.1)
    assert np.all(np.diff(al.channels.h) >= 0)
    bu = al.b_unsorted()
    assert bu[1] == al.b[0] and bu[0] == al.b[2]


@pytest.mark.parametrize("bad", [[], [0.0, 1.0], [-1.0], [np.nan]])
def test_invalid_channels(bad):
    with pytest.raises(AllocationError):
        ChannelRealization.from_gains(bad)


def test_invalid_parameters():
    with pytest.raises(AllocationError):
        solve_no_isi(1.0, 0.0, [1.0], 1.0, 1.0)
    with pytest.raises(AllocationError):
        solve_no_isi(1.0, 1.0, [1.0], 0.0, 1.0)
    with pytest.raises(AllocationError):
        solve_no_isi(1.0, 1.0, [1.0], 1.0, -1.0)
    with pytest.raises(AllocationError):
        oracle_grid_search(WaveformMoments.from_scalars(1, 1), [1.0], 1.0, 1.0, grid=10)


def test_batch_matches_scalar():
    rng = np.random.default_rng(9)
    m = all_moments(btrc(0.3), 0.1, 6)
    H = np.sort(np.stack([rayleigh(rng, 6) for _ in range(5)]), axis=1)
    a, b, i_star, _ = kkt_batch(m.eps_check, m.eps_hat, H, 1.0, 0.1)
    for r in range(5):
        al = solve_isi(m, H[r], 1.0, 0.1)
        assert al.a == a[r] and np.array_equal(al.b, b[r]) and al.i_star == i_star[r]


def test_channel_and_allocation_csv(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("h\n0.5\n1.5\n0.25\n")
    h = read_channels_csv(p)
    assert np.allclose(h, [0.5, 1.5, 0.25])
    al = solve_isi(all_moments(raised_cosine(0.5), 0.1, 6), h, 1.0, 0.1)
    out = tmp_path / "alloc.csv"
    write_allocation_csv(al, out)
    assert out.exists()
    (tmp_path / "bad.csv").write_text("x\n1\n")
    with pytest.raises(AllocationError):
        read_channels_csv(tmp_path / "bad.csv")
