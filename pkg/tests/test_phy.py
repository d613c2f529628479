"""Receiver combining math: MRC, LMMSE, precoder selection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from v2xsim import phy


def random_channel(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_cov(rng, n_int=3, n0=0.1):
    g = random_channel(rng, (n_int, 2))
    p = rng.uniform(0.1, 2.0, size=n_int)
    return phy.interference_covariance(g, p, n0), list(zip(g, p))


# -- MRC ------------------------------------------------------------------

def test_mrc_unit_channel():
    assert phy.mrc_sinr([1.0, 0.0], [], n0=1.0, p_tx=1.0) == pytest.approx(1.0)


def test_mrc_coherent_combining_gain():
    assert phy.mrc_sinr([1.0, 1.0], [], n0=1.0, p_tx=1.0) == pytest.approx(2.0)


def test_mrc_with_interferer_matches_hand_evaluation():
    h = np.array([1.0, 1.0j])
    g = np.array([1.0, -1.0j])
    # w = conj(h); |w^H h|^2 = 4, |w^H g|^2 = |1 + (-j)(-j)... | computed below
    w = np.conj(h)
    num = np.abs(np.vdot(w.conj(), h)) ** 2   # |w^T h|^2 with w = h*
    sig = np.abs(np.vdot(h, h)) ** 2
    intf = np.abs(np.vdot(h, g)) ** 2
    expected = sig / (intf * 1.0 + np.vdot(h, h).real * 1.0)
    got = phy.mrc_sinr(h, [(g, 1.0)], n0=1.0, p_tx=1.0)
    assert got == pytest.approx(float(expected.real))


def test_mrc_zero_channel_gives_zero():
    assert phy.mrc_sinr([0.0, 0.0], [], n0=1.0) == 0.0


def test_mrc_no_interference_closed_form(rng):
    for _ in range(100):
        h = random_channel(rng, 2)
        n0, p = rng.uniform(0.1, 2.0, 2)
        got = phy.mrc_sinr(h, [], n0=n0, p_tx=p)
        assert got == pytest.approx(float(np.vdot(h, h).real) * p / n0)


# -- LMMSE ----------------------------------------------------------------

def test_lmmse_equals_mrc_in_white_noise(rng):
    for _ in range(10_000):
        h = random_channel(rng, 2)
        n0 = rng.uniform(0.05, 2.0)
        p = rng.uniform(0.1, 3.0)
        mrc = phy.mrc_sinr(h, [], n0=n0, p_tx=p)
        lmmse = phy.lmmse_sinr(h, n0 * np.eye(2), p_tx=p)
        assert lmmse == pytest.approx(mrc, rel=1e-9)


def test_lmmse_never_below_mrc(rng):
    for _ in range(10_000):
        h = random_channel(rng, 2)
        r, interferers = random_cov(rng)
        p = rng.uniform(0.1, 3.0)
        mrc = phy.mrc_sinr(h, interferers, n0=0.1, p_tx=p)
        lmmse = phy.lmmse_sinr(h, r, p_tx=p)
        assert lmmse >= mrc * (1 - 1e-9)


def test_lmmse_nulls_orthogonal_interferer():
    h = np.array([1.0, 1.0j])
    g = np.array([1.0, -1.0j]) * 30.0          # strong, orthogonal to h
    n0 = 0.01
    r = phy.interference_covariance(g[None], [1.0], n0)
    sinr = phy.lmmse_sinr(h, r, p_tx=1.0)
    assert sinr == pytest.approx(float(np.vdot(h, h).real) / n0, rel=1e-6)


def test_lmmse_beats_random_weights(rng):
    h = random_channel(rng, 2)
    r, interferers = random_cov(rng)
    opt = phy.lmmse_sinr(h, r, p_tx=1.0)
    for _ in range(1000):
        w = random_channel(rng, 2)
        num = np.abs(np.vdot(w, h)) ** 2
        den = float((np.conj(w) @ r @ w).real)
        assert num / den <= opt * (1 + 1e-9)


def test_lmmse_weights_shape_and_kind(rng):
    h = random_channel(rng, 2)
    r, _ = random_cov(rng)
    w = phy.lmmse_weights(h, phy.CovarianceEstimate(r))
    assert w.receiver_kind == "LMMSE"
    assert w.w.shape == (2,)


def test_batch_matches_scalar(rng):
    h = random_channel(rng, (50, 2))
    g = random_channel(rng, (3, 50, 2))
    p = np.array([0.5, 1.0, 2.0])
    r = phy.interference_covariance(g, p, 0.1)
    mrc_b = phy.mrc_sinr_batch(h, r, p_tx=1.3)
    lmmse_b = phy.lmmse_sinr_batch(h, r, p_tx=1.3)
    for k in range(50):
        interferers = [(g[i, k], p[i]) for i in range(3)]
        assert mrc_b[k] == pytest.approx(
            phy.mrc_sinr(h[k], interferers, n0=0.1, p_tx=1.3), rel=1e-9)
        assert lmmse_b[k] == pytest.approx(
            phy.lmmse_sinr(h[k], r[k], p_tx=1.3), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
def test_common_scaling_leaves_sinr_unchanged(seed, scale):
    rng = np.random.default_rng(seed)
    h = random_channel(rng, 2)
    g = random_channel(rng, (2, 2))
    p = [1.0, 0.5]
    n0 = 0.2
    base_r = phy.interference_covariance(g, p, n0)
    # scale channels by sqrt(s) and noise by s: all powers scale together
    r2 = phy.interference_covariance(g * np.sqrt(scale), p, n0 * scale)
    assert phy.lmmse_sinr(h * np.sqrt(scale), r2) == pytest.approx(
        phy.lmmse_sinr(h, base_r), rel=1e-6)
    got = phy.mrc_sinr(h * np.sqrt(scale),
                       [(gi * np.sqrt(scale), pi) for gi, pi in zip(g, p)],
                       n0=n0 * scale)
    want = phy.mrc_sinr(h, list(zip(g, p)), n0=n0)
    assert got == pytest.approx(want, rel=1e-6)


# -- precoder selection ---------------------------------------------------

def test_codebook_entries():
    expected = np.array([[1, 1], [1, -1], [1, 1j], [1, -1j]]) / np.sqrt(2)
    assert np.allclose(phy.CODEBOOK, expected)
    assert np.allclose(np.linalg.norm(phy.CODEBOOK, axis=1), 1.0)


def test_select_precoder_tie_breaks_to_zero():
    h = np.broadcast_to(np.eye(2), (4, 2, 2))
    r = np.broadcast_to(np.eye(2), (4, 2, 2)) * 0.1
    assert phy.select_precoder(h, r) == 0


def test_select_precoder_prefers_aligned_codeword():
    for k, c in enumerate(phy.CODEBOOK):
        # both rows of H proportional to conj(c): H @ c has maximal norm
        h = np.stack([np.conj(c), 2 * np.conj(c)])[None].repeat(3, axis=0)
        r = np.broadcast_to(np.eye(2), (3, 2, 2)) * 0.05
        assert phy.select_precoder(h, r) == k


def test_select_precoder_matches_bruteforce(rng):
    for _ in range(10_000):
        h = random_channel(rng, (2, 2, 2))        # 2 PRBs
        g = random_channel(rng, (2, 2, 2))
        r = phy.interference_covariance(g, [1.0, 0.7], 0.1)
        means = [phy.lmmse_sinr_batch(
            np.einsum("prt,t->pr", h, c), r).mean() for c in phy.CODEBOOK]
        assert phy.select_precoder(h, r) == int(np.argmax(means))


def test_select_precoder_scale_invariant(rng):
    h = random_channel(rng, (5, 2, 2))
    g = random_channel(rng, (2, 5, 2))
    r = phy.interference_covariance(g, [1.0, 0.4], 0.1)
    assert phy.select_precoder(h, r) == phy.select_precoder(17.0 * h, r)


# -- per-PRB SINR ---------------------------------------------------------

def test_per_prb_sinr_no_interference_flat():
    h = np.ones((2, 50), dtype=complex)
    sinr = phy.per_prb_sinr(h, np.zeros((0, 2, 50)), [], n0=0.5,
                            receiver_kind="mrc", p_tx=2.0)
    assert np.allclose(sinr, 2.0 * 2.0 / 0.5)


def test_per_prb_sinr_monotone_in_interference(rng):
    h = random_channel(rng, (2, 50))
    g = random_channel(rng, (3, 2, 50))
    p = [1.0, 0.5, 0.2]
    for kind in ("mrc", "lmmse"):
        weak = phy.per_prb_sinr(h, g, p, 0.1, kind)
        strong = phy.per_prb_sinr(h, 2.0 * g, p, 0.1, kind)
        assert np.all(strong < weak)


def test_per_prb_sinr_three_rsu_toy(rng):
    # hand-built SINR quotient for MRC on each PRB
    h = random_channel(rng, (2, 4))
    g = random_channel(rng, (2, 2, 4))
    p = [0.8, 1.2]
    n0 = 0.3
    p_tx = 1.7
    got = phy.per_prb_sinr(h, g, p, n0, "mrc", p_tx)
    for prb in range(4):
        w = np.conj(h[:, prb])
        num = p_tx * np.abs(w @ h[:, prb]) ** 2
        den = n0 * float(np.vdot(h[:, prb], h[:, prb]).real)
        for i in range(2):
            den += p[i] * np.abs(w @ g[i, :, prb]) ** 2
        assert got[prb] == pytest.approx(num / den, rel=1e-9)


def test_combine_sinr_rejects_unknown_kind():
    with pytest.raises(ValueError):
        phy.combine_sinr(np.ones((1, 2)), np.eye(2)[None], "zf")
