"""Receiver combining and post-combining SINR.

All receivers operate on 2 Rx antennas.  MRC uses the conjugate desired
channel as weights; LMMSE whitens the (genie) interference-plus-noise
covariance.  SU-MIMO transmission is rank-1 through the 4-entry 2-Tx LTE
codebook.  The closed-form 2x2 algebra below is vectorised over arbitrary
leading axes (vehicles, PRBs) since the per-TTI hot path runs through it.
"""

from dataclasses import dataclass

import numpy as np

# rank-1 2-Tx codebook
CODEBOOK = np.array([
    [1.0, 1.0],
    [1.0, -1.0],
    [1.0, 1.0j],
    [1.0, -1.0j],
], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class ReceiverWeights:
    w: np.ndarray
    receiver_kind: str  # "MRC" | "LMMSE"


@dataclass(frozen=True)
class CovarianceEstimate:
    r: np.ndarray  # (..., 2, 2) Hermitian positive definite


def interference_covariance(interferer_channels, powers, n0) -> np.ndarray:
    """Sum_i p_i * g_i g_i^H + n0 * I.

    ``interferer_channels``: (n_int, ..., 2); ``powers``: per-interferer
    scalars (or broadcastable); returns (..., 2, 2).
    """
    g = np.asarray(interferer_channels)
    p = np.reshape(np.asarray(powers, dtype=float),
                   (-1,) + (1,) * (g.ndim - 1))
    outer = (p[..., None] * g[..., :, None] * np.conj(g[..., None, :])).sum(axis=0)
    return outer + n0 * np.eye(2)


def _quad_form(r, h):
    """h^H R h for R (...,2,2), h (...,2); returns real (...)."""
    a = r[..., 0, 0].real
    d = r[..., 1, 1].real
    b = r[..., 0, 1]
    h0, h1 = h[..., 0], h[..., 1]
    return (a * np.abs(h0) ** 2 + d * np.abs(h1) ** 2
            + 2.0 * (b * np.conj(h0) * h1).real)


def _quad_form_inv(r, h):
    """h^H R^{-1} h via the closed-form 2x2 inverse."""
    a = r[..., 0, 0].real
    d = r[..., 1, 1].real
    b = r[..., 0, 1]
    det = a * d - np.abs(b) ** 2
    h0, h1 = h[..., 0], h[..., 1]
    num = (d * np.abs(h0) ** 2 + a * np.abs(h1) ** 2
           - 2.0 * (b * np.conj(h0) * h1).real)
    return num / det


def mrc_sinr(h_desired, interferers, n0, p_tx=1.0):
    """Post-MRC SINR with weights w = conj(h).

    ``interferers`` is a list of (channel_vector, power) pairs.  Returns the
    linear SINR; a zero desired channel gives 0.
    """
    h = np.asarray(h_desired, dtype=complex).reshape(-1)
    hh = float(np.vdot(h, h).real)
    if hh == 0.0:
        return 0.0
    denom = hh * n0
    for g, p in interferers:
        g = np.asarray(g, dtype=complex).reshape(-1)
        denom += p * np.abs(np.vdot(h, g)) ** 2
    return p_tx * hh ** 2 / denom


def lmmse_weights(h_desired, cov) -> ReceiverWeights:
    """LMMSE weights (h h^H + R)^{-1} h for a rank-1 desired channel."""
    h = np.asarray(h_desired, dtype=complex).reshape(-1)
    r = cov.r if isinstance(cov, CovarianceEstimate) else np.asarray(cov)
    w = np.linalg.solve(np.outer(h, np.conj(h)) + r, h)
    return ReceiverWeights(w=w, receiver_kind="LMMSE")


def lmmse_sinr(h_desired, cov, p_tx=1.0):
    """Post-LMMSE SINR p * h^H R^{-1} h (R = interference + noise)."""
    h = np.asarray(h_desired, dtype=complex)
    r = cov.r if isinstance(cov, CovarianceEstimate) else np.asarray(cov)
    return p_tx * _quad_form_inv(r, np.sqrt(1.0) * h)


def mrc_sinr_batch(h, r_in, p_tx=1.0):
    """Vectorised MRC SINR: h (...,2), r_in (...,2,2) interference+noise."""
    hh = (np.abs(h) ** 2).sum(axis=-1)
    denom = _quad_form(r_in, h)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinr = p_tx * hh ** 2 / denom
    return np.where(hh > 0, sinr, 0.0)


def lmmse_sinr_batch(h, r_in, p_tx=1.0):
    """Vectorised LMMSE SINR: p * h^H R^{-1} h."""
    return p_tx * _quad_form_inv(r_in, h)


def combine_sinr(h, r_in, receiver_kind, p_tx=1.0):
    if receiver_kind.upper() == "MRC":
        return mrc_sinr_batch(h, r_in, p_tx)
    if receiver_kind.upper() == "LMMSE":
        return lmmse_sinr_batch(h, r_in, p_tx)
    raise ValueError(f"unknown receiver kind: {receiver_kind}")


def precoded_channel(h_mimo, codeword) -> np.ndarray:
    """Effective rank-1 channel H @ c for H (..., 2, n_tx)."""
    return np.einsum("...rt,t->...r", h_mimo, codeword)


def select_precoder(h_mimo, r_in, p_tx=1.0) -> int:
    """Best codebook index by mean post-LMMSE SINR over the reporting subband.

    ``h_mimo``: (n_prb, 2, 2) desired channel per PRB; ``r_in``:
    (n_prb, 2, 2).  Ties break to the lowest index (argmax on the mean).
    """
    means = np.empty(len(CODEBOOK))
    for k, c in enumerate(CODEBOOK):
        h_eff = precoded_channel(h_mimo, c)
        means[k] = lmmse_sinr_batch(h_eff, r_in, p_tx).mean()
    return int(np.argmax(means))


def per_prb_sinr(h_desired, interferer_channels, interferer_powers, n0,
                 receiver_kind, p_tx=1.0):
    """Post-combining SINR on every PRB for one vehicle.

    ``h_desired``: (2, n_prb) effective desired channel (precoder already
    applied for MIMO); ``interferer_channels``: (n_int, 2, n_prb) effective
    interfering channels.  Returns linear SINR of shape (n_prb,).
    """
    h = np.moveaxis(np.asarray(h_desired, dtype=complex), 0, -1)     # (P, 2)
    g = np.moveaxis(np.asarray(interferer_channels, dtype=complex), 1, -1)
    r_in = interference_covariance(g, interferer_powers, n0)
    return combine_sinr(h, r_in, receiver_kind, p_tx)
