"""Per-stream post-detection SNR under four CSI regimes.

All detectors are zero-forcing style linear front ends; they differ in which
part of the channel the receiver is assumed to know:

  DirectCsi  pseudoinverse of the direct channel only; the reflected path
             acts as extra additive noise.
  RisCsi     pseudoinverse of the cascaded (surface) channel only; the
             direct path acts as extra additive noise.
  FullCsi    pseudoinverse of the exact composite channel (genie benchmark).
  Joint      QR of the direct channel; the rotated cascade contributes a
             noncoherent term on each diagonal, and off-diagonal leakage is
             ignored exactly as the SNR definition prescribes.

Noise is never sampled: each gamma is a deterministic function of the drawn
channel blocks, which is what lets the Monte Carlo engine reuse one draw
across schemes (common random numbers).
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import cmatrix
from .channel import composite_batch, composite_channel
from .errors import ConfigurationError, NumericalRankError


class Scheme(enum.Enum):
    """Detection regime; values double as CLI tokens."""

    DirectCsi = "d"
    RisCsi = "ris"
    FullCsi = "full"
    Joint = "joint"

    @classmethod
    def from_token(cls, token):
        for scheme in cls:
            if scheme.value == token:
                return scheme
        raise ConfigurationError(
            f"unknown scheme {token!r}; expected one of "
            f"{[s.value for s in cls]}"
        )


@dataclass(frozen=True, eq=False)
class SnrSample:
    """Instantaneous per-stream SNRs of one realization under one scheme."""

    scheme: Scheme
    gamma: np.ndarray  # (M,), linear SNR per stream


def threshold_from_rate(rate):
    """SNR threshold gamma_th = 2^rate - 1 for a target rate in bit/s/Hz."""
    if not rate > 0:
        raise ConfigurationError(f"rate must be > 0, got {rate}")
    return float(2.0**rate - 1.0)


def _cascade(real):
    return (real.ris_rx * np.exp(1j * real.phases)[np.newaxis, :]) @ real.tx_ris


def snr_direct(real, cfg):
    """Direct-CSI ZF: gamma_i = p / [(p L xi2_H sum_k xi2_G,k + 1) g_i].

    g_i = [(H_d^H H_d)^{-1}]_{ii}. The cascade is not equalized, so its full
    average power p L xi2_H sum_k xi2_G,k inflates the noise floor.
    """
    g = cmatrix.gram_inverse_diag(real.direct)
    p = cfg.tx_snr
    noise = p * cfg.ris_elements * cfg.gain_ris_rx * cfg.gain_tx_ris.sum() + 1.0
    return SnrSample(Scheme.DirectCsi, p / (noise * g))


def floor_direct(real, cfg):
    """p -> inf limit of snr_direct on the same realization."""
    g = cmatrix.gram_inverse_diag(real.direct)
    scale = cfg.ris_elements * cfg.gain_ris_rx * cfg.gain_tx_ris.sum()
    return SnrSample(Scheme.DirectCsi, 1.0 / (scale * g))


def snr_ris(real, cfg):
    """Cascade-CSI ZF: gamma_i = p / [(p sum_k xi2_D,k + 1) g_i].

    g_i = [((H Phi G)^H H Phi G)^{-1}]_{ii}, computed with the drawn phases
    in place. The unequalized direct path raises the noise floor by its
    average power p sum_k xi2_D,k. Needs L >= M for the cascade to have
    full column rank.
    """
    if cfg.ris_elements < cfg.streams:
        raise ConfigurationError(
            "cascade-CSI detection needs ris_elements >= streams "
            f"({cfg.ris_elements} < {cfg.streams})"
        )
    g = cmatrix.gram_inverse_diag(_cascade(real))
    p = cfg.tx_snr
    noise = p * cfg.gain_direct.sum() + 1.0
    return SnrSample(Scheme.RisCsi, p / (noise * g))


def floor_ris(real, cfg):
    """p -> inf limit of snr_ris on the same realization."""
    if cfg.ris_elements < cfg.streams:
        raise ConfigurationError(
            "cascade-CSI detection needs ris_elements >= streams "
            f"({cfg.ris_elements} < {cfg.streams})"
        )
    g = cmatrix.gram_inverse_diag(_cascade(real))
    return SnrSample(Scheme.RisCsi, 1.0 / (cfg.gain_direct.sum() * g))


def snr_full(real, cfg):
    """Full-CSI ZF on the exact composite channel: gamma_i = p / g_i.

    g_i is the inverse-Gram diagonal of H_d + H Phi G itself, never of a
    Gaussian stand-in, so Monte Carlo built on this detector measures the
    true benchmark.
    """
    g = cmatrix.gram_inverse_diag(composite_channel(real))
    return SnrSample(Scheme.FullCsi, cfg.tx_snr / g)


def snr_joint(real, cfg):
    """Joint coherent/noncoherent detection via QR of the direct channel.

    With H_d = QR, gamma_i = p |[R + Q^H (H Phi G)]_{ii}|^2. The result is
    invariant to the QR phase convention since both addends pick up the
    same unit factor.
    """
    q, r = cmatrix.qr_decompose(real.direct)
    m = cfg.streams
    b = _cascade(real)
    t = np.einsum("nm,nm->m", q[:, :m].conj(), b)
    diag = np.diagonal(r)[:m] + t
    return SnrSample(Scheme.Joint, cfg.tx_snr * np.abs(diag) ** 2)


# ---------------------------------------------------------------------------
# Batched kernels for the Monte Carlo engine. Same math as above on stacked
# arrays (leading axis = trial). Rank deficiency is flagged per trial rather
# than raised, so the engine can count failures.
# ---------------------------------------------------------------------------


def _batch_rank_ok(rdiag_abs):
    top = rdiag_abs.max(axis=1)
    return rdiag_abs.min(axis=1) >= cmatrix.RANK_RTOL * top


def _batch_gram_inverse_diag(a):
    """(diag((A^H A)^{-1}), rank-ok flags) for a (count, n, m) stack."""
    _, r = np.linalg.qr(a)
    d = np.abs(np.diagonal(r, axis1=1, axis2=2))
    ok = _batch_rank_ok(d)
    if not ok.all():
        r = r.copy()
        eye = np.eye(r.shape[1], dtype=r.dtype)
        r[~ok] = eye
    rinv = np.linalg.inv(r)
    return np.sum(np.abs(rinv) ** 2, axis=2), ok


def _batch_cascade(batch):
    return (batch.ris_rx * np.exp(1j * batch.phases)[:, np.newaxis, :]) @ batch.tx_ris


def batch_gammas(batch, cfg, schemes):
    """Per-stream SNRs for each requested scheme on a shared channel stack.

    Returns (gammas, ok) with gammas[scheme] of shape (count, M) and ok a
    (count,) mask of trials where every requested decomposition had full
    numerical rank.
    """
    p = cfg.tx_snr
    count = batch.direct.shape[0]
    ok = np.ones(count, dtype=bool)
    gammas = {}
    need_cascade = any(
        s in (Scheme.RisCsi, Scheme.FullCsi, Scheme.Joint) for s in schemes
    )
    cascade = _batch_cascade(batch) if need_cascade else None

    if Scheme.DirectCsi in schemes:
        g, k = _batch_gram_inverse_diag(batch.direct)
        noise = p * cfg.ris_elements * cfg.gain_ris_rx * cfg.gain_tx_ris.sum() + 1.0
        gammas[Scheme.DirectCsi] = p / (noise * g)
        ok &= k
    if Scheme.RisCsi in schemes:
        if cfg.ris_elements < cfg.streams:
            raise ConfigurationError(
                "cascade-CSI detection needs ris_elements >= streams "
                f"({cfg.ris_elements} < {cfg.streams})"
            )
        g, k = _batch_gram_inverse_diag(cascade)
        noise = p * cfg.gain_direct.sum() + 1.0
        gammas[Scheme.RisCsi] = p / (noise * g)
        ok &= k
    if Scheme.FullCsi in schemes:
        g, k = _batch_gram_inverse_diag(batch.direct + cascade)
        gammas[Scheme.FullCsi] = p / g
        ok &= k
    if Scheme.Joint in schemes:
        q, r = np.linalg.qr(batch.direct)
        rdiag = np.diagonal(r, axis1=1, axis2=2)
        ok &= _batch_rank_ok(np.abs(rdiag))
        t = np.einsum("bnm,bnm->bm", q.conj(), cascade)
        gammas[Scheme.Joint] = p * np.abs(rdiag + t) ** 2
    return gammas, ok
