"""Closed-form and quadrature outage probabilities per scheme.

Each function returns P(gamma_i < gamma_th) for one stream under one CSI
regime, matching the corresponding detector in `detectors`. DirectCsi and
RisCsi expressions are exact; FullCsi and Joint rest on the Gaussian
stand-in for the cascade, whose per-stream variance psi2 depends on the
selected scale mode (see `channel.clt_psi2`), so their accuracy improves
with the number of surface elements.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import DEFAULT_SCALE_MODE, SCALE_PAPER, clt_psi2
from .detectors import Scheme
from .errors import ConfigurationError
from .specfun import (
    QuadratureSpec,
    adaptive_quad,
    kummer_1f1_c2_scaled,
    marcum_q1_complement,
    product_gamma_cdf,
    regularized_lower_gamma,
)

JOINT_PRINTED = "printed"
JOINT_QUADRATURE = "quadrature"
JOINT_METHODS = (JOINT_PRINTED, JOINT_QUADRATURE)
DEFAULT_JOINT_METHOD = JOINT_QUADRATURE


@dataclass(frozen=True)
class OutagePoint:
    """One analytic outage value together with the inputs that fix it."""

    scheme: Scheme
    stream_index: int
    gamma_th: float
    probability: float


def _check_stream(cfg, i):
    if not (0 <= i < cfg.streams):
        raise ConfigurationError(
            f"stream index {i} out of range for {cfg.streams} streams"
        )


def _check_threshold(gamma_th):
    g = float(gamma_th)
    if g < 0 or not math.isfinite(g):
        raise ConfigurationError(f"gamma_th must be finite and >= 0, got {gamma_th}")
    return g


def outage_direct(cfg, i, gamma_th):
    """Direct-CSI outage: P(n, gamma_th (p L xi2_H S_G + 1)/(p xi2_D,i)).

    n = N - M + 1 and S_G = sum_k xi2_G,k; exact for Rayleigh links because
    1/(xi2_D,i [(H_d^H H_d)^{-1}]_{ii}) is Gamma(n) distributed.
    """
    _check_stream(cfg, i)
    g = _check_threshold(gamma_th)
    p = cfg.tx_snr
    noise = p * cfg.ris_elements * cfg.gain_ris_rx * cfg.gain_tx_ris.sum() + 1.0
    shape = cfg.rx_antennas - cfg.streams + 1
    return regularized_lower_gamma(shape, g * noise / (p * cfg.gain_direct[i]))


def outage_direct_limit(cfg, i, gamma_th):
    """p -> inf limit of outage_direct (the outage floor)."""
    _check_stream(cfg, i)
    g = _check_threshold(gamma_th)
    scale = cfg.ris_elements * cfg.gain_ris_rx * cfg.gain_tx_ris.sum()
    shape = cfg.rx_antennas - cfg.streams + 1
    return regularized_lower_gamma(shape, g * scale / cfg.gain_direct[i])


def _check_ris_dims(cfg):
    if not (cfg.rx_antennas >= cfg.ris_elements >= cfg.streams):
        raise ConfigurationError(
            "cascade-CSI outage needs rx_antennas >= ris_elements >= streams, "
            f"got {cfg.rx_antennas} >= {cfg.ris_elements} >= {cfg.streams}"
        )


def _ris_kappa(cfg, i, limit=False):
    denom = cfg.gain_ris_rx * cfg.gain_tx_ris[i]
    if limit:
        return cfg.gain_direct.sum() / denom
    return (cfg.tx_snr * cfg.gain_direct.sum() + 1.0) / (cfg.tx_snr * denom)


def outage_ris(cfg, i, gamma_th, quad=None):
    """Cascade-CSI outage via the product-of-gammas law.

    The stream-i post-ZF numerator factors as xi2_H xi2_G,i * U * V with
    independent U ~ Gamma(N-M+1), V ~ Gamma(L-M+1), hence
    P(out) = F_{UV}(kappa gamma_th), kappa = (p sum_k xi2_D,k + 1)/(p xi2_H
    xi2_G,i). Valid for N >= L >= M.
    """
    _check_stream(cfg, i)
    _check_ris_dims(cfg)
    g = _check_threshold(gamma_th)
    n1 = cfg.rx_antennas - cfg.streams + 1
    n2 = cfg.ris_elements - cfg.streams + 1
    return product_gamma_cdf(n1, n2, _ris_kappa(cfg, i) * g, quad)


def outage_ris_limit(cfg, i, gamma_th, quad=None):
    """p -> inf limit of outage_ris (the outage floor)."""
    _check_stream(cfg, i)
    _check_ris_dims(cfg)
    g = _check_threshold(gamma_th)
    n1 = cfg.rx_antennas - cfg.streams + 1
    n2 = cfg.ris_elements - cfg.streams + 1
    return product_gamma_cdf(n1, n2, _ris_kappa(cfg, i, limit=True) * g, quad)


def outage_full_clt(cfg, i, gamma_th, mode=DEFAULT_SCALE_MODE):
    """Full-CSI outage with the cascade replaced by its Gaussian stand-in.

    Composite column i then has per-entry variance xi2_D,i + psi2_i, and ZF
    gives P(out) = P(N-M+1, gamma_th / (p (xi2_D,i + psi2_i))). No floor:
    the argument vanishes as p grows.
    """
    _check_stream(cfg, i)
    g = _check_threshold(gamma_th)
    psi2 = clt_psi2(cfg, mode)[i]
    shape = cfg.rx_antennas - cfg.streams + 1
    return regularized_lower_gamma(
        shape, g / (cfg.tx_snr * (cfg.gain_direct[i] + psi2))
    )


def outage_joint_conditional(y, cfg, i, gamma_th, mode=DEFAULT_SCALE_MODE):
    """Joint-detection outage conditioned on the direct coherent power y.

    Given y = p |r_ii|^2, gamma_i is noncentral chi-square (2 dof,
    noncentrality y, per-dimension variance sigma2 = p psi2_i / 2), so the
    conditional outage is 1 - Q1(sqrt(y/sigma2), sqrt(gamma_th/sigma2)).
    """
    _check_stream(cfg, i)
    g = _check_threshold(gamma_th)
    if y < 0 or not math.isfinite(y):
        raise ConfigurationError(f"conditional power must be finite and >= 0, got {y}")
    sigma2 = 0.5 * cfg.tx_snr * clt_psi2(cfg, mode)[i]
    return marcum_q1_complement(math.sqrt(y / sigma2), math.sqrt(g / sigma2))


def outage_joint(
    cfg,
    i,
    gamma_th,
    mode=DEFAULT_SCALE_MODE,
    method=DEFAULT_JOINT_METHOD,
    quad=None,
):
    """Unconditional joint-detection outage.

    method="quadrature" integrates the conditional outage against the exact
    density of y = p |r_ii|^2 for the last QR stream,
        f(y) = y^{N-M} e^{-y/(p xi2_D,i)} / ((N-M)! (p xi2_D,i)^{N-M+1}),
    and works under either scale mode. method="printed" evaluates the
    closed-form series (exponential times a sum of terminating confluent
    hypergeometric terms); its constants hard-code the paper scaling, so it
    is only accepted with mode="paper".
    """
    _check_stream(cfg, i)
    g = _check_threshold(gamma_th)
    if method not in JOINT_METHODS:
        raise ConfigurationError(
            f"joint method must be one of {JOINT_METHODS}, got {method!r}"
        )
    if method == JOINT_PRINTED:
        if mode != SCALE_PAPER:
            raise ConfigurationError(
                "the printed joint closed form embeds the paper cascade "
                "scaling; use mode='paper' with it or method='quadrature'"
            )
        return _joint_printed(cfg, i, g)
    return _joint_quadrature(cfg, i, g, mode, quad)


def _joint_quadrature(cfg, i, gamma_th, mode, quad):
    spec = quad if quad is not None else QuadratureSpec()
    if gamma_th == 0.0:
        return 0.0
    p = cfg.tx_snr
    sigma2 = 0.5 * p * clt_psi2(cfg, mode)[i]
    beta = p * cfg.gain_direct[i]
    n = cfg.rx_antennas - cfg.streams
    log_norm = math.lgamma(n + 1) + (n + 1) * math.log(beta)
    b = math.sqrt(gamma_th / sigma2)

    def integrand(y):
        if y < 0.0:
            return 0.0
        if y == 0.0:
            log_pdf = -log_norm if n == 0 else -math.inf
        else:
            log_pdf = n * math.log(y) - y / beta - log_norm
        if log_pdf < -745.0:
            return 0.0
        cond = marcum_q1_complement(math.sqrt(y / sigma2), b)
        return cond * math.exp(log_pdf)

    # Finite integration window: past u_pdf the Gamma weight underflows,
    # past u_cond the conditional term is below 1e-300 by the Gaussian
    # tail bound 1 - Q1(a, b) <= exp(-(a-b)^2/2) for a > b.  At high
    # transmit SNR the weight's mode sits far beyond u_cond, and handing
    # a semi-infinite all-but-zero tail to the quadrature makes it
    # report spurious divergence, so both cutoffs matter.
    u_pdf = beta * (n + 1 + 40.0 * math.sqrt(n + 1.0) + 45.0)
    u_cond = (math.sqrt(gamma_th) + 42.0 * math.sqrt(sigma2)) ** 2
    upper = min(u_pdf, u_cond)
    mode_y = n * beta
    split = mode_y if 0.0 < mode_y < upper else 0.5 * upper
    total = 0.0
    for lo, hi in ((0.0, split), (split, upper)):
        val, _ = adaptive_quad(integrand, lo, hi, spec, "joint outage")
        total += val
    return min(max(total, 0.0), 1.0)


def _joint_printed(cfg, i, gamma_th):
    """Closed-form series, evaluated in its overflow-safe regrouping.

    With x = L gamma_th / (p xi2_H xi2_G,i), w = L xi2_D,i/(xi2_H xi2_G,i),
    v = 1/(1+w), z = x(1-v):
        P = 1 - e^{-x} - sum_{l=0}^{N-M} z v^l e^{-xv} [e^{-z} 1F1(l+1;2;z)]
    which is the literal printed expression with e^{-x} folded through the
    Kummer transformation so no factor overflows.
    """
    if gamma_th == 0.0:
        return 0.0
    p = cfg.tx_snr
    denom = cfg.gain_ris_rx * cfg.gain_tx_ris[i]
    x = cfg.ris_elements * gamma_th / (p * denom)
    w = cfg.ris_elements * cfg.gain_direct[i] / denom
    v = 1.0 / (1.0 + w)
    z = x * w * v
    exv = math.exp(-x * v) if x * v < 745.0 else 0.0
    total = 1.0 - (math.exp(-x) if x < 745.0 else 0.0)
    vpow = 1.0
    for l in range(cfg.rx_antennas - cfg.streams + 1):
        total -= z * vpow * exv * kummer_1f1_c2_scaled(l + 1, z)
        vpow *= v
    return min(max(total, 0.0), 1.0)
