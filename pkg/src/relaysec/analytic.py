"""Closed-form and quadrature evaluation of the partial-secrecy metrics.

The CDF of the SINR ratio ``Phi = (1 + Gamma_D) / (1 + Gamma_R)`` is
approximated by replacing the end-to-end SINR with its harmonic-mean
(min) upper bound; everything else (GSOP, AFE, AILR, their high-SNR
forms) is built on top of that CDF. Throughput and its closed-form
maximizer live here as well.

Functions prefixed ``raw_`` take plain floats or numpy arrays instead of
:class:`~relaysec.channel.SystemParams` so a whole particle swarm can be
evaluated in one call.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from .channel import SystemParams
from .numerics import QuadratureSpec, exp_times_erfc, integrate, lambert_w0

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
LN4 = math.log(4.0)
SQRT_PI = math.sqrt(math.pi)


class ClampWarning(RuntimeWarning):
    """The approximate CDF left [0, 1] and was clamped."""


_clamp_events = 0


def clamp_events() -> int:
    """Number of CDF evaluations clamped into [0, 1] so far in this process."""
    return _clamp_events


def _unpack(p: SystemParams):
    return p.gamma_p, p.eta1, p.eta2, p.eta3, p.omega_sr, p.omega_rd


# ---------------------------------------------------------------------------
# CDF of Phi
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PsiSet:
    psi1: float
    psi2: float
    psi3: float
    psi4: float
    psi5: float
    psi6: float
    psi7: float
    psi8: float


@dataclass(frozen=True)
class PhiTermBreakdown:
    t1: float
    t2: float
    t3: float
    t4: float

    @property
    def total(self):
        return self.t1 + self.t2 + self.t3 + self.t4


def raw_psi(tau, gp, e1, e2, e3, osr, ord_):
    """The eight auxiliary quantities of the closed-form CDF at ``tau``."""
    s12 = e2 + e3
    base = gp * e1 * e2 * e3
    psi1 = np.sqrt(
        s12 ** 2
        * (e2 ** 2 * (tau - 1) ** 2 + 2 * e2 * e3 * (2 * tau ** 2 - tau - 1) + e3 ** 2 * (1 - 2 * tau) ** 2)
        / (gp ** 2 * e1 ** 2 * e2 ** 2 * e3 ** 2)
    )
    psi2 = (e2 ** 2 * (2 * tau ** 2 - 2 * tau + 1)
            + e3 ** 2 * (5 * tau ** 2 - 4 * tau + 1)
            + 2 * e2 * e3 * (3 * tau ** 2 - tau + gp * e1 * tau * psi1 - 1))
    psi3 = 1.0 / (2 * ord_ * np.sqrt(base * tau * osr))
    psi4 = (tau - 1) * s12 / (gp * e1 * e2 * osr)
    d5 = 2 * base * osr
    rad5 = -2 * tau * (e2 ** 2 + e2 * e3 + 2 * e3 ** 2) + tau ** 2 * (e2 + 2 * e3) ** 2 + (e2 - e3) ** 2
    psi5 = s12 * np.sqrt(rad5) / d5 + s12 * (e2 * (tau - 1) + e3 * (2 * tau - 1)) / d5
    d6 = 4 * base * tau * ord_ ** 2 * osr
    psi6 = ((2 * e2 * ord_ * (e1 * tau * osr + e3 * (tau - 1) * ord_) + e2 ** 2 * ord_ ** 2) / d6
            + (e1 * tau * osr + e3 * (1 - tau) * ord_) ** 2 / d6)
    d7 = 2 * base * ord_ * osr
    psi7 = ((e1 * osr * (e2 - e3 * tau + e3) - e1 * (gp * e2 * e3 * ord_ * psi1 + osr * np.sqrt(psi2))) / d7
            + ord_ * (-e2 - e3) * (e2 * (tau - 1) + e3 * (2 * tau - 1)) / d7)
    psi8 = (e2 ** 2 * (tau - 1) + e3 ** 2 * (2 * tau - 1) + e2 * e3 * (3 * tau + gp * e1 * psi1 - 2)) / d5
    return psi1, psi2, psi3, psi4, psi5, psi6, psi7, psi8


def psi_set(phi: float, p: SystemParams) -> PsiSet:
    return PsiSet(*(float(v) for v in raw_psi(phi, *_unpack(p))))


def raw_cdf_phi_unclamped(phi, gp, e1, e2, e3, osr, ord_):
    """Single-expression closed-form CDF, before clamping."""
    psi1, psi2, psi3, psi4, psi5, psi6, psi7, psi8 = raw_psi(phi, gp, e1, e2, e3, osr, ord_)
    arg = psi3 * (e1 * phi * osr + ord_ * np.sqrt(psi2))
    head = SQRT_PI * e1 * phi * osr * psi3 * exp_times_erfc(psi6, arg)
    # 1 - e^{-psi5} and e^{-psi8} - e^{psi7} carry the cancellations at high SNR
    tail = (-np.expm1(-psi5)
            + (np.exp(-psi5) - np.exp(-psi4)) * np.exp(-e1 * osr * psi5 / (ord_ * (e2 + e3)))
            - np.exp(-psi8) * np.expm1(psi7 + psi8))
    return head + tail


def raw_cdf_phi(phi, gp, e1, e2, e3, osr, ord_):
    global _clamp_events
    value = raw_cdf_phi_unclamped(phi, gp, e1, e2, e3, osr, ord_)
    out = np.clip(value, 0.0, 1.0)
    n_clamped = int(np.count_nonzero(out != value))
    if n_clamped:
        _clamp_events += n_clamped
        warnings.warn(f"approximate CDF clamped into [0, 1] at {n_clamped} point(s)",
                      ClampWarning, stacklevel=3)
    return out


def cdf_phi(phi, p: SystemParams):
    """Closed-form approximation of ``Pr(Phi <= phi)`` for ``phi >= 1``."""
    arr = np.asarray(phi, dtype=float)
    if np.any(arr < 1.0) or np.any(np.isnan(arr)):
        raise ValueError("cdf_phi is defined for phi >= 1")
    out = raw_cdf_phi(arr, *_unpack(p))
    return out if np.ndim(out) else float(out)


def phi_term_breakdown(phi: float, p: SystemParams) -> PhiTermBreakdown:
    """The four region probabilities summing to the closed-form CDF.

    Written in terms of the per-node transmit SNRs and the region
    boundaries of the derivation, independently of :func:`raw_psi`
    (only the exponent of the erfc term is shared).
    """
    if phi < 1.0:
        raise ValueError("phi must be >= 1")
    gp, e1, e2, e3, osr, ord_ = _unpack(p)
    gs, gr, gd = e1 * gp, e2 * gp, e3 * gp
    s12 = e2 + e3
    mix = e1 * osr + ord_ * s12
    c = ord_ * s12 / mix
    e_lo = math.exp(-(phi - 1) * mix / (gp * e1 * e2 * ord_ * osr))

    # g_SR region boundaries
    lower = (phi - 1) * (gd + gr) / (gr * gs)
    vphi1 = (math.sqrt(-2 * phi * (2 * gd ** 2 + gd * gr + gr ** 2) + phi ** 2 * (2 * gd + gr) ** 2
                       + (gd - gr) ** 2)
             + gd * (2 * phi - 1) + gr * (phi - 1))
    upper = (gd + gr) * vphi1 / (2 * gd * gr * gs)
    k2 = 2 * gd ** 2 + 3 * gd * gr + gr ** 2
    vphi2 = ((phi * k2 - (gd + gr) ** 2) / (2 * gd * gr * gs)
             + 0.5 * math.sqrt((phi ** 2 * k2 ** 2
                                - 2 * phi * (2 * gd ** 2 + gd * gr + gr ** 2) * (gd + gr) ** 2
                                + (gd ** 2 - gr ** 2) ** 2) / (gd ** 2 * gr ** 2 * gs ** 2)))

    t1 = -c * (e_lo - 1.0)
    t2 = ((math.exp(-upper / osr) - math.exp(-lower / osr)) * math.exp(-e1 * upper / (ord_ * s12))
          + c * (e_lo - math.exp(-upper * mix / (ord_ * osr * s12))))
    t3 = c * (math.exp(-vphi2 * mix / (s12 * ord_ * osr)) - 1.0) - math.exp(-vphi2 / osr) + 1.0

    vphi4 = e2 ** 2 + e3 ** 2 * (phi - 1) ** 2 + 2 * e2 * e3 * (2 * gp * e1 * vphi2 * phi + phi - 1)
    root = math.sqrt(gp * e1 * e2 * e3 * phi * osr)
    psi6 = raw_psi(phi, gp, e1, e2, e3, osr, ord_)[5]
    t4 = (SQRT_PI * e1 * phi * osr / (2 * ord_ * root)
          * float(exp_times_erfc(psi6, (e1 * phi * osr + ord_ * math.sqrt(vphi4)) / (2 * ord_ * root)))
          + math.exp(-vphi2 / osr) * (1 - math.exp((e2 - e3 * phi + e3 - math.sqrt(vphi4))
                                                   / (2 * gp * e2 * e3 * ord_))))
    return PhiTermBreakdown(t1, t2, t3, t4)


# ---------------------------------------------------------------------------
# GSOP, AFE, AILR
# ---------------------------------------------------------------------------

def _check_theta(theta):
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta!r}")


def gsop(p: SystemParams, theta: float) -> float:
    """Generalized secrecy outage probability ``Pr(Delta < theta)``."""
    _check_theta(theta)
    return cdf_phi(2.0 ** (2.0 * p.rs * theta), p)


def _cdf_integral(p: SystemParams, spec: QuadratureSpec | None) -> float:
    args = _unpack(p)
    return integrate(lambda x: raw_cdf_phi(x, *args) / x, 1.0, 4.0 ** p.rs, spec, vectorized=True)


def afe(p: SystemParams, spec: QuadratureSpec | None = None) -> float:
    """Average fractional equivocation by one-fold quadrature of the CDF."""
    return 1.0 - _cdf_integral(p, spec) / (2.0 * p.rs * LN2)


def afe_literal(p: SystemParams, spec: QuadratureSpec | None = None) -> float:
    """AFE evaluated term by term from the integration-by-parts form.

    Kept for cross-checking :func:`afe`; the coefficient of ``F(2^{2 rs})``
    and the ``ln(1) F(1)`` term are both identically zero.
    """
    top = 4.0 ** p.rs
    scale = LN2 * 2.0 * p.rs
    return (1.0
            - (1.0 - math.log(top) / scale) * cdf_phi(top, p)
            - (math.log(1.0) * cdf_phi(1.0, p) + _cdf_integral(p, spec)) / scale)


def ailr(p: SystemParams, spec: QuadratureSpec | None = None) -> float:
    return (1.0 - afe(p, spec)) * p.rs


# ---------------------------------------------------------------------------
# High-SNR forms
# ---------------------------------------------------------------------------

def raw_gsop_asymptotic(tau, gp, e1, e2, e3, osr, ord_):
    lead = np.sqrt(math.pi * e1 * tau * osr / (4 * gp * e2 * e3 * ord_ ** 2))
    second = ((2 * (1 - e1) * e3 * (tau - 1) * ord_ + e1 * osr * (e1 + e3 * tau - 1))
              / (2 * gp * e1 * e2 * e3 * ord_ * osr))
    return lead + second


def gsop_asymptotic(p: SystemParams, theta: float) -> float:
    _check_theta(theta)
    return float(raw_gsop_asymptotic(2.0 ** (2.0 * p.rs * theta), *_unpack(p)))


def raw_afe_asymptotic(rs, gp, e1, e2, e3, osr, ord_):
    top = 4.0 ** rs
    ln_top = np.log(top)
    bracket = (-2 * SQRT_PI * np.sqrt(gp) * e1 ** 1.5 * np.sqrt(e2 * e3) * (np.sqrt(top) - 1) * osr ** 1.5
               + ln_top * (2 * e3 * ord_ * (gp * e1 * e2 * osr - e1 + 1) - (e1 - 1) * e1 * osr)
               + e3 * (top - 1) * (2 * (e1 - 1) * ord_ - e1 * osr))
    return bracket / (2 * gp * e1 * e2 * e3 * ord_ * osr * ln_top)


def afe_asymptotic(p: SystemParams) -> float:
    return float(raw_afe_asymptotic(p.rs, *_unpack(p)))


def ailr_asymptotic(p: SystemParams) -> float:
    return (1.0 - afe_asymptotic(p)) * p.rs


def diversity_order(p: SystemParams, theta: float, snr_db_lo: float, snr_db_hi: float,
                    n_points: int = 11,
                    metric: Callable[[SystemParams, float], float] = gsop) -> float:
    """Least-squares slope of ``-log10(metric)`` against ``log10(gamma_p)``."""
    if not snr_db_hi > snr_db_lo >= 40.0:
        raise ValueError("need snr_db_hi > snr_db_lo >= 40 dB")
    if n_points < 5:
        raise ValueError("need at least 5 points")
    dbs = np.linspace(snr_db_lo, snr_db_hi, n_points)
    values = np.array([metric(p.with_(gamma_p=10.0 ** (db / 10.0)), theta) for db in dbs])
    if np.any(values < 1e-300):
        raise OverflowError("metric underflowed during slope fit")
    slope, _ = np.polyfit(dbs / 10.0, -np.log10(values), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# Throughput
# ---------------------------------------------------------------------------

def raw_throughput(rs, rt, gp, e1, e2, e3, osr, ord_):
    return rs * np.exp(-(4.0 ** rt - 1.0) * (e1 * osr + ord_ * (e2 + e3)) / (gp * e1 * e2 * ord_ * osr))


def throughput(p: SystemParams) -> float:
    """Confidential throughput: success probability times secrecy rate."""
    return float(raw_throughput(p.rs, p.rt, *_unpack(p)))


def throughput_product_form(p: SystemParams) -> float:
    """Throughput as a product of the two exponential survival functions."""
    gs, gr, gd = p.eta1 * p.gamma_p, p.eta2 * p.gamma_p, p.eta3 * p.gamma_p
    tau2 = 4.0 ** p.rt - 1.0
    surv_sr = math.exp(-tau2 * (gr + gd) / (gr * gs) / p.omega_sr)
    surv_rd = math.exp(-tau2 / gr / p.omega_rd)
    return p.rs * surv_sr * surv_rd


class ThroughputOptimum(NamedTuple):
    t_max: float
    rs_opt: float
    eta2_opt: float
    numeric_fallback: bool


def optimal_eta2(eta3: float, omega_sr: float, omega_rd: float) -> float:
    """Relay power share maximizing throughput for a given jammer share."""
    diff = omega_rd - omega_sr
    if abs(diff) <= 1e-12 * max(omega_sr, omega_rd):
        return 0.5 * (1.0 - eta3)
    root = math.sqrt(omega_rd * (eta3 * diff + omega_sr) / diff ** 2)
    if omega_sr > omega_rd:
        root = -root
    return root - eta3 - omega_sr / diff


def _rate_scale(gp, eta2, eta3, omega_sr, omega_rd):
    # K in T(rs) = rs * exp(-(4^rs - 1) / K) at rt = rs, eta1 = 1 - eta2 - eta3
    eta1 = 1.0 - eta2 - eta3
    return gp * eta2 * omega_rd * omega_sr * eta1 / ((eta2 + eta3) * (omega_rd - omega_sr) + omega_sr)


def numeric_best_rate(k: float) -> float:
    """Maximize ``rs * exp(-(4**rs - 1) / k)`` over ``rs > 0`` numerically."""
    upper = math.log1p(k) / LN4 + 1.0
    res = optimize.minimize_scalar(lambda r: -r * math.exp(-math.expm1(r * LN4) / k),
                                   bounds=(1e-12, upper), method="bounded",
                                   options={"xatol": 1e-12 * max(1.0, upper)})
    return float(res.x)


def max_throughput(eta3: float, p: SystemParams) -> ThroughputOptimum:
    """Maximum throughput over ``(rs = rt, eta2)`` for a fixed jammer share.

    Uses the Lambert-W closed form for the rate and the three-case closed
    form for ``eta2``. If the closed-form rate disagrees with a numeric
    1-D maximizer by more than 1 %, or the Lambert W argument is out of
    domain, the numeric rate is returned and ``numeric_fallback`` is set.
    Only ``gamma_p`` and the mean channel gains of ``p`` are used.
    """
    if not 0.0 < eta3 < 1.0:
        raise ValueError("eta3 must lie in (0, 1)")
    gp, osr, ord_ = p.gamma_p, p.omega_sr, p.omega_rd
    eta2 = optimal_eta2(eta3, osr, ord_)
    if not 0.0 < eta2 < 1.0 - eta3:
        raise ValueError(f"closed-form eta2={eta2!r} infeasible for eta3={eta3!r}")
    k = _rate_scale(gp, eta2, eta3, osr, ord_)
    rs_num = numeric_best_rate(k)
    fallback = False
    try:
        rs = lambert_w0(k) / LN4
    except ValueError:
        rs, fallback = rs_num, True
    if not fallback and abs(rs - rs_num) > 0.01 * rs_num:
        log.warning("closed-form rate %.6g disagrees with numeric %.6g; using numeric", rs, rs_num)
        rs, fallback = rs_num, True
    eta1 = 1.0 - eta2 - eta3
    t = float(raw_throughput(rs, rs, gp, eta1, eta2, eta3, osr, ord_))
    return ThroughputOptimum(t, rs, eta2, fallback)


def throughput_envelope(p: SystemParams, eta3_grid=None) -> tuple[float, float]:
    """Largest ``max_throughput`` over a grid of jammer shares.

    Returns ``(t_max, eta3)``. The default grid spans ``[1e-3, 0.999]``.
    """
    if eta3_grid is None:
        eta3_grid = np.linspace(1e-3, 0.999, 999)
    best = max(((max_throughput(float(e3), p).t_max, float(e3)) for e3 in eta3_grid))
    return best
