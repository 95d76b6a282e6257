import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from relaysec import analytic
from relaysec.channel import SystemParams
from relaysec.montecarlo import McConfig, empirical_cdf_phi, simulate

P30 = SystemParams.from_db(30.0, d=0.5)


def epa(db, **kw):
    return SystemParams.from_db(db, **({"d": 0.5} | kw))


# CDF of Phi

def test_cdf_rejects_phi_below_one():
    with pytest.raises(ValueError):
        analytic.cdf_phi(0.5, P30)


def test_cdf_tail_limit():
    assert analytic.cdf_phi(1e6, P30) >= 0.999


def test_cdf_matches_monte_carlo_at_phi_4():
    # oracle: 1e7 exact-SINR draws, Pr(Phi <= 4) = 0.026067
    ((_, est, _),) = empirical_cdf_phi(P30, [4.0], McConfig(10 ** 7, seed=1))
    assert abs(analytic.cdf_phi(4.0, P30) - est) <= 0.01


# Independent 1-D integral of the harmonic-mean-bound model (g_SR outer
# quadrature, exact root in g_RD), evaluated with scipy and frozen here.
MIN_BOUND_ORACLE = [
    (30, (1 / 3, 1 / 3, 1 / 3), 4.0, 0.5, 0.025222996230954066),
    (40, (0.1, 0.6, 0.3), 3.0, 0.5, 0.0030428692614133217),
    (20, (0.5, 0.3, 0.2), 1.5, 0.3, 0.5253647582085753),
    (25, (0.2, 0.5, 0.3), 8.0, 0.7, 0.0447893326066247),
    (15, (1 / 3, 1 / 3, 1 / 3), 2.0, 0.5, 0.10415822490826906),
    (10, (1 / 3, 1 / 3, 1 / 3), 1.2, 0.5, 0.12586409288042155),
]


@pytest.mark.parametrize("db,eta,phi,d,oracle", MIN_BOUND_ORACLE)
def test_cdf_tracks_bound_model(db, eta, phi, d, oracle):
    p = SystemParams.from_db(db, eta1=eta[0], eta2=eta[1], eta3=eta[2], d=d)
    got = analytic.cdf_phi(phi, p)
    tol = 1e-2 * oracle if db >= 25 else 2e-3
    assert abs(got - oracle) <= tol


def test_cdf_monotone_on_grid():
    for db in (10, 20, 30, 45):
        grid = np.linspace(1.0, 64.0, 2001)
        vals = analytic.cdf_phi(grid, epa(db))
        assert np.all(np.diff(vals) >= -1e-9)


def test_clamp_warning_and_counter():
    # 8 dB, almost no jamming power, weak R-D link: the approximation overshoots 1
    args = (6.355005608061043, 0.4613211692675845, 0.5386572248816978, 2.1605850717761424e-05,
            22.460130826630007, 0.033478814617025274)
    phi = 1.000039779304411
    assert analytic.raw_cdf_phi_unclamped(phi, *args) > 1.0
    before = analytic.clamp_events()
    with pytest.warns(analytic.ClampWarning):
        val = analytic.raw_cdf_phi(phi, *args)
    assert val == 1.0
    assert analytic.clamp_events() == before + 1


@settings(max_examples=300, deadline=None)
@given(st.floats(15, 60), st.floats(0.05, 0.9), st.floats(0.05, 0.9), st.floats(0.1, 0.9),
       st.floats(1.0, 500.0))
def test_breakdown_sums_to_closed_form(db, a, b, d, phi):
    e1 = a * (1 - b)
    e2 = (1 - a) * (1 - b)
    p = SystemParams.from_db(db, eta1=e1, eta2=e2, eta3=1 - e1 - e2, d=d)
    total = analytic.phi_term_breakdown(phi, p).total
    single = float(analytic.raw_cdf_phi_unclamped(phi, *analytic._unpack(p)))
    assert abs(total - single) <= 1e-9


# GSOP

def test_gsop_theta_validation():
    for bad in (0.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            analytic.gsop(P30, bad)


def test_gsop_nondecreasing_in_theta():
    for p in (P30, epa(20.0, rs=2.0), epa(40.0, d=0.3)):
        vals = [analytic.gsop(p, th) for th in np.linspace(0.01, 1.0, 100)]
        assert np.all(np.diff(vals) >= -1e-9)


def test_gsop_vs_monte_carlo_30db():
    # oracle: 1e7 exact-SINR draws, seed 1
    mc_frozen = {0.1: 0.013118, 0.5: 0.017796, 1.0: 0.026067}
    for th, est in mc_frozen.items():
        assert abs(analytic.gsop(P30, th) - est) <= 0.02


def test_gsop_asymptote_ratio_70db():
    p = epa(70.0)
    assert 0.9 <= analytic.gsop_asymptotic(p, 1.0) / analytic.gsop(p, 1.0) <= 1.1


# AFE and AILR

def test_afe_literal_matches_simplified():
    for p in (P30, epa(15.0, rs=2.5), epa(50.0, rs=0.3, d=0.2)):
        assert analytic.afe_literal(p) == pytest.approx(analytic.afe(p), abs=1e-12)


def test_afe_small_rate_high_snr():
    assert analytic.afe(epa(60.0, rs=0.1)) >= 0.99


def test_afe_ailr_vs_monte_carlo_30db():
    # oracle: 1e7 exact-SINR draws, seed 1, mean equivocation 0.981773
    mean_delta = 0.981773
    assert abs(analytic.afe(P30) - mean_delta) <= 0.02
    assert abs(analytic.ailr(P30) - (1 - mean_delta)) <= 0.02


def test_ailr_zero_when_equivocation_full(monkeypatch):
    monkeypatch.setattr(analytic, "afe", lambda p, spec=None: 1.0)
    assert analytic.ailr(P30) == 0.0


def test_afe_asymptote_60db():
    p = epa(60.0)
    assert abs(analytic.afe_asymptotic(p) - analytic.afe(p)) <= 0.02
    assert abs(analytic.ailr_asymptotic(p) - (1 - analytic.afe(p)) * p.rs) <= 0.02 * p.rs


def test_afe_in_unit_interval():
    for db in (5, 15, 30, 50):
        for rs in (0.2, 1.0, 3.0):
            assert 0.0 <= analytic.afe(epa(db, rs=rs)) <= 1.0


# diversity order

def test_diversity_of_asymptote_is_half():
    slope = analytic.diversity_order(P30, 1.0, 50.0, 70.0, metric=analytic.gsop_asymptotic)
    assert slope == pytest.approx(0.5, abs=1e-3)


def test_diversity_calibration():
    slope = analytic.diversity_order(P30, 1.0, 40.0, 80.0, metric=lambda p, th: 7.0 / p.gamma_p)
    assert slope == pytest.approx(1.0, abs=1e-6)


def test_diversity_closed_form():
    assert analytic.diversity_order(P30, 1.0, 50.0, 70.0) == pytest.approx(0.5, abs=0.07)


def test_diversity_range_checks():
    with pytest.raises(ValueError):
        analytic.diversity_order(P30, 1.0, 30.0, 70.0)
    with pytest.raises(OverflowError):
        analytic.diversity_order(P30, 1.0, 50.0, 70.0, metric=lambda p, th: 0.0)


# throughput

def test_throughput_example():
    # exponent -(4 - 1)(16/3 + 16 * 2/3) / (1000/9 * 256) = -48 / 28444.4...
    exponent = -mpmath.mpf(3) * (mpmath.mpf(16) / 3 + mpmath.mpf(32) / 3) / (mpmath.mpf(1000) / 9 * 256)
    assert float(exponent) == pytest.approx(-0.0016875, rel=1e-12)
    oracle = float(mpmath.exp(exponent))
    assert analytic.throughput(P30) == pytest.approx(oracle, rel=1e-14)
    assert analytic.throughput(P30) == pytest.approx(0.998313, abs=1e-6)


def test_throughput_high_snr_limit():
    assert analytic.throughput(epa(120.0, rs=2.0)) == pytest.approx(2.0, rel=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 60), st.floats(0.05, 0.9), st.floats(0.05, 0.9), st.floats(0.05, 0.95),
       st.floats(0.05, 4.0), st.floats(0.0, 2.0))
def test_throughput_product_form(db, a, b, d, rs, extra):
    e1 = a * (1 - b)
    e2 = (1 - a) * (1 - b)
    p = SystemParams.from_db(db, eta1=e1, eta2=e2, eta3=1 - e1 - e2, d=d, rs=rs, rt=rs + extra)
    assert analytic.throughput(p) == pytest.approx(analytic.throughput_product_form(p),
                                                   rel=1e-12, abs=1e-300)


def test_optimal_eta2_symmetric():
    assert analytic.optimal_eta2(0.2, 16.0, 16.0) == pytest.approx(0.4)


def _numeric_max(eta3, p):
    def neg(x):
        rs, eta2 = x
        e1 = 1 - eta2 - eta3
        if rs <= 0 or eta2 <= 0 or e1 <= 0:
            return 1e9
        return -float(analytic.raw_throughput(rs, rs, p.gamma_p, e1, eta2, eta3, p.omega_sr,
                                              p.omega_rd))
    best = None
    for rs0 in (0.5, 2.0, 4.0):
        for frac in (0.2, 0.5, 0.8):
            r = optimize.minimize(neg, [rs0, frac * (1 - eta3)], method="Nelder-Mead",
                                  options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            if best is None or r.fun < best.fun:
                best = r
    return -best.fun, best.x


@pytest.mark.parametrize("d", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("eta3", [0.2, 0.5, 0.8])
def test_max_throughput_vs_numeric(eta3, d):
    p = SystemParams.from_db(30.0, d=d)
    opt = analytic.max_throughput(eta3, p)
    t_num, (rs_num, eta2_num) = _numeric_max(eta3, p)
    assert not opt.numeric_fallback
    assert abs(opt.t_max - t_num) <= 0.01 * t_num
    assert opt.rs_opt == pytest.approx(rs_num, rel=1e-3)
    assert opt.eta2_opt == pytest.approx(eta2_num, rel=1e-3)


def test_best_rate_stationary():
    # d/drs [rs exp(-(4^rs - 1)/k)] = 0 at the Lambert-W rate
    k = 321.0
    rs = analytic.lambert_w0(k) / math.log(4.0)
    assert 1.0 - rs * math.log(4.0) * 4.0 ** rs / k == pytest.approx(0.0, abs=1e-12)
    assert analytic.numeric_best_rate(k) == pytest.approx(rs, rel=1e-8)


def test_max_throughput_validation():
    with pytest.raises(ValueError):
        analytic.max_throughput(1.0, P30)


def test_envelope_mid_relay():
    t_max, eta3 = analytic.throughput_envelope(P30)
    assert t_max == pytest.approx(3.8, abs=0.2)
    assert eta3 == pytest.approx(1e-3)


def test_gsop_equals_empirical_cdf_chain():
    # analytic gsop is cdf at 2^{2 rs theta} by construction
    for th in (0.1, 0.5, 1.0):
        assert analytic.gsop(P30, th) == analytic.cdf_phi(2.0 ** (2.0 * th), P30)


def test_monte_carlo_agrees_25_to_40_db():
    for db in (25.0, 40.0):
        p = epa(db)
        rep = simulate(p, McConfig(10 ** 6, seed=3, theta_grid=(0.5, 1.0)))
        for th in (0.5, 1.0):
            assert abs(analytic.gsop(p, th) - rep.gsop_hat[th][0]) <= 0.02
        assert abs(analytic.afe(p) - rep.afe_hat[0]) <= 0.02


def test_psi_set_fields():
    ps = analytic.psi_set(4.0, P30)
    assert ps.psi8 == pytest.approx(ps.psi5, rel=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        analytic.cdf_phi(4.0, P30)
