import numpy as np
import pytest

from relaysec import montecarlo
from relaysec.channel import SystemParams
from relaysec.montecarlo import McConfig, draw_phi, empirical_cdf_phi, simulate
from relaysec.numerics import RandomStream

P30 = SystemParams.from_db(30.0, d=0.5)
THETAS = (0.1, 0.25, 0.5, 0.75, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(n_samples=10)
    with pytest.raises(ValueError):
        McConfig(theta_grid=(0.0,))
    with pytest.raises(ValueError):
        McConfig(theta_grid=())


def test_same_seed_identical_report():
    cfg = McConfig(200_000, seed=9, theta_grid=THETAS)
    assert simulate(P30, cfg) == simulate(P30, cfg)


def test_different_seed_differs():
    a = simulate(P30, McConfig(200_000, seed=1))
    b = simulate(P30, McConfig(200_000, seed=2))
    assert a.afe_hat != b.afe_hat


def test_shard_layout_does_not_change_draws(monkeypatch):
    cfg = McConfig(300_000, seed=4, theta_grid=THETAS)
    ref = simulate(P30, cfg)
    # prefix of a longer run uses the same first shard
    monkeypatch.setattr(montecarlo, "SHARD_SIZE", 100_000)
    again = simulate(P30, cfg)
    assert again.n_samples == ref.n_samples
    # shards are keyed by index, so smaller shards give a different but valid stream
    assert abs(again.afe_hat[0] - ref.afe_hat[0]) < 5 * ref.afe_hat[1]


def test_gsop_nested_in_theta():
    rep = simulate(P30, McConfig(500_000, seed=2, theta_grid=THETAS))
    vals = [rep.gsop_hat[t][0] for t in THETAS]
    assert vals == sorted(vals)


def test_afe_bounded_by_outage():
    rep = simulate(P30, McConfig(500_000, seed=2, theta_grid=(1.0,)))
    assert rep.afe_hat[0] >= 1.0 - rep.gsop_hat[1.0][0]
    assert rep.ailr_hat[0] == pytest.approx((1 - rep.afe_hat[0]) * P30.rs)


def test_empirical_cdf_equals_gsop_hat():
    cfg = McConfig(1_000_000, seed=6, theta_grid=THETAS)
    rep = simulate(P30, cfg)
    grid = [2.0 ** (2.0 * P30.rs * t) for t in THETAS]
    cdf = empirical_cdf_phi(P30, grid, cfg)
    for t, (_, est, half) in zip(THETAS, cdf):
        assert est == rep.gsop_hat[t][0]
        assert half == rep.gsop_hat[t][1]


def test_empirical_cdf_limits():
    cdf = empirical_cdf_phi(P30, [0.0, 1e300], McConfig(10_000, seed=1))
    assert cdf[0][1] == 0.0 and cdf[1][1] == 1.0
    with pytest.raises(ValueError):
        empirical_cdf_phi(P30, [2.0, 1.0], McConfig(10_000, seed=1))


def test_huge_rate_saturates():
    # Pr(Phi >= 2^100) is zero in practice, so every draw is an outage; the mean
    # equivocation log2(Phi)/(2 rs) is unclipped and scales like 1/rs
    cfg = McConfig(200_000, seed=1)
    r50 = simulate(P30.with_(rs=50.0), cfg)
    r100 = simulate(P30.with_(rs=100.0), cfg)
    assert r50.gsop_hat[1.0][0] == 1.0
    assert r100.afe_hat[0] == pytest.approx(r50.afe_hat[0] / 2, rel=1e-12)
    assert r50.afe_hat[0] < 0.1


def test_confidence_interval_halves():
    # fixed seeds: quadrupling n halves the half-width; doubling shrinks by sqrt(2)
    small = simulate(P30, McConfig(250_000, seed=3))
    large = simulate(P30, McConfig(1_000_000, seed=3))
    ratio = small.afe_hat[1] / large.afe_hat[1]
    assert ratio == pytest.approx(2.0, rel=0.2)
    ratio_g = small.gsop_hat[1.0][1] / large.gsop_hat[1.0][1]
    assert ratio_g == pytest.approx(2.0, rel=0.2)


def test_doubling_samples_shrinks_interval():
    a = simulate(P30, McConfig(500_000, seed=8))
    b = simulate(P30, McConfig(1_000_000, seed=8))
    assert a.afe_hat[1] / b.afe_hat[1] == pytest.approx(np.sqrt(2.0), rel=0.2)


def test_draw_phi_shapes_and_positivity():
    chunks = list(draw_phi(P30, 2_500_000, RandomStream(0)))
    assert [c[0].size for c in chunks] == [1_000_000, 1_000_000, 500_000]
    for phi, gamma_d in chunks:
        assert np.all(phi > 0) and np.all(gamma_d >= 0)


def test_throughput_estimate_30db():
    rep = simulate(P30, McConfig(1_000_000, seed=5))
    # analytic 0.998314
    assert rep.throughput_hat[0] == pytest.approx(0.998314, abs=3 * rep.throughput_hat[1] + 1e-4)
