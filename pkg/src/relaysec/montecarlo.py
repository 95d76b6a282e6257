"""Monte Carlo estimates of the secrecy metrics from exact per-draw SINRs.

Samples are generated in fixed-size shards; each shard draws from its own
substream of the run seed, so the estimate only depends on ``(params,
n_samples, seed)`` and never on how shards are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import SystemParams, equivocation_from_phi, sinrs_from_snrs, transmit_snrs
from .numerics import RandomStream

Z95 = 1.96
SHARD_SIZE = 1_000_000


@dataclass(frozen=True)
class McConfig:
    n_samples: int = 1_000_000
    seed: int = 0
    theta_grid: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        if self.n_samples < 1000:
            raise ValueError("n_samples must be >= 1000")
        if not self.theta_grid:
            raise ValueError("theta_grid must not be empty")
        if any(not 0.0 < t <= 1.0 for t in self.theta_grid):
            raise ValueError("every theta must lie in (0, 1]")


@dataclass(frozen=True)
class McReport:
    """Point estimates with 95 % normal-approximation half-widths."""

    gsop_hat: dict[float, tuple[float, float]]
    afe_hat: tuple[float, float]
    ailr_hat: tuple[float, float]
    throughput_hat: tuple[float, float]
    n_samples: int
    seed: int
    extra: dict = field(default_factory=dict, compare=False)


def _shards(n: int):
    full, rest = divmod(n, SHARD_SIZE)
    sizes = [SHARD_SIZE] * full
    if rest:
        sizes.append(rest)
    return sizes


def draw_phi(p: SystemParams, n: int, stream: RandomStream):
    """Yield ``(Phi, Gamma_D)`` arrays shard by shard."""
    gs, gr, gd = transmit_snrs(p)
    for i, size in enumerate(_shards(n)):
        sub = stream.substream(i)
        g_sr = sub.exponential(p.omega_sr, size)
        g_rd = sub.exponential(p.omega_rd, size)
        gamma_r, gamma_d = sinrs_from_snrs(gs, gr, gd, g_sr, g_rd)
        yield (1.0 + gamma_d) / (1.0 + gamma_r), gamma_d


def _prop(count: int, n: int) -> tuple[float, float]:
    q = count / n
    return q, Z95 * math.sqrt(q * (1.0 - q) / n)


def simulate(p: SystemParams, cfg: McConfig) -> McReport:
    thetas = cfg.theta_grid
    outage = np.zeros(len(thetas), dtype=np.int64)
    sum_d = 0.0
    sum_d2 = 0.0
    success = 0
    # legitimate decoding succeeds when 1/2 log2(1 + Gamma_D) >= rt
    gamma_needed = 4.0 ** p.rt - 1.0
    for phi, gamma_d in draw_phi(p, cfg.n_samples, RandomStream(cfg.seed)):
        delta = equivocation_from_phi(phi, p.rs)
        for j, th in enumerate(thetas):
            outage[j] += int(np.count_nonzero(delta < th))
        sum_d += float(np.sum(delta))
        sum_d2 += float(np.dot(delta, delta))
        success += int(np.count_nonzero(gamma_d >= gamma_needed))

    n = cfg.n_samples
    mean = sum_d / n
    var = max(sum_d2 / n - mean * mean, 0.0) * n / (n - 1)
    half = Z95 * math.sqrt(var / n)
    thr, thr_half = _prop(success, n)
    return McReport(
        gsop_hat={th: _prop(int(c), n) for th, c in zip(thetas, outage)},
        afe_hat=(mean, half),
        ailr_hat=((1.0 - mean) * p.rs, half * p.rs),
        throughput_hat=(thr * p.rs, thr_half * p.rs),
        n_samples=n,
        seed=cfg.seed,
    )


def empirical_cdf_phi(p: SystemParams, phi_grid, cfg: McConfig):
    """Frequency estimates of ``Pr(Phi <= phi)`` on a shared sample set.

    Uses the same draws as :func:`simulate` for the same config.
    """
    grid = np.asarray(phi_grid, dtype=float)
    if np.any(np.diff(grid) < 0) or np.any(grid < 0):
        raise ValueError("phi_grid must be sorted and nonnegative")
    counts = np.zeros(grid.size, dtype=np.int64)
    for phi, _ in draw_phi(p, cfg.n_samples, RandomStream(cfg.seed)):
        phi.sort()
        counts += np.searchsorted(phi, grid, side="right")
    n = cfg.n_samples
    return [(float(x), *_prop(int(c), n)) for x, c in zip(grid, counts)]
