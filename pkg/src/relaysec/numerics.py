"""Special functions, adaptive quadrature and seeded random streams."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

INV_E = math.exp(-1.0)
BRANCH_TOL = 1e-14


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


class QuadratureError(ArithmeticError):
    """Raised when adaptive quadrature runs out of subdivisions.

    The best available estimate and its error bound travel with the
    exception so callers can decide whether to accept them.
    """

    def __init__(self, estimate: float, error: float, subdivisions: int):
        super().__init__(
            f"quadrature did not converge after {subdivisions} subdivisions "
            f"(estimate={estimate!r}, error={error!r})"
        )
        self.estimate = estimate
        self.error = error
        self.subdivisions = subdivisions


# ---------------------------------------------------------------------------
# Lambert W, principal branch
# ---------------------------------------------------------------------------

def _branch_series(p: float) -> float:
    # expansion of W0 around -1/e in p = sqrt(2(e x + 1))
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (
        -43.0 / 540.0 + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))))


def lambert_w0(x: float, rtol: float = 1e-12, max_iter: int = 64) -> float:
    """Principal branch of the Lambert W function for real ``x >= -1/e``.

    Halley iteration started from a branch-point series for ``x`` near
    ``-1/e``, ``log1p`` for moderate ``x`` and the two-term asymptotic
    expansion for large ``x``.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("lambert_w0: x is NaN")
    if x < -INV_E - BRANCH_TOL:
        raise ValueError(f"lambert_w0: x={x!r} is below the branch point -1/e")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf

    q = 2.0 * (math.e * x + 1.0)
    if q <= 0.0:
        return -1.0
    if x < -0.25:
        w = _branch_series(math.sqrt(q))
        if q < 1e-10:
            return w
    elif x < 3.0:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        step = f / denom
        w -= step
        if abs(step) <= rtol * max(1.0, abs(w)):
            break
    return max(w, -1.0)


# ---------------------------------------------------------------------------
# erfcx
# ---------------------------------------------------------------------------

def erfc_scaled(x):
    """exp(x**2) * erfc(x), finite for large positive ``x``."""
    return special.erfcx(x)


def exp_times_erfc(log_scale, x):
    """Evaluate ``exp(log_scale) * erfc(x)`` without overflow.

    Uses ``erfc(x) = exp(-x**2) erfcx(x)`` so the two exponents are
    combined before exponentiation.
    """
    return np.exp(log_scale - np.square(x)) * special.erfcx(x)


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod (7, 15)
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full symmetric node set: negatives, zero, positives
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_GW = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[13, 11, 9]] = _WG[:3]


def _gk15(f, a, b, vectorized):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid + half * _NODES
    if vectorized:
        y = np.asarray(f(x), dtype=float)
    else:
        y = np.array([f(xi) for xi in x], dtype=float)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError(f"integrand not finite on [{a}, {b}]")
    k = half * float(_KW @ y)
    g = half * float(_GW @ y)
    return k, abs(k - g)


def integrate(f: Callable, a: float, b: float, spec: QuadratureSpec | None = None,
              vectorized: bool = False) -> float:
    """Adaptive bisection quadrature with a 7/15 Gauss-Kronrod panel rule.

    Parameters
    ----------
    f : callable
        Integrand. With ``vectorized=True`` it receives a 1-D array of nodes.
    a, b : float
        Integration limits, ``a <= b``.
    spec : QuadratureSpec, optional
        Tolerances and subdivision budget.

    Returns
    -------
    float
        Estimate whose summed panel error is at most
        ``max(abs_tol, rel_tol * |result|)``.

    Raises
    ------
    QuadratureError
        If the budget of subdivisions is exhausted first.
    """
    spec = spec or QuadratureSpec()
    if b < a:
        raise ValueError("integrate requires a <= b")
    if a == b:
        return 0.0

    k, e = _gk15(f, a, b, vectorized)
    # max-heap on panel error
    heap = [(-e, a, b, k)]
    total, err = k, e
    splits = 0
    while err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if splits >= spec.max_subdivisions:
            raise QuadratureError(total, err, splits)
        neg_e, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        k1, e1 = _gk15(f, lo, mid, vectorized)
        k2, e2 = _gk15(f, mid, hi, vectorized)
        heapq.heappush(heap, (-e1, lo, mid, k1))
        heapq.heappush(heap, (-e2, mid, hi, k2))
        splits += 1
        # resum instead of updating incrementally to avoid drift
        total = math.fsum(item[3] for item in heap)
        err = math.fsum(-item[0] for item in heap)
    return total


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

class RandomStream:
    """Seeded, splittable source of uniforms on (0, 1].

    Backed by the counter-based Philox generator. Substreams are keyed by
    an integer index (a sweep point, a Monte Carlo shard) so results do not
    depend on how work is scheduled.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def substream(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, self.key + (int(index),))

    def uniform(self, size=None):
        # random() is on [0, 1); flip it so ln(U) is always finite
        return 1.0 - self._gen.random(size)

    def exponential(self, mean: float, size=None):
        if not mean > 0:
            raise ValueError(f"exponential mean must be positive, got {mean!r}")
        return -mean * np.log(self.uniform(size))

    def random(self, size=None):
        """Uniforms on [0, 1), for the optimizer."""
        return self._gen.random(size)


def sample_exponential(mean: float, rng) -> float:
    """One inverse-CDF draw ``-mean * ln(U)`` with ``U`` from ``rng.uniform()``."""
    if not mean > 0:
        raise ValueError(f"exponential mean must be positive, got {mean!r}")
    return -mean * math.log(rng.uniform())
