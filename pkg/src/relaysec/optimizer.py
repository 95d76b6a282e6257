"""Particle swarm optimization of the power split and code rates.

Decision vector ``x = (eta1, eta2, eta3, rs, rt)``. The three problems
minimize GSOP, maximize AFE or minimize AILR subject to a throughput floor,
``rt >= rs`` and a unit power budget.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import analytic
from .channel import SystemParams
from .numerics import RandomStream

ETA_MIN = 1e-3
ETA_MAX = 1.0 - 2e-3
RATE_MIN = 1e-3
SUM_TOL = 1e-6


class InfeasibleProblemError(ValueError):
    """The throughput floor is not attainable."""


class ProblemKind(str, enum.Enum):
    OPA1 = "opa1"   # min GSOP
    OPA2 = "opa2"   # max AFE
    OPA3 = "opa3"   # min AILR


@dataclass(frozen=True)
class PsoConfig:
    n_particles: int = 2000
    n_iterations: int = 100
    c1: float = 0.3
    c2: float = 0.3
    w: float = 0.3
    w_decay: float = 0.7
    seed: int = 0
    penalty_value: float = 1e3

    def __post_init__(self):
        if self.n_particles < 1 or self.n_iterations < 1:
            raise ValueError("need at least one particle and one iteration")
        if self.c1 < 0 or self.c2 < 0 or self.w < 0:
            raise ValueError("c1, c2 and w must be nonnegative")
        if not 0.0 < self.w_decay <= 1.0:
            raise ValueError("w_decay must lie in (0, 1]")
        if not self.penalty_value > 0:
            raise ValueError("penalty_value must be positive")


@dataclass(frozen=True)
class OptProblem:
    kind: ProblemKind
    gamma_min: float
    gamma_p: float
    omega_sr: float
    omega_rd: float
    theta: float = 1.0
    objective_mode: str = "asymptotic"

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        if not self.gamma_min > 0:
            raise ValueError("gamma_min must be positive")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if self.objective_mode not in ("asymptotic", "full"):
            raise ValueError("objective_mode must be 'asymptotic' or 'full'")
        if not (self.gamma_p > 0 and self.omega_sr > 0 and self.omega_rd > 0):
            raise ValueError("gamma_p and mean channel gains must be positive")

    @classmethod
    def from_params(cls, kind, gamma_min: float, p: SystemParams, theta: float = 1.0,
                    objective_mode: str = "asymptotic") -> "OptProblem":
        return cls(kind, gamma_min, p.gamma_p, p.omega_sr, p.omega_rd, theta, objective_mode)

    def params(self, x) -> SystemParams:
        eta1, eta2, eta3, rs, rt = (float(v) for v in x)
        return SystemParams(gamma_p=self.gamma_p, eta1=eta1, eta2=eta2, eta3=eta3,
                            rs=rs, rt=rt, omega_sr=self.omega_sr, omega_rd=self.omega_rd)


@dataclass
class PsoResult:
    x: np.ndarray
    objective: float
    history: list[float]
    iterations_used: int


@dataclass
class OptResult:
    eta1: float
    eta2: float
    eta3: float
    rs: float
    rt: float
    objective: float
    feasible: bool
    iterations_used: int
    history: list[float] = field(default_factory=list)

    @property
    def x(self) -> np.ndarray:
        return np.array([self.eta1, self.eta2, self.eta3, self.rs, self.rt])


# ---------------------------------------------------------------------------
# Objective and penalty
# ---------------------------------------------------------------------------

def base_objective(x, prob: OptProblem):
    """Objective to minimize (GSOP, -AFE or AILR) for rows of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    e1, e2, e3, rs = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
    fixed = (prob.gamma_p, e1, e2, e3, prob.omega_sr, prob.omega_rd)
    if prob.objective_mode == "asymptotic":
        if prob.kind is ProblemKind.OPA1:
            return analytic.raw_gsop_asymptotic(2.0 ** (2.0 * rs * prob.theta), *fixed)
        afe = analytic.raw_afe_asymptotic(rs, *fixed)
        return -afe if prob.kind is ProblemKind.OPA2 else (1.0 - afe) * rs
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", analytic.ClampWarning)
        if prob.kind is ProblemKind.OPA1:
            return analytic.raw_cdf_phi(2.0 ** (2.0 * rs * prob.theta), *fixed)
        # the quadrature has no batched form; one integral per row
        afe = np.array([analytic.afe(_loose_params(prob, row)) for row in x])
    return -afe if prob.kind is ProblemKind.OPA2 else (1.0 - afe) * rs


def _loose_params(prob: OptProblem, row) -> SystemParams:
    # rows off the simplex are still valid inputs to the formulas; rescale for
    # SystemParams, which enforces the unit budget, by folding the sum into gamma_p
    s = row[0] + row[1] + row[2]
    return SystemParams(gamma_p=prob.gamma_p * s, eta1=row[0] / s, eta2=row[1] / s,
                        eta3=1.0 - (row[0] + row[1]) / s, rs=row[3], rt=max(row[3], row[4]),
                        omega_sr=prob.omega_sr, omega_rd=prob.omega_rd)


def constraint_violations(x, prob: OptProblem):
    """Boolean arrays (throughput, power budget, rate order) per row."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    e1, e2, e3, rs, rt = x.T
    t = analytic.raw_throughput(rs, rt, prob.gamma_p, e1, e2, e3, prob.omega_sr, prob.omega_rd)
    return t <= prob.gamma_min, np.abs(e1 + e2 + e3 - 1.0) > SUM_TOL, rt < rs


def penalized_objective(x, prob: OptProblem, penalty_value: float = 1e3):
    """Objective plus ``penalty_value ** k`` for ``k >= 1`` violated constraints.

    Feasible rows get no penalty at all. Accepts one decision vector or a
    2-D batch; returns a float or an array accordingly.
    """
    arr = np.asarray(x, dtype=float)
    base = base_objective(arr, prob)
    k = sum(v.astype(int) for v in constraint_violations(arr, prob))
    out = base + np.where(k > 0, float(penalty_value) ** k, 0.0)
    out = np.where(np.isfinite(out), out, np.inf)
    return float(out[0]) if arr.ndim == 1 else out


# ---------------------------------------------------------------------------
# Swarm
# ---------------------------------------------------------------------------

def pso_minimize(obj: Callable, bounds, cfg: PsoConfig, vectorized: bool = False) -> PsoResult:
    """Global-best PSO with inertia decay and box clamping.

    Parameters
    ----------
    obj : callable
        Objective. With ``vectorized=True`` it maps a ``(particles, dims)``
        array to a vector of values, otherwise one position at a time.
    bounds : sequence of (low, high)
        Box per coordinate. ``low == high`` pins that coordinate.
    cfg : PsoConfig

    Returns
    -------
    PsoResult
        Global best position and value, plus the best value after each
        iteration (nonincreasing).
    """
    lo, hi = (np.asarray(b, dtype=float) for b in zip(*bounds))
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))) or np.any(lo > hi):
        raise ValueError("bounds must be finite with low <= high")

    def evaluate(pos):
        if vectorized:
            vals = np.asarray(obj(pos), dtype=float)
        else:
            vals = np.array([obj(row) for row in pos], dtype=float)
        return np.where(np.isnan(vals), np.inf, vals)

    rng = RandomStream(cfg.seed)
    n, dim = cfg.n_particles, lo.size
    x = lo + (hi - lo) * rng.random((n, dim))
    v = np.zeros_like(x)
    f = evaluate(x)
    pbest_x, pbest_f = x.copy(), f.copy()
    j = int(np.argmin(f))
    gbest_x, gbest_f = x[j].copy(), math.inf
    if f[j] < gbest_f:
        gbest_f = float(f[j])

    w = cfg.w
    history = []
    for _ in range(cfg.n_iterations):
        r1 = rng.random((n, dim))
        r2 = rng.random((n, dim))
        v = w * v + cfg.c1 * r1 * (pbest_x - x) + cfg.c2 * r2 * (gbest_x - x)
        x = np.clip(x + v, lo, hi)
        f = evaluate(x)
        better = f < pbest_f
        pbest_x[better] = x[better]
        pbest_f[better] = f[better]
        j = int(np.argmin(f))
        if f[j] < gbest_f:
            gbest_f = float(f[j])
            gbest_x = x[j].copy()
        history.append(gbest_f)
        w *= cfg.w_decay
    return PsoResult(gbest_x, gbest_f, history, cfg.n_iterations)


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------

def rate_upper_bound(prob: OptProblem) -> float:
    """Twice the throughput-optimal secrecy rate at the envelope point."""
    p = SystemParams(gamma_p=prob.gamma_p, omega_sr=prob.omega_sr, omega_rd=prob.omega_rd)
    _, eta3 = analytic.throughput_envelope(p)
    return 2.0 * analytic.max_throughput(eta3, p).rs_opt


def check_feasible(prob: OptProblem) -> float:
    p = SystemParams(gamma_p=prob.gamma_p, omega_sr=prob.omega_sr, omega_rd=prob.omega_rd)
    t_env, _ = analytic.throughput_envelope(p)
    if prob.gamma_min >= t_env:
        raise InfeasibleProblemError(
            f"throughput floor {prob.gamma_min:g} is not below the maximum {t_env:.4g}")
    return t_env


def natural_objective(value: float, prob: OptProblem) -> float:
    """Report AFE with a positive sign; GSOP and AILR are unchanged."""
    return -value if prob.kind is ProblemKind.OPA2 else value


def _finish(x, prob: OptProblem, iterations: int, history) -> OptResult:
    x = np.array(x, dtype=float)
    x[:3] = x[:3] / x[:3].sum()
    viol_t, _, viol_r = constraint_violations(x, prob)
    feasible = not (bool(viol_t[0]) or bool(viol_r[0]))
    value = float(base_objective(x, prob)[0])
    return OptResult(*map(float, x), objective=natural_objective(value, prob), feasible=feasible,
                     iterations_used=iterations, history=list(history))


def solve(prob: OptProblem, cfg: PsoConfig | None = None, normalize_eta: bool = True,
          fixed_eta=None, fixed_rs: float | None = None) -> OptResult:
    """Run the swarm on one of the three allocation problems.

    With ``normalize_eta`` (default) every candidate's power shares are
    rescaled onto the unit simplex before evaluation, so the budget
    constraint always holds and the swarm searches only over shares and
    rates. ``fixed_eta`` pins the power split (e.g. equal allocation) and
    ``fixed_rs`` pins the secrecy rate.
    """
    cfg = cfg or PsoConfig()
    check_feasible(prob)
    r_max = rate_upper_bound(prob)
    bounds = [(ETA_MIN, ETA_MAX)] * 3 + [(RATE_MIN, r_max)] * 2
    if fixed_eta is not None:
        bounds[:3] = [(float(e), float(e)) for e in fixed_eta]
    if fixed_rs is not None:
        bounds[3] = (float(fixed_rs), float(fixed_rs))
        bounds[4] = (float(fixed_rs), max(r_max, float(fixed_rs)))

    def obj(pos):
        if normalize_eta:
            pos = pos.copy()
            pos[:, :3] /= pos[:, :3].sum(axis=1, keepdims=True)
        return penalized_objective(pos, prob, cfg.penalty_value)

    res = pso_minimize(obj, bounds, cfg, vectorized=True)
    return _finish(res.x, prob, res.iterations_used, res.history)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def _grid_points(res: int, box):
    """Decision vectors on a grid over (eta2, eta3, rs, rt) inside ``box``.

    Each axis holds ``res`` interior points ``lo + (hi - lo) k / (res + 1)``,
    so grids nest when ``res + 1`` is multiplied.
    """
    frac = np.arange(1, res + 1) / (res + 1)
    axes = [lo + (hi - lo) * frac for lo, hi in box]
    e2, e3, rs, rt = (a.ravel() for a in np.meshgrid(*axes, indexing="ij"))
    keep = (e2 + e3 < 1.0) & (rt >= rs)
    e2, e3, rs, rt = e2[keep], e3[keep], rs[keep], rt[keep]
    return np.column_stack([1.0 - e2 - e3, e2, e3, rs, rt])


def grid_search_oracle(prob: OptProblem, resolution: int, refine: int = 0,
                       objective: Callable | None = None, rate_max: float | None = None) -> OptResult:
    """Exhaustive search on a simplex-respecting grid, optionally zoomed.

    The coarse grid covers ``eta2, eta3`` in (0, 1) with ``eta1 = 1 -
    eta2 - eta3 > 0`` and ``rs <= rt`` in (0, rate_max). Each refinement
    round re-grids a box of two coarse steps around the incumbent. Only
    feasible points are eligible.

    Raises
    ------
    InfeasibleProblemError
        If no grid point satisfies the constraints.
    """
    if resolution < 5:
        raise ValueError("resolution must be >= 5")
    r_max = rate_max if rate_max is not None else rate_upper_bound(prob)

    def evaluate(pts):
        if objective is not None:
            vals = np.asarray(objective(pts), dtype=float)
            ok = np.ones(len(pts), dtype=bool)
        else:
            vals = base_objective(pts, prob)
            viol_t, _, viol_r = constraint_violations(pts, prob)
            ok = ~(viol_t | viol_r)
        return np.where(ok & np.isfinite(vals), vals, np.inf)

    box = [(0.0, 1.0), (0.0, 1.0), (0.0, r_max), (0.0, r_max)]
    best_x, best_f = None, math.inf
    for _ in range(refine + 1):
        pts = _grid_points(resolution, box)
        vals = evaluate(pts)
        j = int(np.argmin(vals))
        if vals[j] < best_f:
            best_f, best_x = float(vals[j]), pts[j]
        if best_x is None:
            raise InfeasibleProblemError("no feasible grid point")
        steps = [(hi - lo) / (resolution + 1) for lo, hi in box]
        centre = best_x[1:]
        limits = [(0.0, 1.0), (0.0, 1.0), (0.0, r_max), (0.0, r_max)]
        box = [(max(lim[0], c - 2 * s), min(lim[1], c + 2 * s))
               for c, s, lim in zip(centre, steps, limits)]

    if objective is not None:
        return OptResult(*map(float, best_x), objective=best_f, feasible=True,
                         iterations_used=refine + 1)
    return OptResult(*map(float, best_x), objective=natural_objective(best_f, prob),
                     feasible=True, iterations_used=refine + 1)
