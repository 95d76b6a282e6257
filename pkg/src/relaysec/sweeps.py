"""Single-point evaluation, parameter sweeps and figure presets.

Every sweep writes one CSV. Columns always appear in the order of
:data:`ALL_COLUMNS`; a column is dropped only when its metric was not
requested or Monte Carlo was disabled.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .channel import SystemParams
from .montecarlo import McConfig, McReport, simulate
from .optimizer import (InfeasibleProblemError, OptProblem, ProblemKind, PsoConfig,
                        solve)

METRICS = ("gsop", "afe", "ailr", "throughput")
AXES = ("gamma_p_db", "rs", "d", "gamma_min")
ALLOCATIONS = ("epa", "opa1", "opa2", "opa3", "fixed")
EPA = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

BASE_COLUMNS = ["series", "allocation", "axis", "value", "theta", "gamma_p_db", "omega_sr",
                "omega_rd", "eta1", "eta2", "eta3", "rs", "rt", "gamma_min", "feasible"]
ANALYTIC_COLUMNS = {
    "gsop": ["gsop", "gsop_asym"],
    "afe": ["afe", "afe_asym"],
    "ailr": ["ailr", "ailr_asym"],
    "throughput": ["throughput"],
}
MC_COLUMNS = {m: [f"{m}_mc", f"{m}_mc_ci"] for m in METRICS}
ALL_COLUMNS = (BASE_COLUMNS + [c for m in METRICS for c in ANALYTIC_COLUMNS[m]]
               + [c for m in METRICS for c in MC_COLUMNS[m]])


def columns_for(metrics, with_mc: bool) -> list[str]:
    wanted = set(metrics)
    cols = BASE_COLUMNS + [c for m in METRICS if m in wanted for c in ANALYTIC_COLUMNS[m]]
    if with_mc:
        cols += [c for m in METRICS if m in wanted for c in MC_COLUMNS[m]]
    return cols


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


# ---------------------------------------------------------------------------
# Single point
# ---------------------------------------------------------------------------

@dataclass
class SecrecyReport:
    params: SystemParams
    theta_list: tuple[float, ...]
    metrics: tuple[str, ...] = METRICS
    gsop: dict = field(default_factory=dict)
    gsop_asym: dict = field(default_factory=dict)
    afe: float | None = None
    afe_asym: float | None = None
    ailr: float | None = None
    ailr_asym: float | None = None
    throughput: float | None = None
    mc: McReport | None = None

    def rows(self) -> list[dict]:
        """One dict per theta with the metric columns filled in."""
        out = []
        for th in self.theta_list:
            row = {"theta": th, "gsop": self.gsop.get(th), "gsop_asym": self.gsop_asym.get(th),
                   "afe": self.afe, "afe_asym": self.afe_asym, "ailr": self.ailr,
                   "ailr_asym": self.ailr_asym, "throughput": self.throughput}
            if self.mc is not None:
                row["gsop_mc"], row["gsop_mc_ci"] = self.mc.gsop_hat.get(th, (None, None))
                row["afe_mc"], row["afe_mc_ci"] = self.mc.afe_hat
                row["ailr_mc"], row["ailr_mc_ci"] = self.mc.ailr_hat
                row["throughput_mc"], row["throughput_mc_ci"] = self.mc.throughput_hat
            out.append(row)
        return out


def _check_thetas(theta_list):
    thetas = tuple(float(t) for t in theta_list)
    if not thetas:
        raise ValueError("theta list must not be empty")
    for t in thetas:
        if not 0.0 < t <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {t!r}")
    return thetas


def run_eval(params: SystemParams, theta_list=(1.0,), mc: McConfig | None = None,
             metrics=METRICS) -> SecrecyReport:
    """Analytic, high-SNR and optionally Monte Carlo metrics at one point."""
    thetas = _check_thetas(theta_list)
    rep = SecrecyReport(params, thetas, tuple(metrics))
    if "gsop" in metrics:
        for th in thetas:
            rep.gsop[th] = analytic.gsop(params, th)
            rep.gsop_asym[th] = analytic.gsop_asymptotic(params, th)
    if "afe" in metrics or "ailr" in metrics:
        rep.afe = analytic.afe(params)
        rep.afe_asym = analytic.afe_asymptotic(params)
        rep.ailr = (1.0 - rep.afe) * params.rs
        rep.ailr_asym = (1.0 - rep.afe_asym) * params.rs
    if "throughput" in metrics:
        rep.throughput = analytic.throughput(params)
    if mc is not None:
        rep.mc = simulate(params, McConfig(mc.n_samples, mc.seed, thetas))
    return rep


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """One curve family: an axis, its values and how each point is allocated.

    ``allocation`` is ``epa`` (equal shares), ``fixed`` (the shares of
    ``base``), or ``opa1..opa3`` (shares and rates from the swarm). Along
    the ``gamma_min`` axis, ``epa`` and ``fixed`` still optimize the rates,
    using ``problem`` as the objective. ``pin_rs`` keeps the secrecy rate
    at ``base.rs`` while optimizing; it is implied on the ``rs`` axis.
    """

    axis: str
    values: tuple[float, ...]
    base: SystemParams
    metrics: tuple[str, ...] = METRICS
    theta_list: tuple[float, ...] = (1.0,)
    allocation: str = "epa"
    gamma_min: float | None = None
    problem: str = "opa1"
    pin_rs: bool = False
    mc: McConfig | None = None
    pso: PsoConfig = field(default_factory=PsoConfig)
    series: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "theta_list", _check_thetas(self.theta_list))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ValueError("values must be nonempty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("values must be strictly increasing")
        if not self.metrics or any(m not in METRICS for m in self.metrics):
            raise ValueError(f"metrics must be a nonempty subset of {METRICS}")
        if self.allocation not in ALLOCATIONS:
            raise ValueError(f"allocation must be one of {ALLOCATIONS}")
        ProblemKind(self.problem)
        if self.optimizing and self.axis != "gamma_min" and self.gamma_min is None:
            raise ValueError("optimizing allocations need gamma_min")

    @property
    def optimizing(self) -> bool:
        return self.allocation.startswith("opa") or self.axis == "gamma_min"


def _point_params(spec: SweepSpec, value: float) -> tuple[SystemParams, float | None]:
    base = spec.base
    if spec.allocation == "epa":
        base = base.with_(eta1=EPA[0], eta2=EPA[1], eta3=EPA[2])
    gamma_min = spec.gamma_min
    if spec.axis == "gamma_p_db":
        base = base.with_(gamma_p=10.0 ** (value / 10.0))
    elif spec.axis == "rs":
        rt = value if base.rt == base.rs else max(base.rt, value)
        base = base.with_(rs=value, rt=rt)
    elif spec.axis == "d":
        base = base.with_(d=value)
    else:
        gamma_min = value
    return base, gamma_min


def _opt_row(spec: SweepSpec, params: SystemParams, gamma_min: float, theta: float):
    kind = spec.allocation if spec.allocation.startswith("opa") else spec.problem
    prob = OptProblem.from_params(kind, gamma_min, params, theta=theta)
    fixed_eta = None if spec.allocation.startswith("opa") else params.etas
    pin = spec.pin_rs or spec.axis == "rs"
    try:
        res = solve(prob, spec.pso, fixed_eta=fixed_eta, fixed_rs=params.rs if pin else None)
    except InfeasibleProblemError:
        return None
    if not res.feasible:
        return None
    return params.with_(eta1=res.eta1, eta2=res.eta2, eta3=1.0 - res.eta1 - res.eta2,
                        rs=res.rs, rt=max(res.rt, res.rs))


def _base_row(spec: SweepSpec, value: float, params: SystemParams, gamma_min, feasible: bool):
    return {"series": spec.series, "allocation": spec.allocation, "axis": spec.axis,
            "value": value, "gamma_p_db": params.gamma_p_db, "omega_sr": params.omega_sr,
            "omega_rd": params.omega_rd, "eta1": params.eta1, "eta2": params.eta2,
            "eta3": params.eta3, "rs": params.rs, "rt": params.rt, "gamma_min": gamma_min,
            "feasible": feasible}


def evaluate_point(spec: SweepSpec, value: float) -> list[dict]:
    """All CSV rows (one per theta) contributed by one axis value."""
    params, gamma_min = _point_params(spec, value)
    if not spec.optimizing:
        rep = run_eval(params, spec.theta_list, spec.mc, spec.metrics)
        return [{**_base_row(spec, value, params, None, True), **r} for r in rep.rows()]

    # only GSOP problems depend on theta
    per_theta = (spec.allocation == "opa1"
                 or (not spec.allocation.startswith("opa") and spec.problem == "opa1"))
    rows = []
    shared = None
    for th in spec.theta_list:
        if per_theta or shared is None:
            shared = _opt_row(spec, params, gamma_min, th)
        if shared is None:
            rows.append({**_base_row(spec, value, params, gamma_min, False), "theta": th})
            continue
        rep = run_eval(shared, (th,), spec.mc, spec.metrics)
        rows += [{**_base_row(spec, value, shared, gamma_min, True), **r} for r in rep.rows()]
    return rows


def _task(args):
    spec, value = args
    return evaluate_point(spec, value)


def sweep_rows(specs, workers: int = 1) -> list[dict]:
    """Rows of several sweeps, in spec order then axis order."""
    tasks = [(s, v) for s in specs for v in s.values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = [_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def write_csv(rows, columns, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])


def run_sweep(specs, out_path=None, workers: int = 1) -> str:
    """Run one or more sweeps and write a single CSV.

    Returns the CSV text; also writes it to ``out_path`` when given.
    """
    if isinstance(specs, SweepSpec):
        specs = [specs]
    metrics = {m for s in specs for m in s.metrics}
    cols = columns_for(metrics, any(s.mc is not None for s in specs))
    buf = io.StringIO()
    write_csv(sweep_rows(specs, workers), cols, buf)
    text = buf.getvalue()
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# Figure presets
# ---------------------------------------------------------------------------

PRESET_GAMMA_MIN = 0.1


def _grid(start, stop, step):
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 10) for i in range(n + 1))


def _opa_family(axis, values, base, metrics, gsop_thetas, mc, pso, gamma_min, pin_rs):
    """EPA plus the three optimized allocations on a shared axis."""
    common = dict(axis=axis, values=values, base=base, metrics=metrics, mc=mc, pso=pso,
                  gamma_min=gamma_min, pin_rs=pin_rs)
    specs = [SweepSpec(allocation="epa", theta_list=gsop_thetas, series="EPA", **common)]
    for th in gsop_thetas if "gsop" in metrics else (1.0, 0.1):
        specs.append(SweepSpec(allocation="opa1", theta_list=(th,), series=f"OPA1 theta={th:g}",
                               **common))
    specs.append(SweepSpec(allocation="opa2", theta_list=gsop_thetas, series="OPA2", **common))
    specs.append(SweepSpec(allocation="opa3", theta_list=gsop_thetas, series="OPA3", **common))
    return specs


def preset(name: str, mc: McConfig | None = McConfig(), pso: PsoConfig | None = None) -> list[SweepSpec]:
    """Curve families behind each figure at 30 dB (unless swept), d = 0.5, alpha = 4.

    Axis ranges are read off the plotted axes and are approximate.
    """
    pso = pso or PsoConfig()
    mid = SystemParams.from_db(30.0, d=0.5)
    secrecy = ("afe", "ailr")
    if name == "fig2":
        return [SweepSpec("gamma_p_db", _grid(10, 50, 2), mid, ("gsop",), (0.1, 0.5, 1.0),
                          mc=mc, series="EPA")]
    if name == "fig3":
        return _opa_family("rs", _grid(0.25, 4.0, 0.25), mid, ("gsop",), (1.0, 0.5, 0.1), mc, pso,
                           PRESET_GAMMA_MIN, True)
    if name == "fig4":
        return _opa_family("rs", _grid(0.25, 4.0, 0.25), mid, secrecy, (1.0,), mc, pso,
                           PRESET_GAMMA_MIN, True)
    if name == "fig5":
        return _opa_family("d", _grid(0.1, 0.9, 0.05), mid, ("gsop",), (1.0, 0.5, 0.1), mc, pso,
                           PRESET_GAMMA_MIN, True)
    if name == "fig6":
        return _opa_family("d", _grid(0.1, 0.9, 0.05), mid, secrecy, (1.0,), mc, pso,
                           PRESET_GAMMA_MIN, True)
    if name == "fig7":
        values = _grid(0.25, 3.75, 0.25)
        return [
            SweepSpec("gamma_min", values, mid, ("gsop",), (0.1, 1.0), "epa", problem="opa1",
                      mc=mc, pso=pso, series="EPA"),
            SweepSpec("gamma_min", values, mid, ("gsop",), (0.1, 1.0), "opa1", mc=mc, pso=pso,
                      series="OPA1"),
        ]
    if name == "fig8":
        values = _grid(0.25, 3.75, 0.25)
        common = dict(axis="gamma_min", values=values, base=mid, metrics=secrecy, mc=mc, pso=pso)
        return [
            SweepSpec(allocation="epa", problem="opa2", series="EPA", **common),
            SweepSpec(allocation="opa1", theta_list=(1.0,), series="OPA1 theta=1", **common),
            SweepSpec(allocation="opa1", theta_list=(0.1,), series="OPA1 theta=0.1", **common),
            SweepSpec(allocation="opa2", series="OPA2", **common),
            SweepSpec(allocation="opa3", series="OPA3", **common),
        ]
    if name == "fig9":
        values = _grid(0.1, 6.0, 0.1)
        specs = []
        for d in (0.2, 0.5, 0.8):
            base = SystemParams.from_db(30.0, d=d)
            specs.append(SweepSpec("rs", values, base, ("throughput",), mc=mc,
                                   series=f"EPA d={d:g}"))
            for eta3 in (0.2, 0.8):
                eta2 = analytic.optimal_eta2(eta3, base.omega_sr, base.omega_rd)
                fixed = base.with_(eta1=1.0 - eta2 - eta3, eta2=eta2, eta3=eta3)
                specs.append(SweepSpec("rs", values, fixed, ("throughput",), allocation="fixed",
                                       mc=mc, series=f"eta2_opt eta3={eta3:g} d={d:g}"))
        return specs
    raise ValueError(f"unknown preset {name!r}; expected fig2..fig9")


PRESETS = tuple(f"fig{i}" for i in range(2, 10))
