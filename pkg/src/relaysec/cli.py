"""Command-line runner: ``relaysec {eval,sweep,optimize,mc,preset}``.

Exit codes: 0 success, 2 invalid input, 3 infeasible problem, 4 numerical
failure. Option values are resolved as command-line flag, then config
file (``key = value`` lines), then built-in default.
"""

from __future__ import annotations

import argparse
import io
import sys

from .channel import SystemParams
from .montecarlo import McConfig, simulate
from .numerics import QuadratureError
from .optimizer import InfeasibleProblemError, OptProblem, PsoConfig, solve
from .sweeps import (AXES, ALLOCATIONS, BASE_COLUMNS, METRICS, PRESETS, SweepSpec, columns_for,
                     preset, run_eval, run_sweep, write_csv)

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = {
    "gamma_p_db": 30.0,
    "rs": 1.0,
    "alpha": 4.0,
    "theta": [1.0],
    "seed": 0,
    "problem": "opa1",
    "allocation": "epa",
    "metrics": ",".join(METRICS),
    "workers": 1,
    "particles": PsoConfig.n_particles,
    "iterations": PsoConfig.n_iterations,
    "penalty": PsoConfig.penalty_value,
    "objective_mode": "asymptotic",
}

EVAL_COLUMNS = [c for c in BASE_COLUMNS if c not in ("series", "allocation", "axis", "value",
                                                     "gamma_min", "feasible")]
MC_ONLY_COLUMNS = ["theta", "n_samples", "seed", "gsop_mc", "gsop_mc_ci", "afe_mc", "afe_mc_ci",
                   "ailr_mc", "ailr_mc_ci", "throughput_mc", "throughput_mc_ci"]
OPT_COLUMNS = ["problem", "theta", "gamma_min", "gamma_p_db", "omega_sr", "omega_rd", "eta1",
               "eta2", "eta3", "rs", "rt", "objective", "feasible", "iterations_used"]


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _eta_triplet(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--eta needs three comma-separated numbers")
    return tuple(parts)


def _float_list(text: str):
    text = text.strip()
    return [float(x) for x in text.split(",")] if text else []


# converters for values coming from a config file
_CONVERT = {
    "gamma_p_db": float, "rs": float, "rt": float, "d": float, "alpha": float,
    "omega_sr": float, "omega_rd": float, "gamma_min": float, "seed": int,
    "mc_samples": int, "workers": int, "particles": int, "iterations": int,
    "penalty": float, "eta": _eta_triplet, "values": _float_list,
    "theta": _float_list,
    "epa": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "pin_rs": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


def _add_params(p):
    g = p.add_argument_group("operating point")
    g.add_argument("--gamma-p-db", type=float, help="total transmit SNR in dB (default 30)")
    g.add_argument("--eta", type=_eta_triplet, help="power shares a,b,c summing to 1")
    g.add_argument("--epa", action="store_true", default=None, help="equal power allocation")
    g.add_argument("--rs", type=float, help="secrecy rate (default 1)")
    g.add_argument("--rt", type=float, help="codeword rate (default rs)")
    g.add_argument("--d", type=float, help="normalized source-relay distance (default 0.5)")
    g.add_argument("--alpha", type=float, help="path-loss exponent (default 4)")
    g.add_argument("--omega-sr", type=float, help="mean S-R channel gain")
    g.add_argument("--omega-rd", type=float, help="mean R-D channel gain")
    g.add_argument("--theta", type=float, action="append",
                   help="equivocation threshold in (0, 1]; repeatable (default 1)")


def _add_common(p, mc_default=None):
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--mc-samples", type=int,
                   help="Monte Carlo sample count" + (f" (default {mc_default})" if mc_default else ""))
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--config", help="key=value file with option defaults")


def _add_pso(p):
    p.add_argument("--particles", type=int, help="swarm size (default 2000)")
    p.add_argument("--iterations", type=int, help="swarm iterations (default 100)")
    p.add_argument("--penalty", type=float, help="penalty factor per violated constraint")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relaysec",
                     description="Partial-secrecy metrics of an untrusted AF relay with jamming.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="analytic (and optional Monte Carlo) metrics at one point")
    _add_params(p)
    _add_common(p)

    p = sub.add_parser("mc", help="Monte Carlo estimates at one point")
    _add_params(p)
    _add_common(p, mc_default=McConfig.n_samples)

    p = sub.add_parser("sweep", help="sweep one parameter and write a CSV")
    _add_params(p)
    _add_common(p)
    _add_pso(p)
    p.add_argument("--axis", choices=AXES)
    p.add_argument("--values", type=_float_list, help="comma-separated, strictly increasing")
    p.add_argument("--metrics", help="comma-separated subset of " + ",".join(METRICS))
    p.add_argument("--allocation", choices=ALLOCATIONS)
    p.add_argument("--problem", choices=("opa1", "opa2", "opa3"),
                   help="objective for rate optimization along gamma_min with fixed shares")
    p.add_argument("--gamma-min", type=float, help="throughput floor for optimized points")
    p.add_argument("--pin-rs", action="store_true", default=None,
                   help="keep rs fixed while optimizing")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")

    p = sub.add_parser("optimize", help="solve one allocation problem")
    _add_params(p)
    _add_common(p)
    _add_pso(p)
    p.add_argument("--problem", choices=("opa1", "opa2", "opa3"))
    p.add_argument("--gamma-min", type=float, help="throughput floor")
    p.add_argument("--objective-mode", choices=("asymptotic", "full"))

    p = sub.add_parser("preset", help="CSV behind one of the figures")
    p.add_argument("name", choices=PRESETS)
    _add_common(p, mc_default=McConfig.n_samples)
    _add_pso(p)
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    return parser


def load_config(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            conv = _CONVERT.get(key, str)
            try:
                out[key] = conv(value)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return out


class Options:
    """Flag value, else config value, else default."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self._args = args
        self._config = config

    def __getattr__(self, name):
        value = getattr(self._args, name, None)
        if value is None:
            value = self._config.get(name)
        if value is None:
            value = DEFAULTS.get(name)
        return value


def params_from(opt: Options) -> SystemParams:
    if opt.eta is not None and opt.epa:
        raise UsageError("--eta and --epa are mutually exclusive")
    eta = opt.eta if opt.eta is not None else (1.0 / 3.0,) * 3
    kw = dict(eta1=eta[0], eta2=eta[1], eta3=eta[2], rs=opt.rs, rt=opt.rt, alpha=opt.alpha)
    if opt.omega_sr is not None or opt.omega_rd is not None:
        if opt.d is not None:
            raise UsageError("give either --d or --omega-sr/--omega-rd, not both")
        kw.update(omega_sr=opt.omega_sr, omega_rd=opt.omega_rd)
    else:
        kw["d"] = opt.d if opt.d is not None else 0.5
    return SystemParams.from_db(opt.gamma_p_db, **kw)


def _mc_config(opt: Options, default=None):
    n = opt.mc_samples if opt.mc_samples is not None else default
    if n is None or n == 0:
        return None
    return McConfig(n_samples=n, seed=opt.seed)


def _pso_config(opt: Options) -> PsoConfig:
    return PsoConfig(n_particles=opt.particles, n_iterations=opt.iterations, seed=opt.seed,
                     penalty_value=opt.penalty)


def _point_row(p: SystemParams) -> dict:
    return {"gamma_p_db": p.gamma_p_db, "omega_sr": p.omega_sr, "omega_rd": p.omega_rd,
            "eta1": p.eta1, "eta2": p.eta2, "eta3": p.eta3, "rs": p.rs, "rt": p.rt}


def cmd_eval(opt: Options, out) -> int:
    p = params_from(opt)
    mc = _mc_config(opt)
    rep = run_eval(p, opt.theta, mc)
    cols = EVAL_COLUMNS + columns_for(METRICS, mc is not None)[len(BASE_COLUMNS):]
    write_csv([{**_point_row(p), **r} for r in rep.rows()], cols, out)
    return EXIT_OK


def cmd_mc(opt: Options, out) -> int:
    p = params_from(opt)
    cfg = _mc_config(opt, McConfig.n_samples)
    if cfg is None:
        raise UsageError("--mc-samples must be positive")
    rep = simulate(p, McConfig(cfg.n_samples, cfg.seed, tuple(opt.theta)))
    rows = []
    for th in rep.gsop_hat:
        rows.append({"theta": th, "n_samples": rep.n_samples, "seed": rep.seed,
                     "gsop_mc": rep.gsop_hat[th][0], "gsop_mc_ci": rep.gsop_hat[th][1],
                     "afe_mc": rep.afe_hat[0], "afe_mc_ci": rep.afe_hat[1],
                     "ailr_mc": rep.ailr_hat[0], "ailr_mc_ci": rep.ailr_hat[1],
                     "throughput_mc": rep.throughput_hat[0],
                     "throughput_mc_ci": rep.throughput_hat[1]})
    write_csv(rows, MC_ONLY_COLUMNS, out)
    return EXIT_OK


def cmd_optimize(opt: Options, out) -> int:
    if opt.gamma_min is None:
        raise UsageError("--gamma-min is required")
    p = params_from(opt)
    theta = opt.theta[-1]
    prob = OptProblem.from_params(opt.problem, opt.gamma_min, p, theta=theta,
                                  objective_mode=opt.objective_mode)
    res = solve(prob, _pso_config(opt))
    row = {"problem": prob.kind.value, "theta": theta, "gamma_min": opt.gamma_min,
           **_point_row(p), "eta1": res.eta1, "eta2": res.eta2, "eta3": res.eta3,
           "rs": res.rs, "rt": res.rt, "objective": res.objective, "feasible": res.feasible,
           "iterations_used": res.iterations_used}
    write_csv([row], OPT_COLUMNS, out)
    label = {"opa1": "GSOP", "opa2": "AFE", "opa3": "AILR"}[prob.kind.value]
    print(f"{prob.kind.value.upper()}: {label} = {res.objective:.6g} at eta = "
          f"({res.eta1:.4f}, {res.eta2:.4f}, {res.eta3:.4f}), rs = {res.rs:.4f}, "
          f"rt = {res.rt:.4f}; feasible = {res.feasible}", file=sys.stderr)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_sweep(opt: Options, out) -> int:
    if opt.axis is None:
        raise UsageError("--axis is required")
    if not opt.values:
        raise UsageError("values must be nonempty")
    if opt.allocation == "fixed" and opt.eta is None:
        raise UsageError("allocation=fixed requires explicit --eta")
    spec = SweepSpec(axis=opt.axis, values=tuple(opt.values), base=params_from(opt),
                     metrics=tuple(m.strip() for m in opt.metrics.split(",") if m.strip()),
                     theta_list=tuple(opt.theta), allocation=opt.allocation,
                     gamma_min=opt.gamma_min, problem=opt.problem, pin_rs=bool(opt.pin_rs),
                     mc=_mc_config(opt), pso=_pso_config(opt), series=opt.allocation)
    out.write(run_sweep(spec, workers=opt.workers))
    return EXIT_OK


def cmd_preset(opt: Options, out) -> int:
    specs = preset(opt.name, mc=_mc_config(opt, McConfig.n_samples), pso=_pso_config(opt))
    out.write(run_sweep(specs, workers=opt.workers))
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "mc": cmd_mc, "sweep": cmd_sweep, "optimize": cmd_optimize,
            "preset": cmd_preset}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config) if getattr(args, "config", None) else {}
        opt = Options(args, config)
        buf = io.StringIO()
        code = COMMANDS[args.command](opt, buf)
    except InfeasibleProblemError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (QuadratureError, FloatingPointError, OverflowError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID

    text = buf.getvalue()
    if opt.out:
        with open(opt.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
