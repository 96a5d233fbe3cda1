"""Config-driven command line: every experiment is a subcommand emitting
CSV/JSON (and NLSF snapshot) artifacts."""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import estimates as est
from . import evolution as evo
from .config import ConfigError, ExperimentConfig, load_config
from .grids import Field, Grid
from .io import write_json_report, write_nlsf, write_norm_csv
from .nonlinearity import NonlinearityParams
from .solitons import SolitonParams, eval_soliton_grid, save_bound_state
from .train import (
    DimGroup,
    ParamSchedule,
    TheoremPlan,
    TrainSpec,
    gen_params,
    norm_report,
    plan_construction,
    stage_plans,
)

SUBCOMMANDS = (
    "ground-state",
    "norms",
    "params-gen",
    "evolve",
    "estimates",
    "picard",
    "mixed",
    "appendixB",
    "report",
)

EXIT_CONFIG = 1
EXIT_INADMISSIBLE = 2
EXIT_DIVERGENCE = 3


class PlanRejected(RuntimeError):
    def __init__(self, plan: TheoremPlan):
        super().__init__(f"plan {plan.theorem} inadmissible: " + "; ".join(plan.violated))
        self.plan = plan


# ----------------------------------------------------------------------------
# config -> domain objects


def _nl(cfg: ExperimentConfig, dmax: int) -> NonlinearityParams:
    return NonlinearityParams(
        alpha1=float(cfg.get("nonlinearity", "alpha1")),
        alpha2=float(cfg.get("nonlinearity", "alpha2")),
        c=float(cfg.get("nonlinearity", "c")),
        d=dmax,
    )


def _dims(cfg: ExperimentConfig) -> tuple[int, ...]:
    dims = cfg.get("experiment", "dims")
    return tuple(int(d) for d in (dims if isinstance(dims, list) else [dims]))


def _schedule(cfg: ExperimentConfig) -> ParamSchedule:
    return ParamSchedule(
        rho=float(cfg.get("schedule", "rho")),
        gamma_speed=float(cfg.get("schedule", "gamma_speed")),
        delta=float(cfg.get("schedule", "delta", 0.0)),
        N=int(cfg.get("schedule", "N")),
        omega_star=float(cfg.get("schedule", "omega_star")),
    )


def _explicit_solitons(cfg: ExperimentConfig) -> dict[int, list[SolitonParams]]:
    groups: dict[int, list[SolitonParams]] = {}
    for sec in cfg.subsections("soliton"):
        dim = int(cfg.get(sec, "dim"))
        v = cfg.get(sec, "v")
        v = tuple(float(x) for x in (v if isinstance(v, list) else [v]))
        x0 = cfg.get(sec, "x0", [0.0] * dim)
        x0 = tuple(float(x) for x in (x0 if isinstance(x0, list) else [x0]))
        sp = SolitonParams(
            omega=float(cfg.get(sec, "omega")),
            v=v,
            x0=x0,
            gamma=float(cfg.get(sec, "gamma", 0.0)),
        )
        if sp.dim != dim:
            raise ConfigError(f"{sec}: velocity length does not match dim={dim}")
        groups.setdefault(dim, []).append(sp)
    return groups


def build_spec(cfg: ExperimentConfig) -> TrainSpec:
    dims = _dims(cfg)
    nl = _nl(cfg, dmax=max(dims))
    explicit = _explicit_solitons(cfg)
    if explicit:
        missing = [d for d in dims if d not in explicit]
        if missing:
            raise ConfigError(f"no [soliton.*] entries for dims {missing}")
        stray = sorted(set(explicit) - set(dims))
        if stray:
            raise ConfigError(f"[soliton.*] entries for dims {stray} not in experiment.dims")
        groups = [DimGroup(dim=d, solitons=explicit[d]) for d in sorted(dims)]
        omega_star = cfg.get(
            "schedule", "omega_star",
            2.0 * max(sp.omega for g in groups for sp in g.solitons),
        )
    else:
        if len(dims) != 1:
            raise ConfigError("mixed-dimension runs need explicit [soliton.*] entries")
        sch = _schedule(cfg)
        groups = [DimGroup(dim=dims[0], solitons=gen_params(sch, dim=dims[0]))]
        omega_star = sch.omega_star
    return TrainSpec(
        nl=nl,
        groups=groups,
        a=float(cfg.get("decay", "a")),
        D=float(cfg.get("decay", "D")),
        omega_star=float(omega_star),
    )


def _grid_for(cfg: ExperimentConfig, dim: int) -> Grid:
    sec = f"grid.{dim}"
    if not cfg.has(sec):
        raise ConfigError(f"missing section [{sec}]")
    return Grid(dim, float(cfg.get(sec, "L")), int(cfg.get(sec, "n")))


def _plan(cfg: ExperimentConfig) -> TheoremPlan:
    dims = _dims(cfg)
    plan = plan_construction(
        dims,
        float(cfg.get("nonlinearity", "alpha1")),
        float(cfg.get("nonlinearity", "alpha2")),
        t0=float(cfg.get("solver", "t0")),
        rho_ball=float(cfg.get("solver", "ball_radius")),
    )
    if not plan.admissible:
        raise PlanRejected(plan)
    return plan


def _base_report(cfg: ExperimentConfig, subcommand: str) -> dict:
    return {
        "subcommand": subcommand,
        "config": cfg.echo(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


def _sub_spec(spec: TrainSpec, dims: tuple[int, ...]) -> TrainSpec:
    return TrainSpec(
        nl=spec.nl,
        groups=[g for g in spec.groups if g.dim in dims],
        a=spec.a,
        D=spec.D,
        omega_star=spec.omega_star,
    )


# ----------------------------------------------------------------------------
# subcommands


def cmd_ground_state(cfg: ExperimentConfig, out: Path) -> dict:
    spec = build_spec(cfg)
    spec.ensure_bound_states()
    report = _base_report(cfg, "ground-state")
    report["profiles"] = []
    for g in spec.groups:
        for om, bs in sorted(g.bound_states.items()):
            fname = out / f"bound_state_d{g.dim}_omega{om:.6g}.txt"
            save_bound_state(bs, fname)
            report["profiles"].append(
                {
                    "dim": g.dim,
                    "omega": om,
                    "height": bs.height(),
                    "residual": bs.residual,
                    "closed_form": bs.closed_form,
                    "file": fname.name,
                }
            )
    write_json_report(out / "ground_state.json", report)
    return report


def cmd_params_gen(cfg: ExperimentConfig, out: Path) -> dict:
    sch = _schedule(cfg)
    dims = _dims(cfg)
    sols = gen_params(sch, dim=dims[0])
    report = _base_report(cfg, "params-gen")
    report["schedule"] = {
        "rho": sch.rho,
        "gamma_speed": sch.gamma_speed,
        "delta": sch.delta,
        "N": sch.N,
        "omega_star": sch.omega_star,
    }
    report["solitons"] = [
        {"omega": sp.omega, "v": list(sp.v), "x0": list(sp.x0), "gamma": sp.gamma}
        for sp in sols
    ]
    write_json_report(out / "params_gen.json", report)
    rows = [
        (float(j + 1), "omega", None, None, sp.omega) for j, sp in enumerate(sols)
    ] + [(float(j + 1), "speed", None, None, sp.speed) for j, sp in enumerate(sols)]
    write_norm_csv(out / "params_gen.csv", rows)
    return report


def _regions_payload(dims, t0):
    a1_grid = np.linspace(0.05, 2.5, 99)
    a2_grid = np.linspace(0.05, 4.0, 96)
    table = []
    for a1 in a1_grid:
        for a2 in a2_grid:
            if a2 < a1:
                continue
            plan = plan_construction(dims, float(a1), float(a2), t0=t0)
            table.append(
                {
                    "alpha1": float(a1),
                    "alpha2": float(a2),
                    "theorem": plan.theorem,
                    "admissible": plan.admissible,
                }
            )
    return {"dims": list(dims), "t0": t0, "grid": table}


def cmd_norms(cfg: ExperimentConfig, out: Path) -> dict:
    spec = build_spec(cfg)
    plan = plan_construction(
        _dims(cfg), spec.nl.alpha1, spec.nl.alpha2, t0=float(cfg.get("solver", "t0"))
    )
    p_list = [float(p) for p in cfg.get("experiment", "p_list")]
    rep = norm_report(spec, p_list)
    report = _base_report(cfg, "norms")
    report["plan"] = plan.to_dict()
    report["norms"] = rep.to_dict()
    write_json_report(out / "norms.json", report)
    write_json_report(
        out / "regions.json", _regions_payload(_dims(cfg), float(cfg.get("solver", "t0")))
    )
    return report


def cmd_evolve(cfg: ExperimentConfig, out: Path) -> dict:
    spec = build_spec(cfg)
    spec.ensure_bound_states()
    g = spec.groups[0]
    if len(g.solitons) != 1:
        raise ConfigError("evolve expects exactly one soliton")
    sp = g.solitons[0]
    bs = g.bound_states[sp.omega]
    grid = _grid_for(cfg, g.dim)
    dt = float(cfg.get("solver", "dt"))
    t0 = float(cfg.get("solver", "t0"))
    t_end = float(cfg.get("solver", "T_end"))
    n_steps = int(round((t_end - t0) / dt))
    started = time.perf_counter()
    u = Field(grid, eval_soliton_grid(bs, sp, t0, grid), t0)
    m0 = u.mass()
    rows = []
    max_err = 0.0
    chunk = max(1, n_steps // 50)
    done = 0
    while done < n_steps:
        k = min(chunk, n_steps - done)
        u = evo.split_step(u, dt, spec.nl, n_steps=k)
        done += k
        exact = eval_soliton_grid(bs, sp, u.t, grid)
        denom = est.lp_norm(exact, grid, 2.0)
        err = est.lp_norm(u.values - exact, grid, 2.0) / denom
        max_err = max(max_err, err)
        rows.append((u.t, "l2_error", 2.0, None, err))
        rows.append((u.t, "mass_drift", None, None, abs(u.mass() - m0) / m0))
    runtime = time.perf_counter() - started
    report = _base_report(cfg, "evolve")
    report.update(
        {
            "grid": {"dim": grid.dim, "N": list(grid.N), "L": list(grid.L)},
            "dt": dt,
            "l2_error": max_err,
            "mass_drift": abs(u.mass() - m0) / m0,
            "runtime_seconds": runtime,
        }
    )
    try:
        err_series = [r[4] for r in rows if r[1] == "l2_error"]
        err_times = [r[0] for r in rows if r[1] == "l2_error"]
        efit = evo.fit_decay(err_times, err_series, label="l2_error")
        report["fits"] = {"l2_error": {"rate_raw": efit.rate_raw, "lambda_hat": efit.lambda_hat,
                                       "residual": efit.residual, "window": list(efit.window)}}
    except ValueError:
        report["fits"] = {}
    write_json_report(out / "evolve.json", report)
    write_norm_csv(out / "evolve.csv", rows)
    if "nlsf" in cfg.get("outputs", "formats"):
        write_nlsf(out / "evolve_final.nlsf", u)
    return report


def cmd_estimates(cfg: ExperimentConfig, out: Path) -> dict:
    spec = build_spec(cfg)
    grid = _grid_for(cfg, spec.groups[0].dim)
    r = float(cfg.get("estimates", "r"))
    s = float(cfg.get("estimates", "s"))
    times = np.linspace(0.0, float(cfg.get("estimates", "t_max")), int(cfg.get("estimates", "n_times")))
    rep = est.check_H0(spec, r, s, times, grid)
    rows = []
    for label, series in rep.norms.items():
        pvals = {"H_Linf": math.inf}
        p = pvals.get(label, r if label.endswith(f"L{r:g}") else s)
        for t, v in zip(rep.times, series):
            rows.append((float(t), label, p, None, float(v)))
    report = _base_report(cfg, "estimates")
    report.update(
        {
            "holder_ok": rep.holder_ok,
            "fitted_rate": rep.fit.rate,
            "rate_target": rep.rate_target,
            "rate_ok": rep.rate_ok,
            "coefficient": rep.coefficient,
            "vstar": rep.details["vstar"],
        }
    )
    if bool(cfg.get("estimates", "gradient")):
        p = float(cfg.get("estimates", "p"))
        q = float(cfg.get("estimates", "q"))
        s_grad = 1.0 / (1.0 / p + 1.0 / q)
        rep1 = est.check_H1(spec, r, s_grad, p, q, times, grid)
        report["gradient_check"] = {
            "fitted_rate": rep1.fit.rate,
            "rate_target": rep1.rate_target,
            "rate_ok": rep1.rate_ok,
            "holder_ok": rep1.holder_ok,
        }
        for label, series in rep1.norms.items():
            for t, v in zip(rep1.times, series):
                rows.append((float(t), label, None, None, float(v)))
    write_json_report(out / "estimates.json", report)
    write_norm_csv(out / "estimates.csv", rows)
    return report


def _picard_cfg(cfg: ExperimentConfig, spec: TrainSpec, plan: TheoremPlan) -> evo.PicardConfig:
    from .train import compute_vstar

    lam = float(cfg.get("solver", "lambda_weight"))
    targets = [float(x) for x in cfg.get("solver", "lambda_targets")]
    if not targets:
        base = spec.a * compute_vstar(spec) / 4.0
        if math.isfinite(base):
            targets = [2.0 * base, 5.0 * base, 10.0 * base]
    return evo.PicardConfig(
        t0=float(cfg.get("solver", "t0")),
        T_end=float(cfg.get("solver", "T_end")),
        n_time=int(cfg.get("solver", "n_time")),
        max_iter=int(cfg.get("solver", "max_iter")),
        contraction_tol=float(cfg.get("solver", "contraction_tol")),
        ball_radius=float(cfg.get("solver", "ball_radius")),
        lam=lam,
        lambda_scan=tuple(targets),
    )


def _picard_report(result: evo.PicardResult) -> dict:
    fits = {}
    for label, f in result.fits.items():
        fits[label] = {
            "lambda_hat": f.lambda_hat,
            "c1_hat": f.c1_hat,
            "rate_raw": f.rate_raw,
            "residual": f.residual,
            "window": list(f.window),
        }
    main = result.fits.get("L2")
    return {
        "plan": result.plan.to_dict(),
        "converged": result.converged,
        "iterations": result.iterations,
        "contraction_factors": result.factors,
        "contraction_factor_scan": result.factor_scan,
        "residuals": result.diffs,
        "lambda_hat": None if main is None else main.lambda_hat,
        "c1_hat": None if main is None else main.c1_hat,
        "fits": fits,
        "wraparound": result.wraparound,
        "vstar": result.vstar,
    }


def cmd_picard(cfg: ExperimentConfig, out: Path) -> dict:
    plan = _plan(cfg)  # exponent arithmetic first: inadmissibility is exit 2
    spec = build_spec(cfg)
    if len(spec.groups) != 1:
        raise ConfigError("picard runs a single-dimension construction; use mixed")
    grid = _grid_for(cfg, spec.groups[0].dim)
    pcfg = _picard_cfg(cfg, spec, plan)
    if pcfg.n_time == 0:  # auto: double nodes until the first iterate settles
        from dataclasses import replace

        probe = replace(pcfg, n_time=256)
        pcfg = replace(pcfg, n_time=evo.self_consistent_n_time(spec, plan, probe, grid))
    result = evo.picard_construct(spec, plan, pcfg, grid)
    report = _base_report(cfg, "picard")
    report["grid"] = {"dim": grid.dim, "N": list(grid.N), "L": list(grid.L)}
    report["schedule"] = spec.describe()
    report.update(_picard_report(result))
    fdt = float(cfg.get("solver", "forward_dt"))
    if fdt > 0:
        checks = evo.forward_consistency_check(
            result, spec, fdt, t_stop=pcfg.T_end - 1.0
        )
        report["forward_check"] = [[t, v] for t, v in checks]
        report["forward_max_error"] = max(v for _, v in checks)
    write_json_report(out / "picard.json", report)
    write_norm_csv(out / "picard.csv", result.norm_table)
    if "nlsf" in cfg.get("outputs", "formats"):
        write_nlsf(out / "picard_eta0.nlsf", result.eta.field(0))
    return report


def cmd_mixed(cfg: ExperimentConfig, out: Path) -> dict:
    plan = _plan(cfg)
    spec = build_spec(cfg)
    plans = stage_plans(plan)
    report = _base_report(cfg, "mixed")
    report["plan"] = plan.to_dict()
    report["schedule"] = spec.describe()
    report["stages"] = []
    lower: list[evo.EtaSeries] = []
    results: list[evo.PicardResult] = []
    for stage_idx, sub_plan in enumerate(plans):
        dims = sub_plan.dims
        sub = _sub_spec(spec, dims)
        grid = _grid_for(cfg, dims[-1])
        pcfg = _picard_cfg(cfg, sub, sub_plan)
        result = evo.picard_construct(sub, sub_plan, pcfg, grid, lower_dim_errors=list(lower))
        results.append(result)
        stage_rep = _picard_report(result)
        stage_rep["stage_dims"] = list(dims)
        report["stages"].append(stage_rep)
        write_norm_csv(out / f"mixed_stage{stage_idx + 1}_d{dims[-1]}.csv", result.norm_table)
        lower.append(result.eta)
    top = results[-1]
    report.update(_picard_report(top))

    if plan.theorem in ("mixed1", "mixed0") and spec.dims[0] == 1:
        # sample at t = 0 where the x0 = 0 solitons overlap maximally
        grid_top = results[-1].eta.grid
        demo = est.demonstrate_nodecay(spec, t=0.0, grid=grid_top)
        tail = slice(-max(4, grid_top.N[1] // 8), None)
        report["nodecay"] = {
            "limit_raw": demo.limit_raw,
            "raw_tail_mean": float(np.mean(demo.raw[tail])),
            "corrected_tail_mean": float(np.mean(demo.corrected[tail])),
            "x1": demo.x1,
        }
    if plan.theorem == "train123":
        eta2 = results[1].eta
        sup_xp = [est.lp_norm(eta2.values[i], eta2.grid, np.inf) for i in range(len(eta2.taus))]
        fit2 = report["stages"][1]["fits"].get("L2", {})
        lam2 = fit2.get("rate_raw", 0.0) or 0.0
        C, _tails = evo.t6_control(eta2.taus, sup_xp, lam2)
        report["eta2_t6"] = {"constant": C, "lambda_used": lam2}
    write_json_report(out / "mixed.json", report)
    if "nlsf" in cfg.get("outputs", "formats"):
        i0 = 0
        model_field = Field(top.eta.grid, top.eta.values[i0], float(top.eta.taus[i0]))
        write_nlsf(out / "mixed_eta0.nlsf", model_field)
    return report


def cmd_appendixB(cfg: ExperimentConfig, out: Path) -> dict:
    sweep = est.anisotropic_counterexample_sweep(
        m=float(cfg.get("appendixB", "m")),
        a=float(cfg.get("appendixB", "a")),
        p=float(cfg.get("appendixB", "p")),
        q=float(cfg.get("appendixB", "q")),
    )
    report = _base_report(cfg, "appendixB")
    report.update(
        {
            "fitted_exponent": sweep.fitted_exponent,
            "predicted_exponent": sweep.predicted_exponent,
            "iso_p_final": float(sweep.iso_p[0]),
            "iso_q_final": float(sweep.iso_q[0]),
        }
    )
    rows = []
    for e, ip, iq, an in zip(sweep.eps, sweep.iso_p, sweep.iso_q, sweep.aniso):
        rows.append((float(e), "iso_p", float(cfg.get("appendixB", "p")), None, float(ip)))
        rows.append((float(e), "iso_q", float(cfg.get("appendixB", "q")), None, float(iq)))
        rows.append(
            (
                float(e),
                "aniso",
                float(cfg.get("appendixB", "p")),
                float(cfg.get("appendixB", "q")),
                float(an),
            )
        )
    write_json_report(out / "appendixB.json", report)
    write_norm_csv(out / "appendixB.csv", rows)
    return report


def cmd_report(cfg: ExperimentConfig, out: Path) -> dict:
    from .io import read_json_report

    rows = []
    for path in sorted(out.glob("*.json")):
        if path.name == "summary.json":
            continue
        data = read_json_report(path)
        if not isinstance(data, dict) or "subcommand" not in data:
            continue
        entry = {"file": path.name, "subcommand": data.get("subcommand")}
        for key in ("l2_error", "lambda_hat", "c1_hat", "fitted_rate", "fitted_exponent",
                    "converged", "wraparound", "vstar"):
            if key in data:
                entry[key] = data[key]
        rows.append(entry)
    summary = _base_report(cfg, "report")
    summary["runs"] = rows
    write_json_report(out / "summary.json", summary)
    for row in rows:
        print("  ".join(f"{k}={v}" for k, v in row.items()))
    return summary


# ----------------------------------------------------------------------------
# entry point


def _apply_threads(value: int | None) -> int:
    n = value
    if n is None:
        envv = os.environ.get("SOLITRAIN_THREADS")
        n = int(envv) if envv else 1
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    return n


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="solitrain", description=__doc__)
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="experiment config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config entry (repeatable)",
    )
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override experiment.seed")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
            dotted, raw = item.split("=", 1)
            cfg.set(dotted.strip(), raw.strip())
        if args.seed is not None:
            cfg.sections.setdefault("experiment", {})["seed"] = args.seed
        _apply_threads(args.threads)
        cfg.sections.setdefault("experiment", {}).setdefault(
            "seed", cfg.get("experiment", "seed")
        )
        out = Path(args.out or cfg.get("outputs", "directory"))
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    handlers = {
        "ground-state": cmd_ground_state,
        "norms": cmd_norms,
        "params-gen": cmd_params_gen,
        "evolve": cmd_evolve,
        "estimates": cmd_estimates,
        "picard": cmd_picard,
        "mixed": cmd_mixed,
        "appendixB": cmd_appendixB,
        "report": cmd_report,
    }
    try:
        handlers[args.subcommand](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlanRejected as exc:
        print(f"plan inadmissible: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except evo.PicardDivergenceError as exc:
        trace = out / "divergence_trace.json"
        write_json_report(trace, {"factors": exc.factors, "error": str(exc)})
        print(f"numerical divergence: {exc} (trace: {trace})", file=sys.stderr)
        return EXIT_DIVERGENCE
    return 0


if __name__ == "__main__":
    sys.exit(main())
