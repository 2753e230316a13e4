"""Command line entry point: ``ldg-colloid {profile,minimize,trial,sweep,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
from pathlib import Path
import sys

from . import harness
from .axisym import energy, write_snapshot
from .harness import (FORMATS, PRESETS, SweepSpec, d_lambda_quadrature, new_run_dir,
                      orientable_comparison, read_records, report, run_point, run_sweep)
from .profile1d import ProfileGrid, d_infinity, d_lambda_curve, write_profile
from .qtensor import InvalidInput, ModelParams, boundary_tensor
from .trial import TrialSpec, build_finite_lambda_trial, build_saturn_trial, region_energies

log = logging.getLogger("ldg_colloid")

CONFIG_SECTIONS = ("model", "grid", "solver", "sweep", "output")


def load_config(path: str | None) -> dict:
    """Read the JSON config; missing sections come back empty."""
    cfg: dict = {}
    if path:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(cfg) - set(CONFIG_SECTIONS)
        if unknown:
            raise InvalidInput(f"unknown config sections {sorted(unknown)}; expected {CONFIG_SECTIONS}")
    return {k: dict(cfg.get(k, {})) for k in CONFIG_SECTIONS}


def _floats(text: str) -> list[float]:
    return [float(eval_number(x)) for x in text.split(",") if x.strip()]


def eval_number(text: str) -> float:
    """Parse a float, allowing ``pi`` multiples such as ``pi/6`` or ``2*pi/3``."""
    t = text.strip().replace(" ", "")
    try:
        return float(t)
    except ValueError:
        pass
    num, _, den = t.partition("/")
    coef = num.replace("pi", "").rstrip("*") if "pi" in num else num
    val = (float(coef) if coef else 1.0) * (math.pi if "pi" in num else 1.0)
    return val / float(den) if den else val


def _out_dir(args, cfg) -> Path:
    return Path(args.out or cfg["output"].get("dir", "runs"))


def _params(args, cfg) -> ModelParams:
    xi = args.xi if args.xi is not None else cfg["model"].get("xi")
    eta = args.eta if args.eta is not None else cfg["model"].get("eta")
    if xi is None or eta is None:
        raise InvalidInput("xi and eta are required (flags or the model section of --config)")
    return ModelParams(float(xi), float(eta))


def _spec_from(args, cfg) -> SweepSpec:
    sw = cfg["sweep"]
    preset = args.preset or sw.get("preset", "desk")
    seed = args.seed if args.seed is not None else int(sw.get("seed", 0))
    common = {"preset": preset, "seed": seed, "noise": float(sw.get("noise", 1e-3)),
              "inits": tuple(args.inits.split(",")) if args.inits else tuple(sw.get("inits", harness.INITS)),
              "regime": sw.get("regime"), "n_theta": cfg["grid"].get("n_theta"),
              "solver": cfg["solver"]}
    xis = _floats(args.xi_list) if args.xi_list else sw.get("xi")
    schedule = args.schedule or sw.get("schedule")
    if schedule:
        kind, _, rest = schedule.partition(":")
        vals = [float(v) for v in rest.split(",") if v]
        if xis is None:
            raise InvalidInput("a schedule needs the xi list (--xi-list or sweep.xi)")
        if kind == "ratio" and len(vals) == 1:
            return SweepSpec.ratio_schedule(vals[0], xis, **common)
        if kind == "log" and len(vals) == 2:
            return SweepSpec.log_schedule(vals[0], vals[1], xis, **common)
        raise InvalidInput("schedule must be 'ratio:LAMBDA' or 'log:C,P'")
    return SweepSpec(points=tuple(tuple(p) for p in sw.get("points", [])), **common)


# ---------------------------------------------------------------------------
# subcommands


def cmd_profile(args, cfg) -> int:
    thetas = _floats(args.theta) if args.theta else [math.pi / 6, math.pi / 3, math.pi / 2]
    lams = _floats(args.lam) if args.lam else [1, 3, 10, 30, 100]
    grid = ProfileGrid(N=args.nodes)
    run = new_run_dir(_out_dir(args, cfg))
    curves = {}
    print(f"{'theta':>10} {'lambda':>8} {'D_lambda':>14} {'d_inf':>12}")
    for th in thetas:
        res = d_lambda_curve(boundary_tensor(th), sorted(lams), grid, return_results=True)
        for lam, r in res:
            print(f"{th:10.6f} {lam:8g} {r.energy:14.8f} {float(d_infinity(th)):12.8f}")
            curves.setdefault(lam, ([], []))
            curves[lam][0].append(th)
            curves[lam][1].append(r.energy)
            write_profile(run / f"profile_theta{th:.6f}_lam{lam:g}.csv", r, theta=th, L=grid.L)
    p = run / "d_lambda.svg"
    p.write_text(harness.svg_plot({f"lambda={k:g}": list(zip(*v)) for k, v in curves.items()},
                                  "theta", "D_lambda", "D_lambda(Q_b(theta))"), encoding="utf-8")
    print(f"wrote {run}")
    return 0


def cmd_minimize(args, cfg) -> int:
    params = _params(args, cfg)
    spec = _spec_from(args, {**cfg, "sweep": {**cfg["sweep"], "points": [[params.xi, params.eta]]}})
    run = new_run_dir(_out_dir(args, cfg))
    (run / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    recs = run_point(params.xi, params.eta, spec.inits, preset=spec.preset, seed=spec.seed,
                     noise=spec.noise, n_theta=spec.n_theta, out_dir=run, solver=spec.solver)
    for fmt in FORMATS:
        report(recs, fmt, run)
    _print_records(recs)
    ok = [r for r in recs if r.status == "ok"]
    if args.orientable and ok:
        best = min(ok, key=lambda r: r.E_total)
        rep = orientable_comparison(params, eta_E_minimizer=best.etaE, preset=spec.preset)
        print("\n".join(rep.lines()))
        (run / "orientable.json").write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    print(f"wrote {run}")
    return 0 if len(ok) == len(recs) else 1


def cmd_trial(args, cfg) -> int:
    params = _params(args, cfg)
    grid = harness.grid_for(params, args.preset or "desk", cfg["grid"].get("n_theta"))
    if args.mode == "saturn":
        build = build_saturn_trial(params, grid)
    else:
        spec = TrialSpec("finite-lambda", params, h=eval_number(args.h),
                         eps_mollify=eval_number(args.eps_mollify) if args.eps_mollify else eval_number(args.h) / 4)
        build = build_finite_lambda_trial(spec, grid)
    b = energy(build.field, params)
    print(f"mode {args.mode}  xi={params.xi:g} eta={params.eta:g} lambda={params.lam:g}")
    print(f"E = {b.total:.10g}   eta*E = {params.eta * b.total:.10g}")
    if args.mode == "saturn":
        for k, v in region_energies(build.field, params).items():
            print(f"  {k:<10} eta*E = {params.eta * v:.10g}")
        print(f"2*pi*kappa = {harness.TWO_PI_KAPPA:.10g}")
    else:
        print(f"2*pi*int D_lambda sin = {d_lambda_quadrature(params.lam):.10g}")
    run = new_run_dir(_out_dir(args, cfg))
    info = {k: v for k, v in build.info.items() if isinstance(v, (int, float, str, bool))}
    write_snapshot(run / f"trial_{args.mode}.csv", build.field,
                   {"params": params.to_dict(), "energy": b.to_dict(), "info": info})
    print(f"wrote {run}")
    return 0


def cmd_sweep(args, cfg) -> int:
    spec = _spec_from(args, cfg)
    if not spec.points:
        print("empty sweep: nothing to do")
        return 0
    run = new_run_dir(_out_dir(args, cfg))
    recs = run_sweep(spec, threads=args.threads, run_dir=run, config=cfg)
    _print_records(recs)
    try:
        fit = harness.fit_scaling(recs)
        print(f"linear-in-eta limit {fit.limit:.6f}  reference {fit.reference:.6f}  gap {fit.gap:+.6f}")
    except InvalidInput as err:
        print(f"no scaling fit: {err}")
    print(f"wrote {run}")
    return 0 if all(r.status == "ok" for r in recs) else 1


def cmd_report(args, cfg) -> int:
    recs = read_records(args.records)
    out = Path(args.out) if args.out else Path(args.records).parent
    fmts = args.format.split(",") if args.format else list(FORMATS)
    for f in fmts:
        for p in report(recs, f, out):
            print(f"wrote {p}")
    return 0


def _print_records(recs) -> None:
    print(f"{'xi':>8} {'eta':>8} {'init':>7} {'status':>14} {'eta*E':>12} {'sym':>10} {'ring_r':>8} {'ring_th':>8}")
    for r in recs:
        print(f"{r.xi:8g} {r.eta:8g} {r.init:>7} {r.status:>14} {r.etaE:12.6f} {r.sym_ratio:10.6f} "
              f"{r.ring_r:8.4f} {r.ring_theta:8.4f}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with sections model, grid, solver, sweep, output")
    common.add_argument("--out", help="output root (a fresh run-NNNN directory is created inside)")
    common.add_argument("--seed", type=int, help="seed for the initial noise")
    common.add_argument("--threads", type=int, help=f"worker processes (env {harness.THREADS_ENV} overrides)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="grid and solver preset")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="ldg-colloid", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", parents=[common], help="D_lambda curves from the 1D problem")
    p.add_argument("--theta", help="comma list of polar angles (pi/6 style allowed)")
    p.add_argument("--lam", help="comma list of lambda values")
    p.add_argument("--nodes", type=int, default=2000)
    p.set_defaults(func=cmd_profile)

    for name, fn, hlp in (("minimize", cmd_minimize, "relax one (xi, eta) point"),
                          ("trial", cmd_trial, "build and evaluate a trial construction")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--xi", type=float)
        p.add_argument("--eta", type=float)
        if name == "minimize":
            p.add_argument("--inits", help="comma list from trial,layer,dipole")
            p.add_argument("--orientable", action="store_true", help="also run the oriented comparison")
            p.add_argument("--schedule", help=argparse.SUPPRESS)
            p.add_argument("--xi-list", help=argparse.SUPPRESS)
        else:
            p.add_argument("--mode", choices=("saturn", "finite-lambda"), default="saturn")
            p.add_argument("--h", default="pi/8", help="partition width (finite-lambda)")
            p.add_argument("--eps-mollify", help="mollifier width (default h/4)")
        p.set_defaults(func=fn)

    p = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    p.add_argument("--schedule", help="'ratio:LAMBDA' (eta = LAMBDA xi) or 'log:C,P' (eta = C/|ln xi|^P)")
    p.add_argument("--xi-list", help="comma list of xi values for a schedule")
    p.add_argument("--inits", help="comma list from trial,layer,dipole")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", parents=[common], help="re-emit report files from records.json")
    p.add_argument("records", help="records.json from a previous run")
    p.add_argument("--format", help=f"comma list from {','.join(FORMATS)}")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (InvalidInput, json.JSONDecodeError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
