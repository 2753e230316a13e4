"""Parameter sweeps, scaling fits, the oriented-field comparison and report files."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import io
import json
import logging
import math
import os
from pathlib import Path
import time
from typing import Iterable, Sequence

import numpy as np

from .axisym import (AxiField, AxiGrid, SolverOptions, cone_energy, default_n_theta, dipole_field,
                     energy, layer_field, locate_ring, minimize, symmetry_ratio, write_snapshot)
from .optim import ConvergenceError
from .profile1d import ProfileGrid, d_infinity, minimize_profile
from .qtensor import KAPPA, InvalidInput, ModelParams, boundary_tensor
from .trial import build_saturn_trial

log = logging.getLogger(__name__)

TWO_PI_KAPPA = 2.0 * math.pi * KAPPA
STATED_ORIENTED_CONSTANT = 8.0 * math.pi * KAPPA

CSV_COLUMNS = ("xi", "eta", "lambda", "E_total", "etaE", "E_elastic", "E_f", "E_g",
               "E_upper_hemi", "E_lower_hemi", "sym_ratio", "ring_r", "ring_theta", "status",
               "init")

INITS = ("trial", "layer", "dipole")

PRESETS = {
    "fast": {"theta_per_eta": 8.0 * math.pi, "rtol": 1e-4, "max_iter": 100, "multilevel": 1},
    "desk": {"theta_per_eta": 8.0 * math.pi, "rtol": 1e-6, "max_iter": 400, "multilevel": 2},
    "fine": {"theta_per_eta": 12.0 * math.pi, "rtol": 1e-6, "max_iter": 400, "multilevel": 2},
}

THREADS_ENV = "LDG_THREADS"

# desk budget: at most 768 theta cells and 256 radial nodes per point
MAX_NT = 768
MAX_NR = 256


def _threads(requested: int | None) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, requested or 1)


# ---------------------------------------------------------------------------
# specs and records


@dataclass(frozen=True)
class SweepSpec:
    """Parameter points plus how to grid and initialize them."""

    points: tuple[tuple[float, float], ...] = ()
    inits: tuple[str, ...] = INITS
    preset: str = "desk"
    seed: int = 0
    noise: float = 1e-3
    regime: str | None = None
    n_theta: int | None = None
    solver: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(e)) for x, e in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "inits", tuple(self.inits))
        for xi, eta in pts:
            if not (xi > 0 and eta > 0):
                raise InvalidInput("all xi and eta must be positive")
        bad = [i for i in self.inits if i not in INITS]
        if bad:
            raise InvalidInput(f"unknown initializations {bad}; choose from {INITS}")
        if self.preset not in PRESETS:
            raise InvalidInput(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if self.regime == "high-field":
            vals = [eta * abs(math.log(xi)) for xi, eta in pts]
            if any(b >= a for a, b in zip(vals, vals[1:])):
                raise InvalidInput("high-field schedule needs eta |ln xi| decreasing along the list")
        elif self.regime not in (None, "finite-lambda"):
            raise InvalidInput("regime must be None, 'finite-lambda' or 'high-field'")

    @classmethod
    def ratio_schedule(cls, lam: float, xis: Sequence[float], **kw) -> "SweepSpec":
        """eta = lam * xi."""
        return cls(points=tuple((x, lam * x) for x in xis), **kw)

    @classmethod
    def log_schedule(cls, c: float, p: float, xis: Sequence[float], **kw) -> "SweepSpec":
        """eta = c / |ln xi|^p."""
        return cls(points=tuple((x, c / abs(math.log(x)) ** p) for x in xis), **kw)

    def to_dict(self) -> dict:
        return {"points": [list(p) for p in self.points], "inits": list(self.inits),
                "preset": self.preset, "seed": self.seed, "noise": self.noise,
                "regime": self.regime, "n_theta": self.n_theta, "solver": dict(self.solver)}


@dataclass(frozen=True)
class RunRecord:
    """One (xi, eta, init) experiment; immutable once created."""

    xi: float
    eta: float
    lam: float
    init: str
    status: str
    E_total: float = math.nan
    etaE: float = math.nan
    E_elastic: float = math.nan
    E_f: float = math.nan
    E_g: float = math.nan
    E_upper_hemi: float = math.nan
    E_lower_hemi: float = math.nan
    sym_ratio: float = math.nan
    ring_r: float = math.nan
    ring_theta: float = math.nan
    ring_found: bool = False
    E_init: float = math.nan
    etaE_bands: tuple[float, float] = (math.nan, math.nan)
    d_reference: float = math.nan
    d_reference_bands: tuple[float, float] = (math.nan, math.nan)
    converged: bool = False
    iterations: int = 0
    grad_norm: float = math.nan
    wall_time: float = 0.0
    reason: str = ""
    grid: dict = field(default_factory=dict)

    def csv_row(self) -> list[str]:
        vals = [self.xi, self.eta, self.lam, self.E_total, self.etaE, self.E_elastic, self.E_f,
                self.E_g, self.E_upper_hemi, self.E_lower_hemi, self.sym_ratio, self.ring_r,
                self.ring_theta]
        return [_fmt(v) for v in vals] + [self.status, self.init]

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        """Inverse of :meth:`to_dict`; nulls become NaN."""
        d = dict(d)
        for k, v in d.items():
            if v is None and k not in ("grid", "reason"):
                d[k] = math.nan
        for k in ("etaE_bands", "d_reference_bands"):
            if k in d:
                d[k] = tuple(math.nan if v is None else v for v in d[k])
        return cls(**d)

    def to_dict(self) -> dict:
        """JSON-ready dict; non-finite floats are written as null."""
        d = asdict(self)
        d["etaE_bands"] = [_finite_or_none(v) for v in self.etaE_bands]
        d["d_reference_bands"] = [_finite_or_none(v) for v in self.d_reference_bands]
        return {k: _finite_or_none(v) if isinstance(v, float) else v for k, v in d.items()}


def _finite_or_none(x):
    return x if math.isfinite(x) else None


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# reference quadratures


def d_lambda_quadrature(lam: float, lo: float = 0.0, hi: float = math.pi, n: int = 16,
                        grid: ProfileGrid | None = None) -> float:
    """2 pi int_lo^hi D_lambda(Q_b(theta)) sin(theta) dtheta by Gauss-Legendre per hemisphere."""
    if not 0.0 <= lo <= hi <= math.pi:
        raise InvalidInput("need 0 <= lo <= hi <= pi")
    x, w = np.polynomial.legendre.leggauss(n)
    total = 0.0
    for a, b in ((lo, min(hi, 0.5 * math.pi)), (max(lo, 0.5 * math.pi), hi)):
        if b <= a:
            continue
        th = 0.5 * (b - a) * x + 0.5 * (b + a)
        if math.isinf(lam):
            d = d_infinity(th)
        else:
            # D_lambda(Q_b(theta)) = D_lambda(Q_b(pi - theta)) by the reflection symmetry
            d = np.array([_d_lambda_cached(lam, float(min(t, math.pi - t)), grid) for t in th])
        total += 0.5 * (b - a) * float(np.dot(w, d * np.sin(th)))
    return 2.0 * math.pi * total


_D_CACHE: dict[tuple, float] = {}


def _d_lambda_cached(lam: float, theta: float, grid: ProfileGrid | None) -> float:
    g = grid or ProfileGrid()
    key = (lam, round(theta, 15), g.L, g.N)
    if key not in _D_CACHE:
        _D_CACHE[key] = minimize_profile(boundary_tensor(theta), lam, g).energy
    return _D_CACHE[key]


def oriented_quadrature(n: int = 64) -> float:
    """int_{S^2} kappa (1 - cos theta) dH^2 by Gauss-Legendre (exact value 4 pi kappa)."""
    x, w = np.polynomial.legendre.leggauss(n)
    th = 0.5 * math.pi * (x + 1.0)
    return 2.0 * math.pi * 0.5 * math.pi * float(np.dot(w, KAPPA * (1 - np.cos(th)) * np.sin(th)))


# ---------------------------------------------------------------------------
# single point


def grid_for(params: ModelParams, preset: str = "desk", n_theta: int | None = None) -> AxiGrid:
    cfg = PRESETS[preset]
    nt = n_theta or default_n_theta(params.eta, per_eta=cfg["theta_per_eta"])
    return AxiGrid.build(params, nt)


def initial_field(name: str, grid: AxiGrid, params: ModelParams) -> AxiField:
    if name == "trial":
        return build_saturn_trial(params, grid).field
    if name == "layer":
        return layer_field(grid, params)
    if name == "dipole":
        return dipole_field(grid, params)
    raise InvalidInput(f"unknown initialization {name!r}")


def _noisy(fld: AxiField, amplitude: float, rng: np.random.Generator) -> AxiField:
    out = fld.copy()
    if amplitude > 0:
        out.values[1:-1] += amplitude * rng.standard_normal(out.values[1:-1].shape)
    return out


def run_point(xi: float, eta: float, inits: Sequence[str] = INITS, *, preset: str = "desk",
              seed: int = 0, noise: float = 1e-3, n_theta: int | None = None,
              out_dir: Path | None = None, with_reference: bool = True,
              solver: dict | None = None) -> list[RunRecord]:
    """Relax every initialization at one parameter point; one record per initialization.

    ``solver`` overrides the preset's rtol, max_iter and multilevel entries.
    """
    params = ModelParams(xi, eta)
    cfg = {**PRESETS[preset], **(solver or {})}
    opts = SolverOptions(rtol=cfg["rtol"], max_iter=cfg["max_iter"], multilevel=cfg["multilevel"])
    try:
        grid = grid_for(params, preset, n_theta)
        grid.check(params)
        if grid.nt > MAX_NT or grid.nr > MAX_NR:
            raise InvalidInput(f"grid {grid.nr}x{grid.nt} exceeds the {MAX_NR}x{MAX_NT} budget")
    except InvalidInput as err:
        return [RunRecord(xi, eta, params.lam, name, "failed", reason=str(err)) for name in inits]
    ref = bands_ref = (math.nan, math.nan)
    d_ref = math.nan
    if with_reference:
        bands_ref = (d_lambda_quadrature(params.lam, 0.0, 0.5 * math.pi),
                     d_lambda_quadrature(params.lam, 0.5 * math.pi, math.pi))
        d_ref = sum(bands_ref)
    rng = np.random.default_rng([seed, int(round(xi * 1e9)), int(round(eta * 1e9))])
    records = []
    for name in inits:
        t0 = time.perf_counter()
        try:
            fld0 = initial_field(name, grid, params)
        except InvalidInput as err:
            records.append(RunRecord(xi, eta, params.lam, name, "failed", reason=str(err),
                                     grid=grid.to_dict()))
            continue
        e_init = energy(fld0, params).total
        try:
            fld, b, rec, _ = minimize({name: _noisy(fld0, noise, rng)}, params, opts)
            status = "ok"
            reason = ""
        except ConvergenceError as err:
            records.append(RunRecord(xi, eta, params.lam, name, "not_converged", E_init=e_init,
                                     reason=str(err), grad_norm=err.grad_norm,
                                     wall_time=time.perf_counter() - t0, grid=grid.to_dict()))
            continue
        ring = locate_ring(fld, params)
        bands = (eta * cone_energy(fld, params, 0.0, 0.5 * math.pi, b),
                 eta * cone_energy(fld, params, 0.5 * math.pi, math.pi, b))
        r = RunRecord(xi=xi, eta=eta, lam=params.lam, init=name, status=status,
                      E_total=b.total, etaE=eta * b.total, E_elastic=b.elastic, E_f=b.nematic,
                      E_g=b.field, E_upper_hemi=b.upper, E_lower_hemi=b.lower,
                      sym_ratio=symmetry_ratio(fld, params, b),
                      ring_r=ring.r if ring.found else math.nan,
                      ring_theta=ring.theta if ring.found else math.nan, ring_found=ring.found,
                      E_init=e_init, etaE_bands=bands, d_reference=d_ref,
                      d_reference_bands=bands_ref, converged=rec.converged,
                      iterations=rec.iterations, grad_norm=rec.grad_norm,
                      wall_time=time.perf_counter() - t0, reason=reason, grid=grid.to_dict())
        records.append(r)
        if out_dir is not None:
            write_snapshot(Path(out_dir) / f"field_xi{xi:g}_eta{eta:g}_{name}.csv", fld,
                           {"params": params.to_dict(), "energy": b.to_dict(),
                            "convergence": rec.to_dict()})
    return records


def _run_point_args(args):
    return run_point(*args[0], **args[1])


def run_sweep(spec: SweepSpec, out_root: str | Path | None = None, threads: int | None = None, *,
              run_dir: str | Path | None = None, config: dict | None = None) -> list[RunRecord]:
    """Run every point of ``spec``; failures are recorded, not raised.

    When ``out_root`` is given, a fresh run directory is created under it (or ``run_dir``
    is used as is) and the records, report files and field snapshots are written there,
    together with the sweep spec and the verbatim ``config``.
    """
    if run_dir is None and out_root is not None:
        run_dir = new_run_dir(out_root)
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "spec.json").write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
        if config is not None:
            (run_dir / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n",
                                                 encoding="utf-8")
    jobs = [((xi, eta, spec.inits),
             {"preset": spec.preset, "seed": spec.seed, "noise": spec.noise,
              "n_theta": spec.n_theta, "out_dir": run_dir, "solver": spec.solver}) for xi, eta in spec.points]
    n = _threads(threads)
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_point_args, jobs))
    else:
        results = [_run_point_args(j) for j in jobs]
    records = [r for rs in results for r in rs]
    if run_dir is not None:
        for fmt in ("csv", "json", "svg"):
            report(records, fmt, run_dir)
    return records


def new_run_dir(root: str | Path) -> Path:
    """Create ``root/run-NNNN`` with the first unused index; never reuses a directory."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    k = 1
    while True:
        d = root / f"run-{k:04d}"
        try:
            d.mkdir()
            return d
        except FileExistsError:
            k += 1


def best_per_point(records: Iterable[RunRecord]) -> dict[tuple[float, float], RunRecord]:
    """Lowest-energy successful record at each (xi, eta)."""
    out: dict[tuple[float, float], RunRecord] = {}
    for r in records:
        if r.status != "ok":
            continue
        key = (r.xi, r.eta)
        if key not in out or r.E_total < out[key].E_total:
            out[key] = r
    return out


# ---------------------------------------------------------------------------
# fits


@dataclass
class FitReport:
    n_points: int
    limit: float
    slope_eta: float
    reference: float
    gap: float
    log_slope: float = math.nan
    log_slope_reference: float = 2.0 * math.pi ** 2 / 3.0
    log_intercept: float = math.nan

    def to_dict(self) -> dict:
        return asdict(self)


def fit_scaling(records: Sequence[RunRecord], reference: float | None = None,
                saturn: tuple[Sequence[float], Sequence[float]] | None = None) -> FitReport:
    """Fit eta E = limit + slope * eta over the per-point minimizers.

    ``reference`` defaults to the records' D_lambda quadrature (2 pi kappa when lambda is
    infinite).  ``saturn`` optionally holds ``(eps, excess)`` from trial constructions, whose
    |ln eps| slope is reported beside the 2 pi^2 / 3 prediction.
    """
    best = best_per_point(records)
    if len({k[1] for k in best}) < 3:
        raise InvalidInput("fit_scaling needs at least 3 distinct successful parameter points")
    eta = np.array([k[1] for k in best])
    y = np.array([r.etaE for r in best.values()])
    slope, limit = np.polyfit(eta, y, 1)
    if reference is None:
        lams = {r.lam for r in best.values()}
        refs = [r.d_reference for r in best.values() if math.isfinite(r.d_reference)]
        if lams == {math.inf} or not refs:
            reference = TWO_PI_KAPPA
        else:
            reference = float(np.mean(refs))
    rep = FitReport(n_points=len(best), limit=float(limit), slope_eta=float(slope),
                    reference=reference, gap=float(limit - reference))
    if saturn is not None:
        rep.log_slope, rep.log_intercept = fit_log_law(*saturn)
    return rep


def fit_log_law(eps: Sequence[float], excess: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept of excess energy against |ln eps|."""
    eps = np.asarray(eps, dtype=float)
    if np.unique(eps).size < 3:
        raise InvalidInput("the log-law fit needs at least 3 distinct eps values")
    slope, icpt = np.polyfit(np.abs(np.log(eps)), np.asarray(excess, dtype=float), 1)
    return float(slope), float(icpt)


def saturn_excess(params: ModelParams, grid: AxiGrid) -> float:
    """E(trial) - 2 pi kappa / eta for the Saturn construction on ``grid``."""
    fld = build_saturn_trial(params, grid).field
    return energy(fld, params).total - TWO_PI_KAPPA / params.eta


# ---------------------------------------------------------------------------
# oriented (dipole) comparison


@dataclass
class OrientableReport:
    eta_E_oriented: float
    quadrature_4pi_kappa: float
    stated_constant_8pi_kappa: float
    limit_2pi_kappa: float
    eta_E_minimizer: float
    ratio: float
    separated: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def lines(self) -> list[str]:
        return [
            f"oriented ansatz       eta*E = {self.eta_E_oriented:.6f}",
            f"minimizer             eta*E = {self.eta_E_minimizer:.6f}",
            f"ratio                       = {self.ratio:.4f} (required >= 1.5)",
            f"stated constant  8*pi*kappa = {self.stated_constant_8pi_kappa:.6f}",
            f"quadrature int kappa(1-cos) = {self.quadrature_4pi_kappa:.6f} (4*pi*kappa)",
            f"limit            2*pi*kappa = {self.limit_2pi_kappa:.6f}",
        ]


def orientable_comparison(params: ModelParams, grid: AxiGrid | None = None,
                          eta_E_minimizer: float | None = None, preset: str = "desk") -> OrientableReport:
    """Evaluate the oriented dipole ansatz and set it beside the minimizer and both constants."""
    grid = grid or grid_for(params, preset)
    ansatz = dipole_field(grid, params)
    e_or = params.eta * energy(ansatz, params).total
    if eta_E_minimizer is None:
        cfg = PRESETS[preset]
        inits = {"trial": build_saturn_trial(params, grid).field, "layer": layer_field(grid, params)}
        _, b, _, _ = minimize(inits, params, SolverOptions(rtol=cfg["rtol"], max_iter=cfg["max_iter"],
                                                           multilevel=cfg["multilevel"]))
        eta_E_minimizer = params.eta * b.total
    ratio = e_or / eta_E_minimizer
    return OrientableReport(eta_E_oriented=e_or, quadrature_4pi_kappa=oriented_quadrature(),
                            stated_constant_8pi_kappa=STATED_ORIENTED_CONSTANT,
                            limit_2pi_kappa=TWO_PI_KAPPA, eta_E_minimizer=eta_E_minimizer,
                            ratio=ratio, separated=ratio >= 1.5)


# ---------------------------------------------------------------------------
# reports


FORMATS = ("csv", "json", "svg")


def report(records: Sequence[RunRecord], fmt: str, out_dir: str | Path,
           d_curves: dict[float, tuple[Sequence[float], Sequence[float]]] | None = None) -> list[Path]:
    """Write records as ``records.csv``, ``records.json`` or SVG plots; returns the paths."""
    if fmt not in FORMATS:
        raise InvalidInput(f"unknown format {fmt!r}; supported formats: {', '.join(FORMATS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        p = out / "records.csv"
        p.write_bytes(records_csv(records).encode("utf-8"))
        return [p]
    if fmt == "json":
        p = out / "records.json"
        doc = {"columns": list(CSV_COLUMNS), "records": [r.to_dict() for r in records]}
        p.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
        return [p]
    paths = []
    ok = [r for r in records if r.status == "ok"]
    series = {}
    for r in ok:
        series.setdefault(r.init, []).append((r.xi, r.etaE))
    p = out / "etaE_vs_xi.svg"
    p.write_text(svg_plot(series, "xi", "eta*E", "eta*E against xi"), encoding="utf-8")
    paths.append(p)
    series = {}
    for r in ok:
        if math.isfinite(r.sym_ratio):
            series.setdefault(r.init, []).append((r.xi, r.sym_ratio))
    p = out / "sym_ratio_vs_xi.svg"
    p.write_text(svg_plot(series, "xi", "E+/E-", "symmetry ratio against xi"), encoding="utf-8")
    paths.append(p)
    if d_curves:
        series = {f"lambda={lam:g}": list(zip(th, d)) for lam, (th, d) in d_curves.items()}
        p = out / "d_lambda.svg"
        p.write_text(svg_plot(series, "theta", "D_lambda", "D_lambda(Q_b(theta))"), encoding="utf-8")
        paths.append(p)
    return paths


def read_records(path: str | Path) -> list[RunRecord]:
    """Load records written by ``report(..., "json", ...)``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [RunRecord.from_dict(r) for r in doc["records"]]


def records_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_plot(series: dict[str, list[tuple[float, float]]], xlabel: str, ylabel: str,
             title: str, width: int = 480, height: int = 320) -> str:
    """Minimal static line plot: axes, one polyline per series, labels and a legend."""
    ml, mr, mt, mb = 60, 110, 30, 45
    pts = [p for s in series.values() for p in s]
    if pts:
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - ml - mr, height - mt - mb

    def X(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
             f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
             f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
             f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
             f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
             f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{ylabel}</text>']
    for v, anchor, x, y in ((x0, "middle", X(x0), mt + ph + 16), (x1, "middle", X(x1), mt + ph + 16),
                            (y0, "end", ml - 4, Y(y0) + 4), (y1, "end", ml - 4, Y(y1) + 4)):
        lines.append(f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}" font-size="10">{v:.4g}</text>')
    for k, (name, s) in enumerate(sorted(series.items())):
        c = _COLORS[k % len(_COLORS)]
        s = sorted(s)
        coords = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in s)
        lines.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{coords}"/>')
        ly = mt + 14 * (k + 1)
        lines.append(f'<text x="{ml + pw + 8}" y="{ly}" font-size="11" fill="{c}">{name}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
