"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``[PASS]`` or ``[FAIL]`` line.  Run directly with
``python3 tests/test_acceptance.py`` for the summary alone.
"""

from __future__ import annotations

from functools import lru_cache
import math
import sys

import numpy as np
import pytest

from ldg_colloid.axisym import AxiGrid, DiscreteProblem, AxiField, energy
from ldg_colloid.harness import (MAX_NR, MAX_NT, TWO_PI_KAPPA, SweepSpec, best_per_point, fit_log_law,
                                 grid_for, orientable_comparison, run_sweep)
from ldg_colloid.profile1d import (ProfileGrid, d_infinity, d_lambda_curve, d_lipschitz_probe,
                                   director_field_potential, geodesic_heteroclinic,
                                   heteroclinic_velocity, lipschitz_bound, minimize_profile,
                                   profile_energy)
from ldg_colloid.qtensor import KAPPA, Q_INF, ModelParams, boundary_tensor, field_potential, nematic_potential
from ldg_colloid.trial import build_saturn_trial, canonical_patch, gl_core_minimize

XIS = (0.04, 0.02, 0.01)
SYM_FLOOR = 1e-9  # |ln ratio| below this is solver noise


def _report(num: int, name: str, ok: bool, detail: str, capsys=None) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} ({name}): {detail}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)


@lru_cache(maxsize=None)
def sweep():
    """eta = 5 xi over XIS with the three shipped initializations."""
    return tuple(run_sweep(SweepSpec.ratio_schedule(5.0, XIS, seed=0)))


def _by_point(recs):
    out = {}
    for r in recs:
        out.setdefault(r.xi, {})[r.init] = r
    return out


# ---- criteria ------------------------------------------------------------------


def criterion_1():
    errs = []
    for th in (math.pi / 6, math.pi / 3, math.pi / 2):
        e = minimize_profile(boundary_tensor(th), 1e3, ProfileGrid(L=20 / KAPPA, N=2000)).energy
        errs.append(abs(e - d_infinity(th)) / d_infinity(th))
    return max(errs) <= 0.02, f"max relative error {max(errs):.2e} (tolerance 2e-2)"


def criterion_2():
    t = np.linspace(0.0, 20 / KAPPA, 1000)
    worst = 0.0
    for th in np.linspace(0.05, math.pi - 0.05, 15):
        n = geodesic_heteroclinic(th, t)
        nd = heteroclinic_velocity(th, t)
        worst = max(worst, float(np.max(np.abs(np.sum(nd * nd, -1) - director_field_potential(n)))))
    return worst < 1e-8, f"max ||n'|^2 - g(n)| = {worst:.2e} (tolerance 1e-8)"


def criterion_3():
    pts = _by_point(sweep())
    trial = [pts[x]["trial"].E_init * pts[x]["trial"].eta for x in XIS]
    best = best_per_point(sweep())
    mins = [best[(x, 5 * x)].etaE for x in XIS]
    decreasing = all(b < a for a, b in zip(trial, trial[1:]))
    rel = abs(trial[-1] - TWO_PI_KAPPA) / TWO_PI_KAPPA
    below = all(m <= t for m, t in zip(mins, trial))
    sizes = [(r.grid["nr"], r.grid["nt"]) for r in best.values()]
    in_budget = all(nr <= MAX_NR and nt <= MAX_NT for nr, nt in sizes)
    ok = decreasing and rel <= 0.25 and below and in_budget
    return ok, (f"trial eta*E {', '.join(f'{v:.4f}' for v in trial)}; finest off 2*pi*kappa by "
                f"{100 * rel:.1f}% (tolerance 25%); minimizer {', '.join(f'{v:.4f}' for v in mins)}; "
                f"grids {sizes}")


def criterion_4():
    eta = 0.1
    eps = (0.1, 0.05, 0.025)
    excess = []
    for e in eps:
        p = ModelParams(e * eta, eta)
        g = AxiGrid.build(p, theta_fine=p.xi / 3)
        excess.append(energy(build_saturn_trial(p, g).field, p).total - TWO_PI_KAPPA / eta)
    slope, _ = fit_log_law(eps, excess)
    target = 2 * math.pi ** 2 / 3
    rel = abs(slope - target) / target
    return rel <= 0.2, (f"excess {', '.join(f'{v:.3f}' for v in excess)}; |ln eps| slope {slope:.3f} "
                        f"vs {target:.4f} ({100 * rel:.1f}% off, tolerance 20%)")


def criterion_5():
    es = [gl_core_minimize(canonical_patch(161, e)).energy for e in (0.1, 0.05, 0.025)]
    target = math.pi / 3 * math.log(2)
    diffs = [b - a for a, b in zip(es, es[1:])]
    rel = max(abs(d - target) / target for d in diffs)
    return rel <= 0.15, (f"energies {', '.join(f'{v:.4f}' for v in es)}; differences "
                         f"{', '.join(f'{d:.4f}' for d in diffs)} vs {target:.4f} (worst {100 * rel:.1f}%, tolerance 15%)")


def criterion_6():
    recs = sweep()
    best = best_per_point(recs)
    coarse = best[(XIS[0], 5 * XIS[0])]
    fine = best[(XIS[-1], 5 * XIS[-1])]

    def dist(r):
        return max(abs(math.log(r)), SYM_FLOOR)

    in_range = 0.8 <= fine.sym_ratio <= 1.25
    closer = dist(fine.sym_ratio) <= dist(coarse.sym_ratio)
    dip = _by_point(recs)[XIS[-1]]["dipole"]
    relaxed = (dip.status == "ok" and abs(dip.E_total - fine.E_total) <= 1e-6 * fine.E_total
               and abs(dip.sym_ratio - 1.0) <= 1e-2)
    higher = dip.status == "ok" and dip.E_total > fine.E_total
    ok = in_range and closer and (relaxed or higher)
    branch = "relaxed to the symmetric branch" if relaxed else ("higher energy" if higher else "neither")
    return ok, (f"ratio coarsest {coarse.sym_ratio:.12f}, finest {fine.sym_ratio:.12f} "
                f"(noise floor {SYM_FLOOR:g} on |ln ratio|); dipole state {branch} "
                f"(ratio {dip.sym_ratio:.6f}, dE/E {(dip.E_total - fine.E_total) / fine.E_total:.1e})")


def criterion_7():
    best = best_per_point(sweep())
    fine = best[(XIS[-1], 5 * XIS[-1])]
    rels = [abs(b - r) / r for b, r in zip(fine.etaE_bands, fine.d_reference_bands)]
    sum_err = abs(sum(fine.etaE_bands) - fine.etaE) / fine.etaE
    ok = max(rels) <= 0.25 and sum_err <= 1e-10
    return ok, (f"bands {fine.etaE_bands[0]:.4f}, {fine.etaE_bands[1]:.4f} vs quadrature "
                f"{fine.d_reference_bands[0]:.4f}, {fine.d_reference_bands[1]:.4f} "
                f"(worst {100 * max(rels):.1f}%, tolerance 25%); sum error {sum_err:.1e}")


def criterion_8():
    best = best_per_point(sweep())
    p = ModelParams(XIS[-1], 5 * XIS[-1])
    rep = orientable_comparison(p, grid_for(p), eta_E_minimizer=best[(p.xi, p.eta)].etaE)
    lines = rep.lines()
    shows_both = any("8*pi*kappa" in s for s in lines) and any("4*pi*kappa" in s for s in lines)
    ok = rep.ratio >= 1.5 and shows_both
    return ok, (f"oriented {rep.eta_E_oriented:.4f} / minimizer {rep.eta_E_minimizer:.4f} = {rep.ratio:.3f} "
                f"(needs >= 1.5); 8*pi*kappa = {rep.stated_constant_8pi_kappa:.4f} beside "
                f"quadrature {rep.quadrature_4pi_kappa:.4f}")


def _fd_check(fun, x, rng, h=1e-6):
    e, g = fun(x)
    d = rng.normal(size=x.shape)
    fd = (fun(x + h * d)[0] - fun(x - h * d)[0]) / (2 * h)
    an = float(np.sum(g * d))
    return abs(fd - an) / max(1.0, abs(an))


def criterion_9():
    rng = np.random.default_rng(2024)
    worst = {}
    # pointwise potentials: directional derivatives at 100 random tensors
    for name, pot in (("nematic", nematic_potential), ("field", field_potential)):
        worst[name] = max(_fd_check(lambda q: pot(q), Q_INF + 0.5 * rng.normal(size=5), rng)
                          for _ in range(100))
    pg = ProfileGrid(L=10 / KAPPA, N=64)

    def f1(x):
        e, g = profile_energy(x.reshape(pg.N, 5), 3.0, pg.h)
        return e, g.ravel()

    worst["1d"] = max(_fd_check(f1, (Q_INF + 0.4 * rng.normal(size=(pg.N, 5))).ravel(), rng)
                      for _ in range(100))
    p = ModelParams(0.2, 0.3)
    grid = AxiGrid(np.linspace(1.0, 2.0, 9), np.linspace(0, math.pi, 9))
    prob = DiscreteProblem(grid, p)
    w2 = 0.0
    for _ in range(100):
        fld = AxiField(grid, Q_INF + 0.3 * rng.normal(size=(*grid.shape, 5)))
        fld.apply_boundary()
        w2 = max(w2, _fd_check(prob.objective(fld.values), prob.pack(fld), rng, h=1e-5))
    worst["2d"] = w2
    ok = all(v < 1e-6 for v in worst.values())
    return ok, "worst relative error " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (tolerance 1e-6)"


def criterion_10():
    lams = [1, 3, 10, 30, 100]
    vals = [v for _, v in d_lambda_curve(boundary_tensor(math.pi / 2), lams)]
    mono = all(b >= a for a, b in zip(vals, vals[1:]))
    capped = all(v <= KAPPA + 1e-3 for v in vals)
    qa, qb = boundary_tensor(math.pi / 3), boundary_tensor(math.pi / 3 + 0.01)
    probe = d_lipschitz_probe(qa, qb, 10.0)
    bound = lipschitz_bound(qa, qb, 10.0)
    ok = mono and capped and probe < bound
    return ok, (f"D_lambda {', '.join(f'{v:.5f}' for v in vals)} (cap {KAPPA + 1e-3:.5f}); "
                f"Lipschitz probe {probe:.3f} < bound {bound:.3f}")


CRITERIA = {
    1: ("geodesic closed form", criterion_1),
    2: ("equipartition", criterion_2),
    3: ("limit energy", criterion_3),
    4: ("log-law remainder", criterion_4),
    5: ("GL core", criterion_5),
    6: ("symmetry", criterion_6),
    7: ("cone asymptotics", criterion_7),
    8: ("orientable gap", criterion_8),
    9: ("gradient correctness", criterion_9),
    10: ("monotonicity and continuity", criterion_10),
}


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num, capsys):
    name, fn = CRITERIA[num]
    ok, detail = fn()
    _report(num, name, ok, detail, capsys)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, (name, fn) in sorted(CRITERIA.items()):
        ok, detail = fn()
        _report(num, name, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
