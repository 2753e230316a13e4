from __future__ import annotations

import math

import numpy as np
import pytest

from ldg_colloid.axisym import (AxiField, AxiGrid, DiscreteProblem, SolverOptions, cone_energy,
                                default_n_theta, dipole_field, energy, energy_gradient, energy_map,
                                layer_field, locate_ring, minimize, ray_lower_bound, read_snapshot,
                                symmetry_ratio, total_energy, write_snapshot)
from ldg_colloid.optim import ConvergenceError
from ldg_colloid.qtensor import (KAPPA, Q_INF, InvalidInput, ModelParams, boundary_tensor, rotate_z,
                                 xi_form)
from ldg_colloid.trial import build_saturn_trial

P = ModelParams(0.04, 0.2)


@pytest.fixture(scope="module")
def grid():
    return AxiGrid.build(P)


@pytest.fixture(scope="module")
def relaxed(grid):
    trial = build_saturn_trial(P, grid).field
    out = minimize({"trial": trial, "flat": AxiField.uniform(grid)}, P, SolverOptions(multilevel=1))
    return trial, out


def random_field(grid, seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    f = AxiField(grid, Q_INF + scale * rng.normal(size=(*grid.shape, 5)))
    f.apply_boundary()
    return f


# ---- grid ----------------------------------------------------------------------


def test_grid_resolves_both_scales(grid):
    grid.check(P)
    assert grid.dr.min() <= P.xi / 3 * (1 + 1e-12)
    assert grid.r_out >= 1 + 30 * P.eta
    assert np.max(grid.dr[1:] / grid.dr[:-1]) <= 1.05 + 1e-12
    assert grid.nt == 128 and default_n_theta(0.1) == 256 and default_n_theta(0.05) == 512
    assert np.allclose(grid.theta, math.pi - grid.theta[::-1])
    assert grid.solid.sum() == pytest.approx(2.0, rel=1e-14)


def test_grid_rejects_unresolved_parameters(grid):
    with pytest.raises(InvalidInput):
        grid.check(ModelParams(0.01, 0.2))
    with pytest.raises(InvalidInput):
        AxiGrid(np.array([1.0, 0.9, 2.0]), np.linspace(0, math.pi, 5))


# ---- energy --------------------------------------------------------------------


def test_ground_state_has_zero_energy(grid):
    f = AxiField(grid, np.broadcast_to(Q_INF, (*grid.shape, 5)).copy())
    b = energy(f, P)
    # f(Q_inf) is zero only up to roundoff, amplified by 1/xi^2
    assert b.total == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(energy_gradient(f, P), 0.0, atol=1e-9)


def test_one_cell_jump_against_hand_quadrature(grid):
    f = AxiField.uniform(grid)
    b = energy(f, P)
    g = grid
    dr0 = g.r[1] - g.r[0]
    rmid = 0.5 * (g.r[0] + g.r[1])
    qb = boundary_tensor(g.theta)
    # radial jump between row 0 and row 1, summed cell by cell
    rad = sum(0.5 * np.sum((qb[j] - Q_INF) ** 2) / dr0 * rmid ** 2 * (math.cos(g.theta_edges[j]) - math.cos(g.theta_edges[j + 1]))
              for j in range(g.nt))
    w0 = 0.5 * dr0
    ang = 0.0
    for j in range(g.nt - 1):
        te = g.theta_edges[j + 1]
        ang += 0.5 * np.sum((qb[j + 1] - qb[j]) ** 2) / (g.theta[j + 1] - g.theta[j]) * math.sin(te) * w0
    xi = sum(0.5 * xi_form(qb[j]) * w0 * (math.cos(g.theta_edges[j]) - math.cos(g.theta_edges[j + 1]))
             / math.sin(g.theta[j]) ** 2 for j in range(g.nt))
    assert b.elastic == pytest.approx(2 * math.pi * (rad + ang + xi), rel=1e-12)
    # continuum value of the radial part: |Q_b - Q_inf|^2 = 2 sin^2, integral of 2 sin^3 = 8/3
    assert 2 * math.pi * rad == pytest.approx(2 * math.pi * 0.5 * 8 / 3 * rmid ** 2 / dr0, rel=1e-3)


def test_trial_energy_near_limit():
    p = ModelParams(0.02, 0.1)
    g = AxiGrid.build(p)
    e = energy(build_saturn_trial(p, g).field, p).total
    assert p.eta * e == pytest.approx(2 * math.pi * KAPPA, rel=0.25)


def test_breakdown_parts_add_up(grid):
    b = energy(random_field(grid), P)
    assert b.elastic + b.nematic + b.field == pytest.approx(b.total, rel=1e-13)
    assert b.upper + b.lower == pytest.approx(b.total, rel=1e-10)
    assert energy_map(random_field(grid), P).sum() == pytest.approx(b.total, rel=1e-10)


def test_equivariant_phi_derivative_is_xi_form():
    q = Q_INF + np.random.default_rng(3).normal(scale=0.5, size=(20, 5))
    for phi in (0.3, 2.1):
        h = 1e-6
        d = (rotate_z(q, phi + h) - rotate_z(q, phi - h)) / (2 * h)
        assert np.allclose(np.sum(d * d, axis=-1), xi_form(q), rtol=1e-8)


@pytest.mark.parametrize("planar", [False, True])
def test_gradient_central_difference(planar):
    p = ModelParams(0.2, 0.3)
    g = AxiGrid(np.linspace(1.0, 2.0, 9), np.linspace(0, math.pi, 9))
    prob = DiscreteProblem(g, p, planar=planar)
    rng = np.random.default_rng(4)
    worst = 0.0
    for k in range(100):
        f = random_field(g, seed=k)
        fun = prob.objective(f.values)
        x = prob.pack(f)
        e, grad = fun(x)
        d = rng.normal(size=x.size)
        h = 1e-5
        fd = (fun(x + h * d)[0] - fun(x - h * d)[0]) / (2 * h)
        an = float(grad @ d)
        worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    assert worst < 1e-6


def test_hessian_matches_gradient_differences():
    p = ModelParams(0.2, 0.3)
    g = AxiGrid(np.linspace(1.0, 2.0, 7), np.linspace(0, math.pi, 7))
    prob = DiscreteProblem(g, p)
    f = random_field(g, seed=5)
    fun = prob.objective(f.values)
    x = prob.pack(f)
    H = prob.hessian(x).true()
    d = np.random.default_rng(6).normal(size=x.size)
    h = 1e-6
    fd = (fun(x + h * d)[1] - fun(x - h * d)[1]) / (2 * h)
    assert np.allclose(H @ d, fd, rtol=1e-6, atol=1e-6 * np.abs(fd).max())


def test_full_gradient_has_zero_boundary_rows(grid):
    gr = energy_gradient(random_field(grid), P)
    assert np.all(gr[0] == 0) and np.all(gr[-1] == 0)


# ---- partitions and symmetry -------------------------------------------------------


def test_cone_energy_partitions(grid):
    f = random_field(grid, seed=7).mirrored()
    b = energy(f, P)
    assert cone_energy(f, P, 0, math.pi) == pytest.approx(b.total, rel=1e-12)
    up = cone_energy(f, P, 0, math.pi / 2)
    lo = cone_energy(f, P, math.pi / 2, math.pi)
    assert up == pytest.approx(lo, rel=1e-10)
    assert cone_energy(f, P, 1.0, 1.0) == 0.0


def test_symmetry_ratio_examples(grid):
    assert symmetry_ratio(random_field(grid, seed=8).mirrored(), P) == pytest.approx(1.0, abs=1e-12)
    r = symmetry_ratio(dipole_field(grid, P), P)
    assert r > 1.5 or r < 0.67


def test_ray_lower_bound(grid):
    assert ray_lower_bound(AxiField(grid, np.broadcast_to(Q_INF, (*grid.shape, 5)).copy()), P) == pytest.approx(0.0, abs=1e-9)
    trial = build_saturn_trial(P, grid).field
    lb = ray_lower_bound(trial, P)
    assert 0 < lb <= P.eta * total_energy(trial, P)


def test_locate_ring(grid):
    ring = locate_ring(build_saturn_trial(P, grid).field, P)
    assert ring.found and abs(ring.theta - math.pi / 2) < 2 * grid.dtheta.max()
    assert 0 < ring.r - 1 <= 2 * P.eta
    flat = AxiField(grid, np.broadcast_to(Q_INF, (*grid.shape, 5)).copy())
    assert not locate_ring(flat, P).found


# ---- minimization ------------------------------------------------------------


def test_minimize_descends_and_picks_lower(relaxed):
    trial, (fld, b, rec, records) = relaxed
    assert rec.converged and b.total <= total_energy(trial, P)
    assert len(records) == 2
    assert b.total == pytest.approx(min(r.energy for r in records if r.converged))
    assert fld.boundary_error() == 0.0


def test_minimizer_properties(relaxed, grid):
    _, (fld, b, _, _) = relaxed
    assert symmetry_ratio(fld, P, b) == pytest.approx(1.0, abs=1e-3)
    ring = locate_ring(fld, P)
    assert ring.found and ring.r - 1 <= 5 * P.eta and abs(ring.theta - math.pi / 2) < 0.1
    assert P.eta * b.total == pytest.approx(18.4892, abs=2e-3)
    lb = ray_lower_bound(fld, P)
    assert lb <= P.eta * b.total


def test_minimize_iteration_cap_reports_best_so_far(grid):
    with pytest.raises(ConvergenceError) as info:
        minimize(layer_field(grid, P), P, SolverOptions(max_iter=1))
    assert info.value.x.shape == (*grid.shape, 5)


def test_minimize_planar_mode_stays_planar(grid):
    p = ModelParams(0.2, 0.3)
    g = AxiGrid.build(p, 64)
    fld, b, rec, _ = minimize(layer_field(g, p), p, SolverOptions(planar=True))
    assert rec.converged and np.all(fld.values[..., [2, 4]] == 0)


def test_snapshot_round_trip(tmp_path, grid):
    f = random_field(grid, seed=9)
    path, side = write_snapshot(tmp_path / "f.csv", f, {"note": "x"})
    g, meta = read_snapshot(path)
    assert np.array_equal(g.values, f.values) and np.array_equal(g.grid.r, grid.r)
    assert meta["note"] == "x"
    head = path.read_text().splitlines()[0]
    assert head == "r,theta,q1,q2,q3,q4,q5"
