"""Explicit competitor fields: the finite-lambda interpolated construction and the
three-region Saturn-ring construction with a Ginzburg-Landau core.

Saturn construction, upper half of the cross-section (the lower half is the mirror
image under T = diag(1, 1, -1)); t = (r - 1)/eta and tau = (pi/2 - theta)/eta:

* region 1, tau >= 1: the closed-form heteroclinic n(t, theta) toward +e3;
* region 2, tau < 1 and t >= 2: the director angle Phi+(t) * tau, where Phi+ is the
  heteroclinic angle at theta = pi/2 - eta;
* region 3, tau < 1 and t < 2: the square (s, tau) in [-1, 1]^2 with s = t - 1.  On
  the annulus 1/2 <= max(|s|, |tau|) <= 1 the director angle is interpolated along
  rays between the boundary phase Psi_eta and its eta -> 0 limit Psi_0; the inner
  square [-1/2, 1/2]^2 carries u = -exp(-2i psi) relaxed by a Ginzburg-Landau solve.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
import math
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from .axisym import AxiField, AxiGrid, energy_map
from .optim import BlockHessian, ConvergenceError, newton
from .profile1d import ProfileGrid, heteroclinic_angle, minimize_profile
from .qtensor import (Q_INF, InvalidInput, ModelParams, boundary_tensor,
                      embed_director_phase, meridian_tensor, phase_to_u)

HALF_PI = 0.5 * math.pi

#: Ginzburg-Landau weights (elastic, potential) matching the Q-tensor energy under
#: embed_director_phase: 1/2|grad Q|^2 = 1/4|grad u|^2 and f = 3/16 (1 - |u|^2)^2
LDG_CORE_WEIGHTS = (0.25, 3.0 / 16.0)

#: weights of the model functional int 1/6|grad u|^2 + 1/(2 eps^2) (1 - |u|^2)^2
GL_WEIGHTS = (1.0 / 6.0, 0.5)


# ---------------------------------------------------------------------------
# Ginzburg-Landau patch


@dataclass
class SquarePatch:
    """Complex field on the uniform grid of the square [-half, half]^2, indexed [i_s, i_tau]."""

    u: np.ndarray
    eps: float
    half: float = 0.5
    weights: tuple[float, float] = GL_WEIGHTS
    energy: float = math.nan
    residual: float = math.nan

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=complex)
        n = self.u.shape[0]
        if self.u.ndim != 2 or self.u.shape[1] != n or n < 5:
            raise InvalidInput("patch values must be a square array with at least 5 nodes per side")
        if not (0.0 < self.eps <= 0.5):
            raise InvalidInput("eps must lie in (0, 0.5]")

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def h(self) -> float:
        return 2.0 * self.half / (self.n - 1)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(-self.half, self.half, self.n)

    @property
    def tau(self) -> np.ndarray:
        return self.s

    def boundary_mask(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        m[0] = m[-1] = True
        m[:, 0] = m[:, -1] = True
        return m

    def boundary_loop(self) -> np.ndarray:
        """Boundary values counter-clockwise in the (s, tau) plane starting at (half, -half)."""
        u = self.u
        return np.concatenate([u[-1, :-1], u[::-1, -1][:-1], u[0, ::-1][:-1], u[:, 0][:-1]])

    def boundary_degree(self) -> int:
        return _winding(self.boundary_loop())

    def cell_windings(self) -> np.ndarray:
        """Winding number of u around every grid cell."""
        u = self.u
        a, b, c, d = u[:-1, :-1], u[1:, :-1], u[1:, 1:], u[:-1, 1:]
        tot = (np.angle(b / a) + np.angle(c / b) + np.angle(d / c) + np.angle(a / d))
        with np.errstate(invalid="ignore"):
            w = np.rint(tot / (2.0 * math.pi))
        return np.nan_to_num(w).astype(int)

    def zero_count(self) -> int:
        return int(np.count_nonzero(self.cell_windings()))

    def interpolator(self) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        re = RegularGridInterpolator((self.s, self.tau), self.u.real)
        im = RegularGridInterpolator((self.s, self.tau), self.u.imag)

        def ev(s: np.ndarray, tau: np.ndarray) -> np.ndarray:
            pts = np.stack([np.clip(s, -self.half, self.half), np.clip(tau, -self.half, self.half)],
                           axis=-1)
            return re(pts) + 1j * im(pts)

        return ev


def _winding(loop: np.ndarray) -> int:
    d = np.angle(np.roll(loop, -1) / loop)
    return int(round(float(np.sum(d)) / (2.0 * math.pi)))


def patch_from_boundary(n: int, eps: float, boundary: Callable[[np.ndarray, np.ndarray], np.ndarray],
                        half: float = 0.5, weights: tuple[float, float] = GL_WEIGHTS) -> SquarePatch:
    """Patch with the given boundary values and the discrete harmonic extension inside."""
    if n % 2 == 0:
        n += 1
    x = np.linspace(-half, half, n)
    S, T = np.meshgrid(x, x, indexing="ij")
    u = np.zeros((n, n), dtype=complex)
    mask = np.zeros((n, n), dtype=bool)
    mask[0] = mask[-1] = True
    mask[:, 0] = mask[:, -1] = True
    u[mask] = boundary(S[mask], T[mask])
    # harmonic extension: 5-point Laplacian with Dirichlet data
    m = n - 2
    lap1 = sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1])
    lap = (sp.kron(lap1, sp.identity(m)) + sp.kron(sp.identity(m), lap1)).tocsc()
    rhs = np.zeros((m, m), dtype=complex)
    rhs[0, :] += u[0, 1:-1]
    rhs[-1, :] += u[-1, 1:-1]
    rhs[:, 0] += u[1:-1, 0]
    rhs[:, -1] += u[1:-1, -1]
    sol = spla.spsolve(lap, rhs.real.ravel()) + 1j * spla.spsolve(lap, rhs.imag.ravel())
    u[1:-1, 1:-1] = sol.reshape(m, m)
    return SquarePatch(u, eps, half, weights)


def canonical_patch(n: int, eps: float, half: float = 0.5, degree: int = -1) -> SquarePatch:
    """Boundary data (z/|z|)^degree; degree -1 is conj(z)/|z|."""
    def bnd(s, tau):
        z = s + 1j * tau
        return (z / np.abs(z)) ** degree
    return patch_from_boundary(n, eps, bnd, half)


def gl_energy(patch: SquarePatch, u: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Discrete int a|grad u|^2 + b/eps^2 (1 - |u|^2)^2 and its gradient (complex-packed)."""
    u = patch.u if u is None else u
    a, b = patch.weights
    n, h = patch.n, patch.h
    c = b / patch.eps ** 2
    w = np.full(n, 1.0)
    w[0] = w[-1] = 0.5
    W = np.outer(w, w) * h * h
    ds = np.diff(u, axis=0)           # edges along s, weighted by tau-trapezoid
    dt = np.diff(u, axis=1)
    es = a * w[None, :] * np.abs(ds) ** 2
    et = a * w[:, None] * np.abs(dt) ** 2
    rho = np.abs(u) ** 2
    ep = c * W * (1.0 - rho) ** 2
    e = float(es.sum() + et.sum() + ep.sum())
    g = -4.0 * c * W * (1.0 - rho) * u
    gs = 2.0 * a * w[None, :] * ds
    gt = 2.0 * a * w[:, None] * dt
    g[1:] += gs
    g[:-1] -= gs
    g[:, 1:] += gt
    g[:, :-1] -= gt
    return e, g


def gl_core_minimize(patch: SquarePatch, *, tol: float = 1e-8, max_iter: int = 200) -> SquarePatch:
    """Minimize the discrete Ginzburg-Landau energy with the patch boundary values fixed.

    Convergence means |grad|_inf < tol * max(1, E) over the interior real unknowns.
    """
    n = patch.n
    m = n - 2
    a, b = patch.weights
    c = b / patch.eps ** 2
    h = patch.h
    work = patch.u.copy()

    def pack(u):
        return np.stack([u[1:-1, 1:-1].real, u[1:-1, 1:-1].imag], axis=-1).ravel()

    def fun(x):
        v = x.reshape(m, m, 2)
        work[1:-1, 1:-1] = v[..., 0] + 1j * v[..., 1]
        e, g = gl_energy(patch, work)
        gi = g[1:-1, 1:-1]
        return e, np.stack([gi.real, gi.imag], axis=-1).ravel()

    # interior edges all have weight 1; each interior node touches 4 edges
    lap1 = sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1])
    lap = sp.kron(lap1, sp.identity(m)) + sp.kron(sp.identity(m), lap1)
    stiff = (2.0 * a * sp.kron(lap, sp.identity(2))).tocsc()

    def hess(x):
        v = x.reshape(-1, 2)
        rho = np.sum(v * v, axis=1)
        blk = (-4.0 * (1.0 - rho))[:, None, None] * np.eye(2) + 8.0 * v[:, :, None] * v[:, None, :]
        return BlockHessian(stiff, c * h * h * blk)

    res = newton(fun, hess, pack(patch.u), gtol=lambda e: tol * max(1.0, e), max_iter=max_iter,
                 raise_on_failure=False)
    if not res.converged:
        raise ConvergenceError(f"Ginzburg-Landau solve did not converge (|grad|={res.grad_norm:.3e})",
                               res.x, res.value, res.grad_norm, res.history)
    v = res.x.reshape(m, m, 2)
    u = patch.u.copy()
    u[1:-1, 1:-1] = v[..., 0] + 1j * v[..., 1]
    return replace(patch, u=u, energy=res.value, residual=res.grad_norm)


def write_patch(path: str | Path, patch: SquarePatch) -> Path:
    """CSV ``s,tau,u1,u2`` with s varying slowest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "tau", "u1", "u2"])
        for i, s in enumerate(patch.s):
            for j, t in enumerate(patch.tau):
                z = patch.u[i, j]
                w.writerow([format(s, ".17g"), format(t, ".17g"), format(z.real, ".17g"),
                            format(z.imag, ".17g")])
    return path


def read_patch(path: str | Path, eps: float, weights: tuple[float, float] = GL_WEIGHTS) -> SquarePatch:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = int(round(math.sqrt(data.shape[0])))
    u = (data[:, 2] + 1j * data[:, 3]).reshape(n, n)
    return SquarePatch(u, eps, float(data[:, 0].max()), weights)


# ---------------------------------------------------------------------------
# trial settings and results


@dataclass(frozen=True)
class TrialSpec:
    mode: str
    params: ModelParams
    h: float = math.pi / 8
    eps_mollify: float = math.pi / 64
    cap_cells: int = 1

    def __post_init__(self) -> None:
        if self.mode not in ("finite-lambda", "saturn"):
            raise InvalidInput("mode must be 'finite-lambda' or 'saturn'")
        if self.mode == "finite-lambda":
            if not (0.0 < self.h <= math.pi / 4 + 1e-15):
                raise InvalidInput("h must lie in (0, pi/4]")
            if not (0.0 < self.eps_mollify < 0.5 * self.h):
                raise InvalidInput("eps_mollify must lie in (0, h/2)")
            if self.cap_cells < 1:
                raise InvalidInput("at least one cap cell is excluded at each pole")


@dataclass
class TrialBuild:
    field: AxiField
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# finite lambda


def _bump_cdf() -> Callable[[np.ndarray], np.ndarray]:
    x = np.linspace(-1.0, 1.0, 4001)
    with np.errstate(divide="ignore", over="ignore"):
        phi = np.where(np.abs(x) < 1, np.exp(-1.0 / np.clip(1.0 - x * x, 1e-300, None)), 0.0)
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (phi[1:] + phi[:-1]) * np.diff(x))))
    cdf /= cdf[-1]
    return lambda z: np.interp(z, x, cdf, left=0.0, right=1.0)


_BUMP_CDF = _bump_cdf()


def mollified_weights(theta: np.ndarray, edges: np.ndarray, eps: float) -> np.ndarray:
    """Weights (len(theta), len(edges)-1) of the cell indicators convolved with a bump of radius eps."""
    theta = np.asarray(theta, dtype=float)[:, None]
    lo = edges[None, :-1]
    hi = edges[None, 1:]
    return _BUMP_CDF((theta - lo) / eps) - _BUMP_CDF((theta - hi) / eps)


def build_finite_lambda_trial(spec: TrialSpec, grid: AxiGrid, *,
                              profile_grid: ProfileGrid | None = None,
                              profiles: Mapping[float, np.ndarray] | None = None,
                              enforce_boundary: bool = False) -> TrialBuild:
    """Piecewise-in-theta optimal profiles, mollified in theta.

    Cells of a uniform partition of [0, pi] with spacing <= h carry the minimizer of
    F_lambda for Q0 = Q_b(theta_i) at their left node; ``cap_cells`` cells at each pole
    carry Q_inf.  With ``enforce_boundary`` the r = 1 row is reset to Q_b, otherwise it
    keeps the construction values (a relaxed competitor).
    """
    if spec.mode != "finite-lambda":
        raise InvalidInput("spec.mode must be 'finite-lambda'")
    p = spec.params
    lam = p.lam
    if not math.isfinite(lam):
        raise InvalidInput("finite-lambda construction needs finite lambda")
    n_cells = math.ceil(math.pi / spec.h - 1e-12)
    edges = np.linspace(0.0, math.pi, n_cells + 1)
    active = list(range(spec.cap_cells, n_cells - spec.cap_cells))
    cap_angle = edges[spec.cap_cells] if active else HALF_PI
    if active and spec.eps_mollify >= cap_angle:
        raise InvalidInput("mollifier wider than the polar caps")
    pg = profile_grid or ProfileGrid()
    t = (grid.r - 1.0) / p.eta
    vals = np.broadcast_to(Q_INF, (*grid.shape, 5)).copy()
    weights = mollified_weights(grid.theta, edges, spec.eps_mollify)
    d_values = {}
    for k in active:
        th = float(edges[k])
        if profiles is not None and th in profiles:
            prof = np.asarray(profiles[th])
        else:
            res = minimize_profile(boundary_tensor(th), lam, pg)
            prof = res.values
            d_values[th] = res.energy
        q = np.empty((grid.nr, 5))
        for c in range(5):
            q[:, c] = np.interp(t, pg.t, prof[:, c], right=Q_INF[c])
        vals += weights[:, k][None, :, None] * (q[:, None, :] - Q_INF)
    vals[-1] = Q_INF
    if enforce_boundary:
        vals[0] = boundary_tensor(grid.theta)
    cap_measure = 2.0 * math.pi * 2.0 * (1.0 - math.cos(cap_angle))
    info = {"mode": spec.mode, "h": spec.h, "h_effective": math.pi / n_cells,
            "eps_mollify": spec.eps_mollify, "n_cells": n_cells, "active_cells": len(active),
            "cap_angle": cap_angle, "cap_measure": cap_measure,
            "enforce_boundary": enforce_boundary,
            "partition_nodes": [float(edges[k]) for k in active],
            "d_lambda_nodes": {format(k, ".17g"): v for k, v in d_values.items()}}
    return TrialBuild(AxiField(grid, vals), info)


# ---------------------------------------------------------------------------
# Saturn construction


def _phase_on_square(a: np.ndarray, b: np.ndarray, eta: float) -> np.ndarray:
    """Boundary director angle on the unit square of the (s, tau) plane.

    Edges: top tau = 1 carries Phi+(s+1); left s = -1 the surface angle pi/2 - eta tau;
    bottom the reflection pi - Phi+(s+1); right s = 1 the region-2 angle
    tau Phi+(2) above the equator and pi - |tau| Phi+(2) below it.  ``eta = 0`` gives
    the limit phase Psi_0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    th = HALF_PI - eta

    def phi(t):
        return heteroclinic_angle(th, t)

    phi2 = float(phi(2.0))
    out = np.empty(np.broadcast(a, b).shape)
    vertical = np.abs(a) >= np.abs(b)
    right = vertical & (a > 0)
    left = vertical & (a <= 0)
    top = ~vertical & (b > 0)
    bottom = ~vertical & (b <= 0)
    out[right] = np.where(b[right] >= 0, b[right] * phi2, math.pi - np.abs(b[right]) * phi2)
    out[left] = HALF_PI - eta * b[left]
    out[top] = phi(a[top] + 1.0)
    out[bottom] = math.pi - phi(a[bottom] + 1.0)
    return out


def saturn_core_patch(params: ModelParams, n: int | None = None,
                      weights: tuple[float, float] = LDG_CORE_WEIGHTS) -> SquarePatch:
    """Relaxed Ginzburg-Landau core on [-1/2, 1/2]^2 with boundary u = -exp(-2i Psi_0)."""
    eps = params.xi / params.eta
    if n is None:
        hp = min(eps / 4.0, 1.0 / 32.0)
        n = 2 * math.ceil(0.5 / hp) + 1

    def bnd(s, tau):
        # the inner square boundary maps to the unit square along rays
        return phase_to_u(_phase_on_square(2.0 * s, 2.0 * tau, 0.0))

    patch = patch_from_boundary(n, eps, bnd, 0.5, weights)
    return gl_core_minimize(patch)


def saturn_tensor(params: ModelParams, r: np.ndarray, theta: np.ndarray,
                  core: SquarePatch | None = None) -> np.ndarray:
    """Construction values at points with theta <= pi/2 (upper half)."""
    eta = params.eta
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta > HALF_PI + 1e-15):
        raise InvalidInput("saturn_tensor evaluates the upper half; use reflection below")
    t = (r - 1.0) / eta
    tau = (HALF_PI - theta) / eta
    s = t - 1.0
    out = np.empty(np.broadcast(r, theta).shape + (5,))
    t, tau, s, theta = np.broadcast_arrays(t, tau, s, theta)
    reg1 = tau >= 1.0
    reg2 = ~reg1 & (t >= 2.0)
    reg3 = ~reg1 & ~reg2
    out[reg1] = meridian_tensor(heteroclinic_angle(theta[reg1], t[reg1]))
    out[reg2] = meridian_tensor(heteroclinic_angle(HALF_PI - eta, t[reg2]) * tau[reg2])
    m = np.maximum(np.abs(s), np.abs(tau))
    ann = reg3 & (m > 0.5)
    inner = reg3 & ~ann
    if np.any(ann):
        a = s[ann] / m[ann]
        b = tau[ann] / m[ann]
        lam = 2.0 * m[ann] - 1.0
        psi = lam * _phase_on_square(a, b, eta) + (1.0 - lam) * _phase_on_square(a, b, 0.0)
        out[ann] = meridian_tensor(psi)
    if np.any(inner):
        if core is None:
            core = saturn_core_patch(params)
        out[inner] = embed_director_phase(core.interpolator()(s[inner], tau[inner]))
    return out


def saturn_regions(grid: AxiGrid, params: ModelParams) -> dict[str, np.ndarray]:
    """Boolean (nr, nt) masks of regions 1, 2, 3 and the core square, mirrored below."""
    R, TH = np.meshgrid(grid.r, grid.theta, indexing="ij")
    t = (R - 1.0) / params.eta
    tau = np.abs(HALF_PI - TH) / params.eta
    r1 = tau >= 1.0
    r2 = ~r1 & (t >= 2.0)
    r3 = ~r1 & ~r2
    core = r3 & (np.maximum(np.abs(t - 1.0), tau) <= 0.5)
    return {"region1": r1, "region2": r2, "region3": r3, "core": core}


def build_saturn_trial(params: ModelParams, grid: AxiGrid, *,
                       core: SquarePatch | None = None) -> TrialBuild:
    """Saturn-ring competitor on ``grid`` (which must be symmetric about the equator)."""
    eps = params.xi / params.eta
    if eps > 0.5:
        raise InvalidInput("saturn construction needs eps = xi/eta <= 0.5")
    th = grid.theta
    if not np.allclose(th, math.pi - th[::-1], atol=1e-13):
        raise InvalidInput("grid must be symmetric about the equator")
    n_r = int(np.count_nonzero(grid.r < 1.0 + 2.0 * params.eta + 1e-14)) - 1
    n_t = int(np.count_nonzero(np.abs(grid.theta_edges - HALF_PI) < params.eta + 1e-14)) - 1
    if min(n_r, n_t) < 16:
        raise InvalidInput(f"region 3 unresolved: {n_r} radial and {n_t} angular cells across 2 eta")
    core = core or saturn_core_patch(params)
    upper = th < HALF_PI
    R, TH = np.meshgrid(grid.r, th[upper], indexing="ij")
    vals = np.empty((*grid.shape, 5))
    vals[:, upper] = saturn_tensor(params, R, TH, core)
    fld = AxiField(grid, vals).mirrored()
    fld.apply_boundary()
    info = {"mode": "saturn", "eps": eps, "core_n": core.n, "core_energy": core.energy,
            "core_weights": list(core.weights), "core_degree": core.boundary_degree(),
            "core_zeros": core.zero_count(), "region3_cells": [n_r, n_t]}
    return TrialBuild(fld, info)


def continuity_audit(params: ModelParams, core: SquarePatch | None = None,
                     samples: int = 201) -> dict[str, float]:
    """Largest tensor jump across the region interfaces versus the core interpolation error.

    Every interface except the core boundary matches exactly by construction; on the
    core boundary the piecewise-bilinear core meets the exact phase data, whose
    interpolation error is estimated as 1/8 of the largest second difference.
    """
    eta = params.eta
    core = core or saturn_core_patch(params)
    d = 1e-9
    x = np.linspace(-1.0, 1.0, samples)
    jumps = {}

    def rt(s, tau):
        return 1.0 + eta * (s + 1.0), HALF_PI - eta * tau

    # region 1 / region 3 along tau = 1 (s in [-1, 1]) and region 1 / region 2 (t >= 2)
    r_a, th_a = rt(x, 1.0 + d)
    r_b, th_b = rt(x, 1.0 - d)
    jumps["region1|region3"] = float(np.max(np.abs(saturn_tensor(params, r_a, th_a, core)
                                                   - saturn_tensor(params, r_b, th_b, core))))
    tt = np.linspace(2.0, 10.0, samples)
    r2 = 1.0 + eta * tt
    jumps["region1|region2"] = float(np.max(np.abs(
        saturn_tensor(params, r2, HALF_PI - eta * (1 + d), core)
        - saturn_tensor(params, r2, HALF_PI - eta * (1 - d), core))))
    taus = np.linspace(0.0, 1.0, samples)[1:-1]
    jumps["region2|region3"] = float(np.max(np.abs(
        saturn_tensor(params, 1.0 + eta * (2.0 + d), HALF_PI - eta * taus, core)
        - saturn_tensor(params, 1.0 + eta * (2.0 - d), HALF_PI - eta * taus, core))))
    # core boundary: the four edges of [-1/2, 1/2]^2, upper half
    half = 0.5
    pts = np.concatenate([
        np.stack([np.full(samples, half), np.linspace(0, half, samples)], axis=1),
        np.stack([np.linspace(-half, half, samples), np.full(samples, half)], axis=1),
        np.stack([np.full(samples, -half), np.linspace(0, half, samples)], axis=1)])
    s, tau = pts[:, 0], pts[:, 1]
    outward = 1.0 + d / half
    inward = 1.0 - d / half
    qa = saturn_tensor(params, *rt(s * outward, tau * outward), core)
    qb = saturn_tensor(params, *rt(s * inward, tau * inward), core)
    jumps["annulus|core"] = float(np.max(np.abs(qa - qb)))
    loop = embed_director_phase(core.boundary_loop())
    second = np.abs(np.roll(loop, -1, axis=0) - 2 * loop + np.roll(loop, 1, axis=0))
    jumps["interpolation_error"] = float(np.max(second) / 8.0)
    return jumps


def region_energies(fld: AxiField, params: ModelParams) -> dict[str, float]:
    """Energy attributed to each construction region (both hemispheres)."""
    emap = energy_map(fld, params)
    masks = saturn_regions(fld.grid, params)
    out = {k: float(emap[m].sum()) for k, m in masks.items()}
    out["total"] = float(emap.sum())
    out["annulus"] = out["region3"] - out["core"]
    return out
