"""Equivariant fields on the exterior of the unit ball and their discrete energy.

A field Q(r, theta, phi) = R_phi^T Qbar(r, theta) R_phi is stored through its
cross-section Qbar on a tensor grid in (r, theta).  In these variables

    |grad Q|^2 = |d_r Qbar|^2 + r^-2 |d_theta Qbar|^2 + (r sin theta)^-2 Xi[Qbar]

and the energy is 2 pi times an integral over the half-plane with measure
r^2 sin(theta) dr dtheta.  The discretization is a sum of edge and node terms:

* radial edges:   1/2 |dQ|^2 / dr * rmid^2 * S_j
* angular edges:  1/2 |dQ|^2 / dtheta_e * sin(theta_e) * w_i
* node terms:     1/2 Xi[Q] * w_i * S_j / sin^2(theta_j)
                  + (xi^-2 f + eta^-2 g) * v_i * S_j

where S_j = cos(theta_{j-1/2}) - cos(theta_{j+1/2}) is the exact solid angle of the
theta cell (over 2 pi), w_i and v_i are trapezoid weights for dr and r^2 dr.
The rows r = 1 and r = R_out are Dirichlet data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import json
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from .optim import BlockHessian, ConvergenceError, OptimResult, newton
from .qtensor import (Q_INF, XI_WEIGHTS, InvalidInput, ModelParams, biaxiality,
                      boundary_tensor, field_hessian, field_potential, from_director,
                      nematic_hessian, nematic_potential, norm, reflect_equator)

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

#: coefficient indices kept by the mirror-symmetric (planar director) mode
PLANAR_COMPONENTS = (0, 1, 3)


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class AxiGrid:
    """Tensor grid in (r, theta); theta nodes are cell centres strictly inside (0, pi)."""

    r: np.ndarray
    theta_edges: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        te = np.asarray(self.theta_edges, dtype=float)
        if r.ndim != 1 or r.size < 3 or np.any(np.diff(r) <= 0) or abs(r[0] - 1.0) > 1e-14:
            raise InvalidInput("r nodes must increase from 1 with at least 3 nodes")
        if te.ndim != 1 or te.size < 3 or np.any(np.diff(te) <= 0):
            raise InvalidInput("theta edges must increase")
        if abs(te[0]) > 1e-14 or abs(te[-1] - math.pi) > 1e-12:
            raise InvalidInput("theta edges must span [0, pi]")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta_edges", te)

    @classmethod
    def build(cls, params: ModelParams, n_theta: int | None = None, *,
              r_out_factor: float = 30.0, ratio: float = 1.05,
              h0: float | None = None, layer_factor: float = 2.0,
              theta_fine: float | None = None) -> "AxiGrid":
        """Graded grid: cells of size h0 <= xi/3 on [1, 1 + layer_factor*eta], then geometric.

        ``theta_fine`` switches to theta cells of that size within eta of the equator,
        growing geometrically to the uniform spacing pi/n_theta away from it.
        """
        xi, eta = params.xi, params.eta
        if not (math.isfinite(xi) and math.isfinite(eta)):
            raise InvalidInput("the axisymmetric grid needs finite xi and eta")
        if ratio <= 1.0 or ratio > 1.05:
            raise InvalidInput("growth ratio must lie in (1, 1.05]")
        h0 = xi / 3.0 if h0 is None else h0
        if h0 > xi / 3.0 * (1 + 1e-12):
            raise InvalidInput("finest radial cell must be at most xi/3")
        r_out = 1.0 + r_out_factor * eta
        n_uniform = max(1, math.ceil(layer_factor * eta / h0))
        r = list(1.0 + h0 * np.arange(n_uniform + 1))
        dr = h0
        while r[-1] < r_out:
            dr *= ratio
            r.append(r[-1] + dr)
        r = np.array(r)
        # stretch the graded part so the last node lands on r_out
        k = n_uniform
        r[k:] = r[k] + (r[k:] - r[k]) * (r_out - r[k]) / (r[-1] - r[k])
        if n_theta is None:
            n_theta = default_n_theta(eta)
        if theta_fine is None:
            return cls(r, np.linspace(0.0, math.pi, n_theta + 1))
        return cls(r, graded_theta_edges(math.pi / n_theta, theta_fine, eta, ratio))

    @property
    def theta(self) -> np.ndarray:
        return 0.5 * (self.theta_edges[1:] + self.theta_edges[:-1])

    @property
    def nr(self) -> int:
        return self.r.size

    @property
    def nt(self) -> int:
        return self.theta_edges.size - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nr, self.nt)

    @property
    def r_out(self) -> float:
        return float(self.r[-1])

    @property
    def dr(self) -> np.ndarray:
        return np.diff(self.r)

    @property
    def dtheta(self) -> np.ndarray:
        return np.diff(self.theta_edges)

    @property
    def solid(self) -> np.ndarray:
        """Exact cell integrals of sin(theta)."""
        c = np.cos(self.theta_edges)
        return c[:-1] - c[1:]

    @property
    def w_line(self) -> np.ndarray:
        """Trapezoid weights for dr."""
        d = self.dr
        w = np.zeros(self.nr)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
        return w

    @property
    def w_vol(self) -> np.ndarray:
        """Trapezoid weights for r^2 dr."""
        return self.w_line * self.r ** 2

    def check(self, params: ModelParams) -> None:
        """Reject grids that do not resolve the two length scales."""
        if self.dr.min() > params.xi / 3.0 * (1 + 1e-9):
            raise InvalidInput(f"finest radial cell {self.dr.min():.3g} exceeds xi/3")
        if self.r_out < 1.0 + 30.0 * params.eta * (1 - 1e-12):
            raise InvalidInput(f"R_out = {self.r_out:.4g} is below 1 + 30 eta")

    def coarsen(self) -> "AxiGrid":
        """Every other radial node (ends kept) and every other theta edge."""
        idx = np.arange(0, self.nr, 2)
        if idx[-1] != self.nr - 1:
            idx = np.append(idx, self.nr - 1)
        if self.nt % 2:
            raise InvalidInput("cannot coarsen an odd theta count")
        return AxiGrid(self.r[idx], self.theta_edges[::2])

    def to_dict(self) -> dict:
        return {"nr": self.nr, "nt": self.nt, "r_out": self.r_out,
                "dr_min": float(self.dr.min()), "dr_max": float(self.dr.max())}


def graded_theta_edges(coarse: float, fine: float, band: float, ratio: float = 1.05) -> np.ndarray:
    """Edges symmetric about pi/2: spacing ``fine`` on |theta - pi/2| <= band, then growing."""
    if fine >= coarse:
        n = math.ceil(math.pi / coarse)
        return np.linspace(0.0, math.pi, n + 1)
    n_band = math.ceil(band / fine)
    offs = list(fine * np.arange(n_band + 1))
    d = fine
    while offs[-1] < 0.5 * math.pi:
        d = min(d * ratio, coarse)
        offs.append(offs[-1] + d)
    offs = np.array(offs)
    k = n_band
    # stretch the outer part so the last edge lands on the pole
    offs[k:] = offs[k] + (offs[k:] - offs[k]) * (0.5 * math.pi - offs[k]) / (offs[-1] - offs[k])
    upper = 0.5 * math.pi - offs[::-1]
    return np.concatenate([upper, 0.5 * math.pi + offs[1:]])


def default_n_theta(eta: float, per_eta: float = 8.0 * math.pi, multiple: int = 16) -> int:
    """Theta node count so that the equatorial sector of width 2 eta gets >= 16 cells."""
    n = math.ceil(per_eta / eta / multiple) * multiple
    return max(64, n)


# ---------------------------------------------------------------------------
# fields


@dataclass
class AxiField:
    """Cross-section values (nr, nt, 5) on an AxiGrid; rows 0 and -1 are boundary data."""

    grid: AxiGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (*self.grid.shape, 5):
            raise InvalidInput(f"field shape {self.values.shape} does not match grid {self.grid.shape}")

    @classmethod
    def uniform(cls, grid: AxiGrid, q: np.ndarray = Q_INF) -> "AxiField":
        vals = np.broadcast_to(np.asarray(q, dtype=float), (*grid.shape, 5)).copy()
        f = cls(grid, vals)
        f.apply_boundary()
        return f

    def copy(self) -> "AxiField":
        return AxiField(self.grid, self.values.copy())

    def apply_boundary(self) -> None:
        self.values[0] = boundary_tensor(self.grid.theta)
        self.values[-1] = Q_INF

    def boundary_error(self) -> float:
        e0 = np.max(np.abs(self.values[0] - boundary_tensor(self.grid.theta)))
        e1 = np.max(np.abs(self.values[-1] - Q_INF))
        return float(max(e0, e1))

    def mirrored(self) -> "AxiField":
        """Replace the lower half by the reflection of the upper half."""
        th = self.grid.theta
        if not np.allclose(th, math.pi - th[::-1], atol=1e-13):
            raise InvalidInput("grid is not symmetric about the equator")
        out = self.copy()
        upper = th < 0.5 * math.pi
        lower_idx = np.nonzero(~upper)[0]
        out.values[:, lower_idx] = reflect_equator(self.values[:, self.grid.nt - 1 - lower_idx])
        return out

    def interpolate_to(self, grid: AxiGrid) -> "AxiField":
        """Linear interpolation in (r, theta); boundary rows reset to exact data."""
        th = self.grid.theta
        # pad theta with reflective values at the poles so the new centres lie inside
        th_ext = np.concatenate(([-th[0]], th, [2 * math.pi - th[-1]]))
        v = np.concatenate((self.values[:, :1], self.values, self.values[:, -1:]), axis=1)
        interp = RegularGridInterpolator((self.grid.r, th_ext), v, bounds_error=False,
                                         fill_value=None)
        rr, tt = np.meshgrid(np.clip(grid.r, self.grid.r[0], self.grid.r[-1]), grid.theta,
                             indexing="ij")
        vals = interp(np.stack([rr, tt], axis=-1))
        out = AxiField(grid, vals)
        out.apply_boundary()
        return out


def layer_field(grid: AxiGrid, params: ModelParams) -> AxiField:
    """Straight interpolation from Q_b at r = 1 to Q_inf over a layer of width eta."""
    s = np.clip((grid.r - 1.0) / params.eta, 0.0, 1.0)[:, None, None]
    qb = boundary_tensor(grid.theta)[None]
    out = AxiField(grid, qb + s * (Q_INF - qb))
    out.apply_boundary()
    return out


def dipole_field(grid: AxiGrid, params: ModelParams) -> AxiField:
    """Oriented uniaxial ansatz: on every ray the director follows the heteroclinic to +e3."""
    from .profile1d import geodesic_heteroclinic

    t = (grid.r - 1.0) / params.eta
    vals = np.empty((*grid.shape, 5))
    for j, th in enumerate(grid.theta):
        vals[:, j] = from_director(geodesic_heteroclinic(th, t, target=1))
    out = AxiField(grid, vals)
    out.apply_boundary()
    return out


# ---------------------------------------------------------------------------
# energy


@dataclass
class EnergyBreakdown:
    """Energies of a field; the arrays hold per-theta-node contributions (already x 2 pi)."""

    elastic: float
    nematic: float
    field: float
    upper: float
    lower: float
    node_elastic: np.ndarray = field(repr=False)
    node_nematic: np.ndarray = field(repr=False)
    node_field: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return self.elastic + self.nematic + self.field

    @property
    def node_total(self) -> np.ndarray:
        return self.node_elastic + self.node_nematic + self.node_field

    def to_dict(self) -> dict:
        return {"total": self.total, "elastic": self.elastic, "nematic": self.nematic,
                "field": self.field, "upper": self.upper, "lower": self.lower}


class _Terms:
    """Precomputed geometric weights for a grid."""

    def __init__(self, grid: AxiGrid):
        self.grid = grid
        r = grid.r
        rmid = 0.5 * (r[1:] + r[:-1])
        S = grid.solid
        th = grid.theta
        te = grid.theta_edges[1:-1]
        self.rad = 0.5 * (rmid ** 2 / grid.dr)[:, None] * S[None, :]          # (nr-1, nt)
        self.ang = 0.5 * grid.w_line[:, None] * (np.sin(te) / np.diff(th))[None, :]  # (nr, nt-1)
        self.xi = 0.5 * grid.w_line[:, None] * (S / np.sin(th) ** 2)[None, :]  # (nr, nt)
        self.vol = grid.w_vol[:, None] * S[None, :]                             # (nr, nt)


def _pieces(values: np.ndarray, terms: _Terms, params: ModelParams, with_grad: bool):
    dq_r = np.diff(values, axis=0)
    dq_t = np.diff(values, axis=1)
    e_rad = terms.rad * np.sum(dq_r * dq_r, axis=-1)
    e_ang = terms.ang * np.sum(dq_t * dq_t, axis=-1)
    e_xi = terms.xi * np.einsum("...k,k->...", values * values, XI_WEIGHTS)
    fv, fg = nematic_potential(values, params.cste)
    gv, gg = field_potential(values, params.reg_delta)
    cf = 1.0 / params.xi ** 2
    cg = 1.0 / params.eta ** 2
    e_f = cf * terms.vol * fv
    e_g = cg * terms.vol * gv
    grad = None
    if with_grad:
        grad = (2.0 * terms.xi)[..., None] * values * XI_WEIGHTS
        grad += terms.vol[..., None] * (cf * fg + cg * gg)
        fr = (2.0 * terms.rad)[..., None] * dq_r
        grad[1:] += fr
        grad[:-1] -= fr
        ft = (2.0 * terms.ang)[..., None] * dq_t
        grad[:, 1:] += ft
        grad[:, :-1] -= ft
        grad *= TWO_PI
    return e_rad, e_ang, e_xi, e_f, e_g, grad


def _per_node_elastic(e_rad, e_ang, e_xi) -> np.ndarray:
    """Elastic energy attributed to theta nodes: angular edges split half and half."""
    node = e_xi.sum(axis=0) + e_rad.sum(axis=0)
    a = e_ang.sum(axis=0)
    node[:-1] += 0.5 * a
    node[1:] += 0.5 * a
    return node


def energy(fld: AxiField, params: ModelParams) -> EnergyBreakdown:
    """Discrete energy of an equivariant field with its part and hemisphere split."""
    terms = _Terms(fld.grid)
    e_rad, e_ang, e_xi, e_f, e_g, _ = _pieces(fld.values, terms, params, False)
    node_el = TWO_PI * _per_node_elastic(e_rad, e_ang, e_xi)
    node_f = TWO_PI * e_f.sum(axis=0)
    node_g = TWO_PI * e_g.sum(axis=0)
    node = node_el + node_f + node_g
    upper, lower = _hemispheres(fld.grid, node)
    return EnergyBreakdown(elastic=float(node_el.sum()), nematic=float(node_f.sum()),
                           field=float(node_g.sum()), upper=upper, lower=lower,
                           node_elastic=node_el, node_nematic=node_f, node_field=node_g)


def energy_map(fld: AxiField, params: ModelParams) -> np.ndarray:
    """Energy attributed to each (r, theta) node; edge terms are split between their ends."""
    terms = _Terms(fld.grid)
    e_rad, e_ang, e_xi, e_f, e_g, _ = _pieces(fld.values, terms, params, False)
    out = e_xi + e_f + e_g
    out[:-1] += 0.5 * e_rad
    out[1:] += 0.5 * e_rad
    out[:, :-1] += 0.5 * e_ang
    out[:, 1:] += 0.5 * e_ang
    return TWO_PI * out


def _band_fractions(grid: AxiGrid, lo: float, hi: float) -> np.ndarray:
    """Fraction of each theta cell lying inside [lo, hi]."""
    te = grid.theta_edges
    overlap = np.clip(np.minimum(te[1:], hi) - np.maximum(te[:-1], lo), 0.0, None)
    return overlap / np.diff(te)


def _hemispheres(grid: AxiGrid, node: np.ndarray) -> tuple[float, float]:
    up = _band_fractions(grid, 0.0, 0.5 * math.pi)
    return float(np.dot(up, node)), float(np.dot(1.0 - up, node))


def cone_energy(fld: AxiField, params: ModelParams, theta_lo: float, theta_hi: float,
                breakdown: EnergyBreakdown | None = None) -> float:
    """Energy of the cone theta in [theta_lo, theta_hi] (cells split by overlap)."""
    if not (0.0 <= theta_lo <= theta_hi <= math.pi):
        raise InvalidInput("band must satisfy 0 <= theta_lo <= theta_hi <= pi")
    if theta_hi == theta_lo:
        return 0.0
    b = breakdown or energy(fld, params)
    return float(np.dot(_band_fractions(fld.grid, theta_lo, theta_hi), b.node_total))


def energy_gradient(fld: AxiField, params: ModelParams) -> np.ndarray:
    """Gradient of the total discrete energy; boundary rows are zero."""
    terms = _Terms(fld.grid)
    grad = _pieces(fld.values, terms, params, True)[-1]
    grad[0] = 0.0
    grad[-1] = 0.0
    return grad


def total_energy(fld: AxiField, params: ModelParams) -> float:
    return energy(fld, params).total


def symmetry_ratio(fld: AxiField, params: ModelParams,
                   breakdown: EnergyBreakdown | None = None) -> float:
    """E(upper hemisphere) / E(lower hemisphere); inf when the lower part vanishes."""
    b = breakdown or energy(fld, params)
    if b.lower <= 0.0:
        return math.inf
    return b.upper / b.lower


def ray_lower_bound(fld: AxiField, params: ModelParams) -> float:
    """Integral over the sphere of the 1D energies of the rescaled radial restrictions.

    Per ray this is eta * int 1/2|d_r Q|^2 + xi^-2 f + eta^-2 g dr, i.e. the discrete F_lambda
    in t = (r-1)/eta.  Dropping r^2 >= 1 and the angular terms makes it <= eta * E.
    """
    g = fld.grid
    v = fld.values
    dq = np.diff(v, axis=0)
    rad = 0.5 * np.sum(dq * dq, axis=-1) / g.dr[:, None]
    fv, _ = nematic_potential(v, params.cste)
    gv, _ = field_potential(v, params.reg_delta)
    pot = g.w_line[:, None] * (fv / params.xi ** 2 + gv / params.eta ** 2)
    per_ray = rad.sum(axis=0) + pot.sum(axis=0)
    return float(TWO_PI * params.eta * np.dot(g.solid, per_ray))


# ---------------------------------------------------------------------------
# ring detection


@dataclass(frozen=True)
class RingLocation:
    r: float
    theta: float
    beta_max: float
    found: bool


def locate_ring(fld: AxiField, params: ModelParams | None = None,
                threshold: float = 0.1) -> RingLocation:
    """Interior node of maximal biaxiality (core nodes with |Q| < reg_delta count as 1)."""
    delta = params.reg_delta if params else 1e-8
    inner = fld.values[1:-1]
    beta = biaxiality(inner, delta)
    beta = np.where(np.isnan(beta), 1.0, beta)
    k = int(np.argmax(beta))
    i, j = np.unravel_index(k, beta.shape)
    bmax = float(beta[i, j])
    return RingLocation(r=float(fld.grid.r[i + 1]), theta=float(fld.grid.theta[j]),
                        beta_max=bmax, found=bmax > threshold)


# ---------------------------------------------------------------------------
# minimization


@dataclass
class SolverOptions:
    rtol: float = 1e-6
    max_iter: int = 400
    planar: bool = False
    multilevel: int = 0  # number of coarsening levels solved first

    def to_dict(self) -> dict:
        return {"rtol": self.rtol, "max_iter": self.max_iter, "planar": self.planar,
                "multilevel": self.multilevel}


@dataclass
class ConvergenceRecord:
    init: str
    converged: bool
    iterations: int
    grad_norm: float
    energy: float
    history: list[float] = field(repr=False, default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return {"init": self.init, "converged": self.converged, "iterations": self.iterations,
                "grad_norm": self.grad_norm, "energy": self.energy, "message": self.message}


class EnergyNaNError(FloatingPointError):
    def __init__(self, node: tuple[int, int]):
        super().__init__(f"energy is not finite; first offending node (i_r, i_theta) = {node}")
        self.node = node


class DiscreteProblem:
    """Energy, gradient and Hessian of a grid restricted to the interior unknowns."""

    def __init__(self, grid: AxiGrid, params: ModelParams, planar: bool = False):
        self.grid = grid
        self.params = params
        self.terms = _Terms(grid)
        self.comps = np.array(PLANAR_COMPONENTS if planar else range(5))
        self.nc = self.comps.size
        self.n_inner = (grid.nr - 2) * grid.nt
        self._stiff = self._stiffness()

    def _stiffness(self) -> sp.csc_matrix:
        nr, nt = self.grid.nr - 2, self.grid.nt
        idx = np.arange(nr * nt).reshape(nr, nt)
        rows, cols, vals = [], [], []
        diag = np.zeros((nr, nt))
        # radial edges among interior rows plus the edges touching the boundary rows
        rad = 2.0 * self.terms.rad  # rad[i] couples rows i and i+1 of the full grid
        c = rad[1:-1]
        rows += [idx[:-1].ravel(), idx[1:].ravel()]
        cols += [idx[1:].ravel(), idx[:-1].ravel()]
        vals += [-c.ravel(), -c.ravel()]
        diag += rad[:-1] + rad[1:]
        ang = 2.0 * self.terms.ang[1:-1]
        rows += [idx[:, :-1].ravel(), idx[:, 1:].ravel()]
        cols += [idx[:, 1:].ravel(), idx[:, :-1].ravel()]
        vals += [-ang.ravel(), -ang.ravel()]
        diag[:, :-1] += ang
        diag[:, 1:] += ang
        rows.append(idx.ravel()); cols.append(idx.ravel()); vals.append(diag.ravel())
        lap = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(nr * nt, nr * nt))
        return (TWO_PI * sp.kron(lap, sp.identity(self.nc), format="csc")).tocsc()

    def pack(self, fld: AxiField) -> np.ndarray:
        return fld.values[1:-1][..., self.comps].ravel()

    def unpack(self, x: np.ndarray, template: np.ndarray) -> np.ndarray:
        vals = template.copy()
        vals[1:-1][..., self.comps] = x.reshape(self.grid.nr - 2, self.grid.nt, self.nc)
        return vals

    def objective(self, template: np.ndarray):
        work = template.copy()

        def fun(x: np.ndarray) -> tuple[float, np.ndarray]:
            work[1:-1][..., self.comps] = x.reshape(self.grid.nr - 2, self.grid.nt, self.nc)
            e_rad, e_ang, e_xi, e_f, e_g, grad = _pieces(work, self.terms, self.params, True)
            total = TWO_PI * (e_rad.sum() + e_ang.sum() + e_xi.sum() + e_f.sum() + e_g.sum())
            if not math.isfinite(total):
                bad = ~np.isfinite(e_f + e_g + e_xi)
                node = tuple(int(a) for a in np.argwhere(bad)[0]) if bad.any() else (-1, -1)
                raise EnergyNaNError(node)
            return float(total), grad[1:-1][..., self.comps].ravel()

        return fun

    def hessian(self, x: np.ndarray) -> BlockHessian:
        p = self.params
        q = np.zeros((self.n_inner, 5))
        q[:, self.comps] = x.reshape(-1, self.nc)
        vol = self.terms.vol[1:-1].ravel()
        h = (nematic_hessian(q) / p.xi ** 2 + field_hessian(q, p.reg_delta) / p.eta ** 2)
        h *= vol[:, None, None]
        h += (2.0 * self.terms.xi[1:-1].ravel())[:, None, None] * np.diag(XI_WEIGHTS)
        h *= TWO_PI
        h = h[:, self.comps][:, :, self.comps]
        return BlockHessian(self._stiff, np.ascontiguousarray(h))


def _solve_one(fld: AxiField, params: ModelParams, opts: SolverOptions) -> tuple[np.ndarray, OptimResult]:
    prob = DiscreteProblem(fld.grid, params, planar=opts.planar)
    template = fld.values.copy()
    template[0] = boundary_tensor(fld.grid.theta)
    template[-1] = Q_INF
    if opts.planar:
        template[..., [2, 4]] = 0.0
    res = newton(prob.objective(template), prob.hessian, prob.pack(AxiField(fld.grid, template)),
                 gtol=lambda e: opts.rtol * max(1.0, e), max_iter=opts.max_iter,
                 raise_on_failure=False)
    return prob.unpack(res.x, template), res


def minimize(inits: AxiField | Sequence[AxiField] | dict[str, AxiField], params: ModelParams,
             opts: SolverOptions | None = None) -> tuple[AxiField, EnergyBreakdown, ConvergenceRecord, list[ConvergenceRecord]]:
    """Relax every initialization and return the lowest converged state.

    Returns (field, breakdown, record of the winner, records of all runs).  Raises
    ConvergenceError if no run meets |grad|_inf < rtol * max(1, E); its ``x`` then holds
    the full (nr, nt, 5) values of the lowest-energy unconverged state.
    """
    opts = opts or SolverOptions()
    if isinstance(inits, AxiField):
        inits = {"init": inits}
    elif not isinstance(inits, dict):
        inits = {f"init{k}": f for k, f in enumerate(inits)}
    if not inits:
        raise InvalidInput("no initialization given")
    records: list[ConvergenceRecord] = []
    best = None
    fallback = None  # lowest-energy state of any run, for the error report
    for name, fld0 in inits.items():
        fld0.grid.check(params)
        fld = fld0
        levels = []
        g = fld0.grid
        for _ in range(opts.multilevel):
            try:
                g = g.coarsen()
            except InvalidInput:
                break
            levels.append(g)
        try:
            # coarse-to-fine: relax on coarser grids, prolong, and finish on the target grid
            current = None
            for g in reversed(levels):
                start = (current or fld0).interpolate_to(g)
                vals, _ = _solve_one(start, params, SolverOptions(rtol=1e-4, max_iter=opts.max_iter,
                                                                  planar=opts.planar))
                current = AxiField(g, vals)
            start = current.interpolate_to(fld0.grid) if current is not None else fld
            vals, res = _solve_one(start, params, opts)
        except EnergyNaNError as err:
            records.append(ConvergenceRecord(name, False, 0, math.nan, math.nan, [], str(err)))
            continue
        rec = ConvergenceRecord(name, res.converged, res.iterations, res.grad_norm, res.value,
                                res.history)
        records.append(rec)
        if fallback is None or res.value < fallback[0]:
            fallback = (res.value, vals)
        log.info("init %s: E=%.10g |g|=%.2e iters=%d converged=%s", name, res.value,
                 res.grad_norm, res.iterations, res.converged)
        if res.converged and (best is None or res.value < best[2].energy):
            best = (AxiField(fld0.grid, vals), None, rec)
    if best is None:
        worst = min((r for r in records if math.isfinite(r.energy)), key=lambda r: r.energy,
                    default=None)
        msg = "; ".join(f"{r.init}: |g|={r.grad_norm:.3e} {r.message}" for r in records)
        raise ConvergenceError(f"no initialization converged ({msg})",
                               fallback[1] if fallback else None,
                               worst.energy if worst else math.nan,
                               worst.grad_norm if worst else math.nan,
                               worst.history if worst else [])
    fld, _, rec = best
    return fld, energy(fld, params), rec, records


# ---------------------------------------------------------------------------
# snapshots


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_snapshot(path: str | Path, fld: AxiField, meta: dict | None = None) -> tuple[Path, Path]:
    """CSV ``r,theta,q1..q5`` (one row per node, r-major) plus a JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "theta", "q1", "q2", "q3", "q4", "q5"])
        for i, r in enumerate(fld.grid.r):
            for j, th in enumerate(fld.grid.theta):
                w.writerow([_fmt(r), _fmt(th), *(_fmt(v) for v in fld.values[i, j])])
    side = path.with_suffix(".json")
    doc = {"grid": fld.grid.to_dict(),
           "theta_edges": [float(x) for x in fld.grid.theta_edges],
           **(meta or {})}
    side.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path, side


def read_snapshot(path: str | Path) -> tuple[AxiField, dict]:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    r = np.unique(data[:, 0])
    grid = AxiGrid(r, np.array(meta["theta_edges"]))
    return AxiField(grid, data[:, 2:].reshape(grid.nr, grid.nt, 5)), meta
