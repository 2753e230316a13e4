"""One-dimensional boundary-layer profiles.

For finite lambda the radial transition energy

    F(Q) = int_0^L  1/2 |dQ/dt|^2 + lambda^2 f(Q) + g(Q)  dt,   Q(0) = Q0, Q(L) = Q_inf

is discretized with piecewise-linear elements (exact gradient term) and trapezoid
weights for the potentials, then minimized over the interior nodes.  The value of
the minimum is D_lambda(Q0).  The lambda = infinity problem restricted to uniaxial
tensors has a closed-form minimizer, provided by :func:`geodesic_heteroclinic`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

import scipy.sparse as sp

from .optim import BlockHessian, ConvergenceError, newton
from .qtensor import (KAPPA, Q_INF, SQRT_3_2, InvalidInput, field_hessian,
                      field_potential, meridian_tensor, nematic_hessian,
                      nematic_potential, norm, rotate_z, to_matrix)

DEFAULT_INITS = ("linear", "geodesic", "jump")


@dataclass(frozen=True)
class ProfileGrid:
    """Uniform nodes on [0, L] in the stretched variable t = (r - 1)/eta."""

    L: float = 20.0 / KAPPA
    N: int = 2000

    def __post_init__(self) -> None:
        if self.N < 64:
            raise InvalidInput("a profile grid needs at least 64 nodes")
        if self.L < 10.0 / KAPPA * (1 - 1e-12):
            raise InvalidInput("truncation length must be at least 10/kappa")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.N)

    @property
    def h(self) -> float:
        return self.L / (self.N - 1)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.N, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


@dataclass
class ProfileResult:
    t: np.ndarray
    values: np.ndarray
    energy: float
    grad_norm: float
    lam: float
    init: str = ""
    init_energies: dict[str, float] = field(default_factory=dict)
    iterations: int = 0

    @property
    def d_lambda(self) -> float:
        return self.energy

    @property
    def init_spread(self) -> float:
        vals = list(self.init_energies.values())
        return max(vals) - min(vals) if len(vals) > 1 else 0.0


# ---------------------------------------------------------------------------
# discrete functional


def profile_energy(values: np.ndarray, lam: float, h: float) -> tuple[float, np.ndarray]:
    """Discrete F_lambda of a full nodal profile and its gradient w.r.t. every node."""
    dq = np.diff(values, axis=0)
    w = np.full(values.shape[0], h)
    w[0] = w[-1] = 0.5 * h
    fv, fg = nematic_potential(values)
    gv, gg = field_potential(values)
    energy = 0.5 * np.sum(dq * dq) / h + np.dot(w, lam * lam * fv + gv)
    grad = (lam * lam * fg + gg) * w[:, None]
    grad[:-1] -= dq / h
    grad[1:] += dq / h
    return float(energy), grad


def _stiffness(n_interior: int, h: float) -> sp.csc_matrix:
    lap = sp.diags([-np.ones(n_interior - 1), 2 * np.ones(n_interior), -np.ones(n_interior - 1)],
                   [-1, 0, 1]) / h
    return sp.kron(lap, sp.identity(5), format="csc")


def profile_hessian(interior: np.ndarray, lam: float, h: float,
                    stiffness: sp.spmatrix | None = None) -> BlockHessian:
    """Hessian of the discrete F_lambda over interior nodes (all weights equal h there)."""
    if stiffness is None:
        stiffness = _stiffness(interior.shape[0], h)
    blocks = h * (lam * lam * nematic_hessian(interior) + field_hessian(interior))
    return BlockHessian(stiffness, blocks)


def _continuation(lam: float, start: float = 10.0, factor: float = 3.0) -> list[float]:
    steps = []
    lam_k = start
    while lam_k < lam / factor * 1.5:
        steps.append(lam_k)
        lam_k *= factor
    return steps + [lam]


def _initial_profiles(q0: np.ndarray, grid: ProfileGrid) -> dict[str, np.ndarray]:
    t = grid.t
    out = {}
    ramp = np.clip(t / 2.0, 0.0, 1.0)[:, None]
    out["linear"] = q0 + ramp * (Q_INF - q0)
    out["geodesic"] = _geodesic_guess(q0, t)
    jump = np.where(t[:, None] < 1.0, q0, Q_INF)
    out["jump"] = jump.astype(float)
    return out


def _geodesic_guess(q0: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Uniaxial heteroclinic from the leading eigenvector of q0, plus a decaying remainder."""
    if norm(q0) < 1e-12:
        n0 = np.array([0.0, 0.0, 1.0])
    else:
        w, v = np.linalg.eigh(to_matrix(q0))
        n0 = v[:, np.argmax(w)]
    if n0[2] < 0:
        n0 = -n0
    theta0 = math.acos(min(1.0, max(-1.0, n0[2])))
    phi0 = math.atan2(n0[1], n0[0])
    psi = heteroclinic_angle(theta0, t)
    u = rotate_z(meridian_tensor(psi), phi0)
    return u + np.exp(-KAPPA * t)[:, None] * (q0 - u[0])


def minimize_profile(q0: np.ndarray, lam: float, grid: ProfileGrid | None = None, *,
                     inits: Sequence[str] = DEFAULT_INITS,
                     warm_starts: Iterable[np.ndarray] = (), max_iter: int = 500,
                     rtol: float = 1e-8) -> ProfileResult:
    """Minimize the discrete F_lambda with Q(0) = q0 and Q(L) = Q_inf.

    Every requested initialization is relaxed and the lowest energy is reported.
    Convergence means |grad|_inf < rtol * max(1, energy) on the interior nodes.
    """
    if not (0 < lam < math.inf):
        raise InvalidInput("lambda must be positive and finite; use d_infinity for lambda = inf")
    grid = grid or ProfileGrid()
    q0 = np.asarray(q0, dtype=float)
    h = grid.h
    starts = _initial_profiles(q0, grid)
    starts = {k: starts[k] for k in inits}
    for i, ws in enumerate(warm_starts):
        ws = np.array(ws, dtype=float)
        ws[0] = q0
        ws[-1] = Q_INF
        starts[f"warm{i}"] = ws
    if not starts:
        raise InvalidInput("no initialization requested")

    stiff = _stiffness(grid.N - 2, h)
    best: ProfileResult | None = None
    energies: dict[str, float] = {}
    failures = []
    for name, v0 in starts.items():
        full = v0.copy()
        try:
            x = v0[1:-1].ravel()
            # stiff walls move one cell per step at large lambda; walk lambda up instead
            for lam_k in _continuation(lam):
                def fun_k(x: np.ndarray, lam_k: float = lam_k) -> tuple[float, np.ndarray]:
                    full[1:-1] = x.reshape(-1, 5)
                    e, g = profile_energy(full, lam_k, h)
                    return e, g[1:-1].ravel()

                final = lam_k == lam
                res = newton(fun_k,
                             lambda x, lam_k=lam_k: profile_hessian(x.reshape(-1, 5), lam_k, h, stiff),
                             x, gtol=lambda e: (rtol if final else 1e-5) * max(1.0, e),
                             max_iter=max_iter)
                x = res.x
        except ConvergenceError as err:
            failures.append((name, err))
            continue
        full[1:-1] = res.x.reshape(-1, 5)
        energies[name] = res.value
        if best is None or res.value < best.energy:
            best = ProfileResult(t=grid.t, values=full.copy(), energy=res.value,
                                 grad_norm=res.grad_norm, lam=lam, init=name,
                                 iterations=res.iterations)
    if best is None:
        name, err = min(failures, key=lambda p: p[1].value)
        raise ConvergenceError(f"no initialization converged ({name}: {err})",
                               err.x, err.value, err.grad_norm, err.history)
    best.init_energies = energies
    return best


# ---------------------------------------------------------------------------
# lambda = infinity


def heteroclinic_angle(theta: float | np.ndarray, t: np.ndarray, target: int = 1) -> np.ndarray:
    """Polar angle psi(t) of the closed-form heteroclinic; n = (sin psi, 0, cos psi)."""
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    if target == -1:
        return math.pi - heteroclinic_angle(math.pi - theta, t, 1)
    if target != 1:
        raise InvalidInput("target must be +1 or -1")
    if np.any(theta >= math.pi):
        raise InvalidInput("theta = pi is a stationary point for target +e3; use target=-1")
    with np.errstate(divide="ignore"):
        x = 0.5 * KAPPA * t + np.log(1.0 / np.tan(0.5 * theta))
    # n3 = tanh(x), n1 = sech(x)  =>  psi = 2 arctan(exp(-x))
    return 2.0 * np.arctan(np.exp(-x))


def geodesic_heteroclinic(theta: float | np.ndarray, t: np.ndarray, target: int = 1) -> np.ndarray:
    """Director n(t) = (n1, 0, n3) of the minimizing geodesic starting at polar angle theta.

    n3 = (A - exp(-kappa t))/(A + exp(-kappa t)) with A = (1 + cos theta)/(1 - cos theta).
    """
    psi = heteroclinic_angle(theta, t, target)
    return np.stack([np.sin(psi), np.zeros_like(psi), np.cos(psi)], axis=-1)


def heteroclinic_velocity(theta: float | np.ndarray, t: np.ndarray, target: int = 1) -> np.ndarray:
    """Analytic dn/dt of :func:`geodesic_heteroclinic`."""
    psi = heteroclinic_angle(theta, t, target)
    # dpsi/dt = -(kappa/2) sin psi toward +e3
    dpsi = -0.5 * KAPPA * np.sin(psi) * target
    return np.stack([np.cos(psi) * dpsi, np.zeros_like(psi), -np.sin(psi) * dpsi], axis=-1)


def director_field_potential(n: np.ndarray) -> np.ndarray:
    """g on uniaxial tensors: sqrt(3/2) (1 - n3^2)."""
    return SQRT_3_2 * (1.0 - np.asarray(n)[..., 2] ** 2)


def d_infinity(theta: float | np.ndarray) -> float | np.ndarray:
    """kappa (1 - |cos theta|), the lambda = infinity layer cost."""
    out = KAPPA * (1.0 - np.abs(np.cos(theta)))
    return float(out) if np.ndim(out) == 0 else out


def director_energy(path: np.ndarray, t: np.ndarray) -> float:
    """Discrete int |dn/dt|^2 + g(n) dt of a sampled director path."""
    path = np.asarray(path, dtype=float)
    dt = np.diff(t)
    kin = np.sum(np.sum(np.diff(path, axis=0) ** 2, axis=-1) / dt)
    gv = director_field_potential(path)
    return float(kin + np.sum(0.5 * (gv[1:] + gv[:-1]) * dt))


def meridian_reduce(path: np.ndarray) -> np.ndarray:
    """Map n to (sqrt(1 - n3^2), 0, n3); never increases :func:`director_energy`."""
    path = np.asarray(path, dtype=float)
    n3 = np.clip(path[..., 2], -1.0, 1.0)
    return np.stack([np.sqrt(1.0 - n3 * n3), np.zeros_like(n3), n3], axis=-1)


# ---------------------------------------------------------------------------
# lambda dependence and Lipschitz continuity


def d_lambda_curve(q0: np.ndarray, lambdas: Sequence[float], grid: ProfileGrid | None = None,
                   return_results: bool = False, **kwargs) -> list[tuple[float, float]]:
    """D_lambda(q0) for increasing lambdas (``(lam, ProfileResult)`` pairs with ``return_results``).

    Each solve is warm-started from its neighbours' minimizers in both directions, so
    the returned discrete minima are nondecreasing in lambda.
    """
    lambdas = list(lambdas)
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise InvalidInput("lambdas must be sorted")
    grid = grid or ProfileGrid()
    results: list[ProfileResult] = []
    for lam in lambdas:
        warm = [results[-1].values] if results else []
        results.append(minimize_profile(q0, lam, grid, warm_starts=warm, **kwargs))
    # backward pass: the lambda_i functional is pointwise below lambda_{i+1}
    for i in range(len(results) - 2, -1, -1):
        nxt = results[i + 1]
        if nxt.energy < results[i].energy:
            redo = minimize_profile(q0, lambdas[i], grid, inits=(), warm_starts=[nxt.values], **kwargs)
            if redo.energy < results[i].energy:
                redo.init_energies = {**results[i].init_energies, **redo.init_energies}
                results[i] = redo
    if return_results:
        return list(zip(lambdas, results))
    return [(lam, r.energy) for lam, r in zip(lambdas, results)]


def potential_sup(M: float, lam: float, samples: int = 20_000,
                  rng: np.random.Generator | None = None) -> float:
    """Sampled sup of lambda^2 f + g over the ball |Q| <= M."""
    rng = rng if rng is not None else np.random.default_rng(0)
    d = rng.normal(size=(samples, 5))
    d /= norm(d)[:, None]
    radii = M * np.concatenate([np.ones(samples // 2), rng.random(samples - samples // 2) ** 0.2])
    q = d * radii[:, None]
    vals = lam * lam * nematic_potential(q)[0] + field_potential(q)[0]
    return float(np.max(vals))


def lipschitz_bound(q0a: np.ndarray, q0b: np.ndarray, lam: float) -> float:
    """C^(1/2) with C the sampled sup of the potential on |Q| <= max(|q0a|, |q0b|)."""
    M = float(max(norm(np.asarray(q0a)), norm(np.asarray(q0b))))
    return math.sqrt(potential_sup(M, lam))


def d_lipschitz_probe(q0a: np.ndarray, q0b: np.ndarray, lam: float,
                      grid: ProfileGrid | None = None, **kwargs) -> float:
    """|D(q0a) - D(q0b)| / |q0a - q0b|."""
    q0a = np.asarray(q0a, dtype=float)
    q0b = np.asarray(q0b, dtype=float)
    dist = float(norm(q0a - q0b))
    if dist < 1e-8:
        raise InvalidInput("endpoints closer than 1e-8; the ratio is ill-conditioned")
    grid = grid or ProfileGrid()
    ra = minimize_profile(q0a, lam, grid, **kwargs)
    # solve b warm-started from a, and a again from b, keeping the lower of each
    rb = minimize_profile(q0b, lam, grid, warm_starts=[ra.values], **kwargs)
    ra2 = minimize_profile(q0a, lam, grid, inits=(), warm_starts=[rb.values], **kwargs)
    da = min(ra.energy, ra2.energy)
    return abs(da - rb.energy) / dist


# ---------------------------------------------------------------------------
# persistence


def write_profile(path: str | Path, result: ProfileResult, theta: float | None = None,
                  L: float | None = None) -> tuple[Path, Path]:
    """CSV ``t,q1..q5`` plus a JSON sidecar with the same stem."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "q1", "q2", "q3", "q4", "q5"])
        for t, q in zip(result.t, result.values):
            w.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in q])
    side = path.with_suffix(".json")
    meta = {"theta": theta, "lambda": result.lam, "L": L if L is not None else float(result.t[-1]),
            "N": int(result.t.size), "energy": result.energy}
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path, side


def read_profile(path: str | Path) -> tuple[np.ndarray, np.ndarray, dict]:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    return data[:, 0], data[:, 1:], meta
