"""Descent engines shared by the profile, axisymmetric and Ginzburg-Landau solvers.

Two methods are provided: limited-memory BFGS and a line-search Newton method for
objectives whose Hessian is a constant sparse part plus small per-node blocks.  Both
use backtracking, so accepted iterates never increase the objective.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
import logging
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


class ConvergenceError(RuntimeError):
    """The optimizer stopped before meeting its tolerance.

    ``x`` holds the best iterate found and ``grad_norm`` its gradient infinity-norm.
    """

    def __init__(self, message: str, x: np.ndarray, value: float, grad_norm: float,
                 history: list[float] | None = None):
        super().__init__(message)
        self.x = x
        self.value = value
        self.grad_norm = grad_norm
        self.history = history or []


@dataclass
class OptimResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    grad_norm: float
    iterations: int
    evaluations: int
    converged: bool
    history: list[float] = field(repr=False)


def lbfgs(fun: Objective, x0: np.ndarray, *, gtol: float | Callable[[float], float] = 1e-8,
          max_iter: int = 10_000, memory: int = 12, precond: np.ndarray | None = None,
          armijo: float = 1e-4, max_backtracks: int = 40,
          raise_on_failure: bool = True) -> OptimResult:
    """Minimize ``fun`` from ``x0``.

    ``gtol`` bounds the infinity norm of the gradient at exit; it may be a callable of
    the current objective value (e.g. ``lambda e: 1e-8 * max(1, e)``).  ``precond`` is a
    positive diagonal used as the initial inverse Hessian, rescaled every iteration.
    """
    tol = gtol if callable(gtol) else (lambda _e, _g=gtol: _g)
    x = np.array(x0, dtype=float, copy=True)
    value, grad = fun(x)
    evals = 1
    if not np.isfinite(value):
        raise FloatingPointError("objective is not finite at the starting point")
    pre = np.ones_like(x) if precond is None else np.asarray(precond, dtype=float)
    s_hist: deque[np.ndarray] = deque(maxlen=memory)
    y_hist: deque[np.ndarray] = deque(maxlen=memory)
    rho_hist: deque[float] = deque(maxlen=memory)
    history = [value]
    gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
    gamma = 1.0
    it = 0
    stalled = 0
    while gnorm > tol(value) and it < max_iter:
        it += 1
        # two-loop recursion
        d = -grad
        alphas = []
        for s, y, rho in reversed(list(zip(s_hist, y_hist, rho_hist))):
            a = rho * np.dot(s, d)
            alphas.append(a)
            d -= a * y
        d *= gamma * pre
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho * np.dot(y, d)
            d += (a - b) * s
        slope = float(np.dot(grad, d))
        if slope >= 0.0:
            s_hist.clear(); y_hist.clear(); rho_hist.clear()
            d = -pre * grad
            slope = float(np.dot(grad, d))
        if not s_hist:
            # first step: scale so the predicted decrease is modest
            dn = float(np.max(np.abs(d)))
            step = min(1.0, 0.1 / dn) if dn > 0 else 1.0
        else:
            step = 1.0
        accepted = False
        for _ in range(max_backtracks):
            x_new = x + step * d
            v_new, g_new = fun(x_new)
            evals += 1
            if np.isfinite(v_new) and v_new <= value + armijo * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            stalled += 1
            s_hist.clear(); y_hist.clear(); rho_hist.clear()
            if stalled >= 3:
                break
            continue
        stalled = 0
        s = x_new - x
        y = g_new - grad
        sy = float(np.dot(s, y))
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            gamma = sy / float(np.dot(y, pre * y))
        x, value, grad = x_new, v_new, g_new
        history.append(value)
        gnorm = float(np.max(np.abs(grad)))
    converged = gnorm <= tol(value)
    if not converged:
        msg = (f"L-BFGS stopped after {it} iterations with |grad|_inf={gnorm:.3e} "
               f"> {tol(value):.3e} (energy {value:.12g})")
        if raise_on_failure:
            raise ConvergenceError(msg, x, value, gnorm, history)
        log.warning(msg)
    return OptimResult(x=x, value=value, grad=grad, grad_norm=gnorm, iterations=it,
                       evaluations=evals, converged=converged, history=history)


# ---------------------------------------------------------------------------
# Newton with a block-structured Hessian


@dataclass
class BlockHessian:
    """H = stiffness + blockdiag(blocks): a constant PSD sparse part plus per-node blocks."""

    stiffness: sp.spmatrix
    blocks: np.ndarray  # (nodes, b, b)

    def _blockdiag(self, blocks: np.ndarray) -> sp.csc_matrix:
        n, b, _ = blocks.shape
        return sp.bsr_matrix((blocks, np.arange(n), np.arange(n + 1)), shape=(n * b, n * b)).tocsc()

    def true(self) -> sp.csc_matrix:
        return (self.stiffness + self._blockdiag(self.blocks)).tocsc()

    def convexified(self, floor: float = 0.0) -> sp.csc_matrix:
        w, v = np.linalg.eigh(self.blocks)
        w = np.maximum(w, floor)
        clipped = np.einsum("nij,nj,nkj->nik", v, w, v)
        return (self.stiffness + self._blockdiag(clipped)).tocsc()


def _factor(h: sp.csc_matrix):
    lu = spla.splu(h, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options=dict(SymmetricMode=True))
    negative = int(np.sum(lu.U.diagonal() <= 0.0))
    return lu, negative


def newton(fun: Objective, hess: Callable[[np.ndarray], BlockHessian], x0: np.ndarray, *,
           gtol: float | Callable[[float], float] = 1e-8, max_iter: int = 500,
           armijo: float = 1e-4, max_backtracks: int = 50, roundoff_rtol: float = 1e-11,
           raise_on_failure: bool = True) -> OptimResult:
    """Line-search Newton; falls back to a per-block clipped Hessian when H is not PD.

    Steps satisfy the Armijo condition, except that once the predicted decrease is
    below summation noise a step is also taken if it halves the gradient and raises
    the objective by at most ``roundoff_rtol * max(1, |E|)``.
    """
    tol = gtol if callable(gtol) else (lambda _e, _g=gtol: _g)
    x = np.array(x0, dtype=float, copy=True)
    value, grad = fun(x)
    evals = 1
    if not np.isfinite(value):
        raise FloatingPointError("objective is not finite at the starting point")
    history = [value]
    gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
    it = 0
    while gnorm > tol(value) and it < max_iter:
        it += 1
        hs = hess(x)
        d = None
        try:
            lu, neg = _factor(hs.true())
            if neg == 0:
                d = -lu.solve(grad)
        except RuntimeError:
            pass
        if d is None or not np.all(np.isfinite(d)) or np.dot(d, grad) >= 0:
            lu, _ = _factor(hs.convexified())
            d = -lu.solve(grad)
        slope = float(np.dot(grad, d))
        if not np.isfinite(slope) or slope >= 0:
            d = -grad
            slope = -float(np.dot(grad, grad))
        step = 1.0
        accepted = False
        roundoff = roundoff_rtol * max(1.0, abs(value))
        for _ in range(max_backtracks):
            x_new = x + step * d
            v_new, g_new = fun(x_new)
            evals += 1
            if np.isfinite(v_new):
                if v_new <= value + armijo * step * slope:
                    accepted = True
                    break
                # at rounding level only a gradient reduction can certify progress
                if (v_new <= value + roundoff and
                        np.max(np.abs(g_new)) < 0.5 * gnorm):
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        x, value, grad = x_new, v_new, g_new
        history.append(value)
        gnorm = float(np.max(np.abs(grad)))
        log.debug("newton it %d: E=%.14g |g|=%.3e step=%.3g", it, value, gnorm, step)
    converged = gnorm <= tol(value)
    if not converged:
        msg = (f"Newton stopped after {it} iterations with |grad|_inf={gnorm:.3e} "
               f"> {tol(value):.3e} (energy {value:.12g})")
        if raise_on_failure:
            raise ConvergenceError(msg, x, value, gnorm, history)
        log.warning(msg)
    return OptimResult(x=x, value=value, grad=grad, grad_norm=gnorm, iterations=it,
                       evaluations=evals, converged=converged, history=history)
