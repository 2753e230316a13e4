"""Pointwise Q-tensor algebra in a fixed orthonormal basis of traceless symmetric matrices.

A Q-tensor is stored as the trailing axis of length 5 of a numpy array, holding the
coefficients (q1, ..., q5) in the basis

    B1 = (e1e1 - e2e2)/sqrt2      B2 = (e1e1 + e2e2 - 2 e3e3)/sqrt6
    B3 = (e1e2 + e2e1)/sqrt2      B4 = (e1e3 + e3e1)/sqrt2
    B5 = (e2e3 + e3e2)/sqrt2

Every function here broadcasts over leading axes.  The Frobenius norm of the matrix
equals the Euclidean norm of the coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

SQRT2 = math.sqrt(2.0)
SQRT6 = math.sqrt(6.0)
SQRT_2_3 = math.sqrt(2.0 / 3.0)
SQRT_3_2 = math.sqrt(1.5)

#: rate of the closed-form heteroclinic, 24**(1/4)
KAPPA = 24.0 ** 0.25

#: additive constant making min f = 0 on the uniaxial manifold
F_CONST = 2.0 / 9.0

#: norm floor used by the field potential
REG_DELTA = 1e-8

#: sup of Xi[Q] / |Q - Q_inf|^2 (Xi = 4(q1^2+q3^2) + q4^2 + q5^2 vanishes on span{B2})
XI_CONSTANT = 4.0


def _basis() -> np.ndarray:
    e = np.eye(3)
    out = np.empty((5, 3, 3))
    out[0] = (np.outer(e[0], e[0]) - np.outer(e[1], e[1])) / SQRT2
    out[1] = (np.outer(e[0], e[0]) + np.outer(e[1], e[1]) - 2 * np.outer(e[2], e[2])) / SQRT6
    out[2] = (np.outer(e[0], e[1]) + np.outer(e[1], e[0])) / SQRT2
    out[3] = (np.outer(e[0], e[2]) + np.outer(e[2], e[0])) / SQRT2
    out[4] = (np.outer(e[1], e[2]) + np.outer(e[2], e[1])) / SQRT2
    return out


BASIS = _basis()
BASIS.setflags(write=False)

#: tr(B_i B_j B_k); the Hessian of tr(Q^3) is 6 sum_k q_k TRIPLE[i, j, k]
TRIPLE = np.einsum("iab,jbc,kca->ijk", BASIS, BASIS, BASIS)
TRIPLE.setflags(write=False)

#: Q_inf = e3 e3 - I/3
Q_INF = np.array([0.0, -SQRT_2_3, 0.0, 0.0, 0.0])
Q_INF.setflags(write=False)


class InvalidInput(ValueError):
    """Raised on inputs violating a documented precondition."""


@dataclass(frozen=True)
class ModelParams:
    """Length scales of the problem, in units of the particle radius.

    ``xi`` is the nematic coherence length and ``eta`` the field length; ``lam`` is
    their ratio eta/xi and may be ``math.inf`` when ``xi`` is zero-like (1D use only).
    """

    xi: float
    eta: float
    cste: float = F_CONST
    reg_delta: float = REG_DELTA
    lam: float = field(init=False)

    def __post_init__(self) -> None:
        if not (self.xi > 0 and self.eta > 0):
            raise InvalidInput(f"xi and eta must be positive, got xi={self.xi}, eta={self.eta}")
        if not (0 < self.reg_delta <= 1e-3):
            raise InvalidInput("reg_delta must lie in (0, 1e-3]")
        object.__setattr__(self, "lam", self.eta / self.xi)

    @property
    def eps(self) -> float:
        return self.xi / self.eta

    def to_dict(self) -> dict:
        return {"xi": self.xi, "eta": self.eta, "lambda": self.lam,
                "cste": self.cste, "reg_delta": self.reg_delta}


# ---------------------------------------------------------------------------
# conversions


def to_matrix(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.einsum("...i,ijk->...jk", q, BASIS)


def from_matrix(m: np.ndarray) -> np.ndarray:
    """Coefficients of the traceless symmetric part of ``m``."""
    m = np.asarray(m, dtype=float)
    return np.einsum("...jk,ijk->...i", m, BASIS)


def norm(q: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.square(q), axis=-1))


def check_director(n: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape[-1] != 3:
        raise InvalidInput("a director has 3 components")
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > tol):
        raise InvalidInput("director must be a unit vector")
    return n


def from_director(n: np.ndarray, s: float | np.ndarray = 1.0) -> np.ndarray:
    """Uniaxial tensor s (n n - I/3) for unit ``n``."""
    n = check_director(n)
    return _uniaxial(n, s)


def _uniaxial(n: np.ndarray, s: float | np.ndarray = 1.0) -> np.ndarray:
    n1, n2, n3 = n[..., 0], n[..., 1], n[..., 2]
    q = np.stack([
        (n1 * n1 - n2 * n2) / SQRT2,
        (n1 * n1 + n2 * n2 - 2 * n3 * n3) / SQRT6,
        SQRT2 * n1 * n2,
        SQRT2 * n1 * n3,
        SQRT2 * n2 * n3,
    ], axis=-1)
    return np.asarray(s)[..., None] * q if np.ndim(s) else s * q


def meridian_tensor(psi: np.ndarray) -> np.ndarray:
    """Uniaxial tensor for the director (sin psi, 0, cos psi)."""
    psi = np.asarray(psi, dtype=float)
    n = np.stack([np.sin(psi), np.zeros_like(psi), np.cos(psi)], axis=-1)
    return _uniaxial(n)


# ---------------------------------------------------------------------------
# potentials


def trace_cube(q: np.ndarray) -> np.ndarray:
    q1, q2, q3, q4, q5 = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return (SQRT6 / 2 * q1 * q1 * q2 + 3 * SQRT2 / 4 * q1 * (q4 * q4 - q5 * q5)
            - SQRT6 / 6 * q2 ** 3 + SQRT6 / 2 * q2 * q3 * q3
            - SQRT6 / 4 * q2 * (q4 * q4 + q5 * q5) + 3 * SQRT2 / 2 * q3 * q4 * q5)


def _trace_cube_grad(q: np.ndarray) -> np.ndarray:
    q1, q2, q3, q4, q5 = np.moveaxis(q, -1, 0)
    return np.stack([
        SQRT6 * q1 * q2 + 3 * SQRT2 / 4 * (q4 * q4 - q5 * q5),
        SQRT6 / 4 * (2 * q1 * q1 - 2 * q2 * q2 + 2 * q3 * q3 - q4 * q4 - q5 * q5),
        SQRT6 * q2 * q3 + 3 * SQRT2 / 2 * q4 * q5,
        3 * SQRT2 / 2 * (q1 * q4 + q3 * q5) - SQRT6 / 2 * q2 * q4,
        3 * SQRT2 / 2 * (q3 * q4 - q1 * q5) - SQRT6 / 2 * q2 * q5,
    ], axis=-1)


def nematic_potential(q: np.ndarray, cste: float = F_CONST) -> tuple[np.ndarray, np.ndarray]:
    """f(Q) = -|Q|^2/2 - tr(Q^3) + 3|Q|^4/4 + cste and its gradient in coefficient space.

    The gradient is the derivative along traceless symmetric directions, i.e. the
    projection of -Q - 3Q^2 + 3|Q|^2 Q onto the traceless symmetric matrices.
    """
    q = np.asarray(q, dtype=float)
    n2 = np.sum(q * q, axis=-1)
    value = -0.5 * n2 - trace_cube(q) + 0.75 * n2 * n2 + cste
    grad = (3.0 * n2 - 1.0)[..., None] * q - _trace_cube_grad(q)
    return value, grad


def field_potential(q: np.ndarray, reg_delta: float = REG_DELTA) -> tuple[np.ndarray, np.ndarray]:
    """g(Q) = sqrt(2/3) - Q33/|Q| with |Q| floored at ``reg_delta``.

    Since Q33 = -sqrt(2/3) q2 this is sqrt(2/3) (1 + q2/|Q|).  The gradient at
    exactly Q = 0 is defined as zero.
    """
    q = np.asarray(q, dtype=float)
    nrm = np.maximum(norm(q), reg_delta)
    q2 = q[..., 1]
    value = SQRT_2_3 * (1.0 + q2 / nrm)
    grad = -(SQRT_2_3 * q2 / nrm ** 3)[..., None] * q
    grad[..., 1] += SQRT_2_3 / nrm
    # on the floor the norm is constant, so only the linear part survives
    floored = norm(q) < reg_delta
    if np.any(floored):
        grad[floored] = 0.0
        grad[floored, 1] = SQRT_2_3 / reg_delta
        grad[norm(q) == 0.0] = 0.0
    return value, grad


def nematic_hessian(q: np.ndarray) -> np.ndarray:
    """Hessian of f in coefficient space, shape (..., 5, 5)."""
    q = np.asarray(q, dtype=float)
    n2 = np.sum(q * q, axis=-1)
    eye = np.eye(5)
    t = 6.0 * np.einsum("...k,ijk->...ij", q, TRIPLE)
    return ((3.0 * n2 - 1.0)[..., None, None] * eye + 6.0 * q[..., :, None] * q[..., None, :] - t)


def field_hessian(q: np.ndarray, reg_delta: float = REG_DELTA) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    nrm = np.maximum(norm(q), reg_delta)
    q2 = q[..., 1]
    e2 = np.zeros(5)
    e2[1] = 1.0
    outer_e2q = e2[:, None] * q[..., None, :] + q[..., :, None] * e2[None, :]
    h = (-outer_e2q / nrm[..., None, None] ** 3
         - (q2 / nrm ** 3)[..., None, None] * np.eye(5)
         + (3.0 * q2 / nrm ** 5)[..., None, None] * q[..., :, None] * q[..., None, :])
    h[norm(q) < reg_delta] = 0.0
    return SQRT_2_3 * h


# ---------------------------------------------------------------------------
# geometry


def boundary_tensor(theta: np.ndarray, phi: np.ndarray | float = 0.0) -> np.ndarray:
    """Radial anchoring e_r e_r - I/3."""
    theta = np.asarray(theta, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), theta.shape)
    st = np.sin(theta)
    n = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
    return _uniaxial(n)


def rotate_z(q: np.ndarray, phi: np.ndarray | float) -> np.ndarray:
    """R Q R^t for the rotation R of angle ``phi`` about e3.

    In coefficients (q1, q3) turn by 2 phi, (q4, q5) by phi and q2 is fixed.
    """
    q = np.asarray(q, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c2, s2 = np.cos(2 * phi), np.sin(2 * phi)
    c1, s1 = np.cos(phi), np.sin(phi)
    q1, q2, q3, q4, q5 = np.moveaxis(q, -1, 0)
    return np.stack([c2 * q1 - s2 * q3, q2 + 0 * phi, s2 * q1 + c2 * q3,
                     c1 * q4 - s1 * q5, s1 * q4 + c1 * q5], axis=-1)


def reflect_equator(q: np.ndarray) -> np.ndarray:
    """T Q T with T = diag(1, 1, -1)."""
    out = np.array(q, dtype=float, copy=True)
    out[..., 3:] *= -1.0
    return out


def xi_form(q: np.ndarray) -> np.ndarray:
    """|d/dphi (R Q R^t)|^2, which does not depend on phi."""
    q = np.asarray(q, dtype=float)
    return 4.0 * (q[..., 0] ** 2 + q[..., 2] ** 2) + q[..., 3] ** 2 + q[..., 4] ** 2


XI_WEIGHTS = np.array([4.0, 0.0, 4.0, 1.0, 1.0])


def biaxiality(q: np.ndarray, reg_delta: float = REG_DELTA) -> np.ndarray:
    """1 - 6 tr(Q^3)^2 / |Q|^6; NaN marks a core point with |Q| < reg_delta."""
    q = np.asarray(q, dtype=float)
    n2 = np.sum(q * q, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = 1.0 - 6.0 * trace_cube(q) ** 2 / n2 ** 3
    return np.where(np.sqrt(n2) < reg_delta, np.nan, beta)


def coercivity_ratio(h: float, sample_count: int = 10_000, radius: float = 1.0,
                     samples: np.ndarray | None = None,
                     rng: np.random.Generator | None = None) -> float:
    """Sampled lower estimate of min (f + h g)/|Q - Q_inf|^2.

    Samples are Q_inf + d with |d| <= radius drawn uniformly in the 5-ball, unless
    explicit ``samples`` (absolute tensors) are supplied.
    """
    if h < 0:
        raise InvalidInput("h must be nonnegative")
    if samples is None:
        if sample_count < 10_000:
            raise InvalidInput("need at least 1e4 samples")
        rng = rng if rng is not None else np.random.default_rng(0)
        d = rng.normal(size=(sample_count, 5))
        d *= (radius * rng.random(sample_count) ** 0.2 / norm(d))[:, None]
        samples = Q_INF + d
    dist2 = np.sum((samples - Q_INF) ** 2, axis=-1)
    keep = dist2 >= 1e-20
    s = samples[keep]
    total = nematic_potential(s)[0] + h * field_potential(s)[0]
    return float(np.min(total / dist2[keep]))


# ---------------------------------------------------------------------------
# complex order parameter


def embed_complex(u: np.ndarray | complex) -> np.ndarray:
    """The 3x3 family diag(1/3, -2/3, 1/3) + (u1 (e1e1 - e3e3) + u2 (e1e3 + e3e1))/sqrt6.

    Under this map |grad Q|^2 = |grad u|^2/3 and f depends on |u| only, with its
    minimum at |u| = 1.  That minimum is 13/36, not 0: the family never reaches the
    uniaxial manifold.  Use :func:`embed_director_phase` to fill a disclination core
    with uniaxial data on its boundary.
    """
    u = np.asarray(u, dtype=complex)
    return _complex_family(u, center=np.array([1 / 3, -2 / 3, 1 / 3]), amp=1 / SQRT6)


def embed_director_phase(u: np.ndarray | complex) -> np.ndarray:
    """diag(1/6, -1/3, 1/6) + (u1 (e1e1 - e3e3) + u2 (e1e3 + e3e1))/2.

    For |u| = 1 this is n n - I/3 with n = (sin psi, 0, cos psi) and u = -exp(-2 i psi);
    f equals 3(1 - |u|^2)^2/16 and |grad Q|^2 = |grad u|^2/2.
    """
    u = np.asarray(u, dtype=complex)
    return _complex_family(u, center=np.array([1 / 6, -1 / 3, 1 / 6]), amp=0.5)


def _complex_family(u: np.ndarray, center: np.ndarray, amp: float) -> np.ndarray:
    m = np.zeros(u.shape + (3, 3))
    m[..., 0, 0] = center[0] + amp * u.real
    m[..., 1, 1] = center[1]
    m[..., 2, 2] = center[2] - amp * u.real
    m[..., 0, 2] = m[..., 2, 0] = amp * u.imag
    return from_matrix(m)


def phase_to_u(psi: np.ndarray) -> np.ndarray:
    """Complex parameter of the meridian director at angle ``psi`` from e3."""
    return -np.exp(-2j * np.asarray(psi, dtype=float))
