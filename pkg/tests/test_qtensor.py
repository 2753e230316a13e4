from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from ldg_colloid.qtensor import (BASIS, F_CONST, KAPPA, Q_INF, InvalidInput, ModelParams,
                                 biaxiality, boundary_tensor, coercivity_ratio, embed_complex,
                                 embed_director_phase, field_hessian, field_potential, from_director,
                                 from_matrix, meridian_tensor, nematic_hessian, nematic_potential,
                                 norm, phase_to_u, reflect_equator, rotate_z, to_matrix, xi_form)

I3 = np.eye(3)


# ---- matrix oracles, independent of the coefficient basis --------------------


def f_matrix(m):
    a = np.trace(m @ m)
    return -0.5 * a - np.trace(m @ m @ m) + 0.75 * a * a + 2.0 / 9.0


def g_matrix(m):
    return math.sqrt(2.0 / 3.0) - m[2, 2] / math.sqrt(np.trace(m @ m))


def uniaxial(n, s=1.0):
    n = np.asarray(n, float)
    return s * (np.outer(n, n) - I3 / 3)


def random_states(n, seed=0, scale=0.6):
    return np.random.default_rng(seed).normal(scale=scale, size=(n, 5))


# ---- basis and conversions -------------------------------------------------


def test_basis_is_orthonormal_traceless_symmetric():
    gram = np.einsum("ijk,ljk->il", BASIS, BASIS)
    assert np.allclose(gram, np.eye(5), atol=1e-14)
    assert np.allclose(np.trace(BASIS, axis1=1, axis2=2), 0, atol=1e-14)
    assert np.allclose(BASIS, BASIS.transpose(0, 2, 1))


def test_round_trip_and_norm():
    q = random_states(50)
    m = to_matrix(q)
    assert np.max(np.abs(np.trace(m, axis1=1, axis2=2))) <= 1e-12
    assert np.allclose(m, m.transpose(0, 2, 1), atol=1e-14)
    assert np.allclose(from_matrix(m), q, atol=1e-12)
    assert np.allclose(np.sqrt(np.einsum("nij,nij->n", m, m)), norm(q), atol=1e-12)
    assert np.allclose(to_matrix(from_matrix(m)), m, atol=1e-12)


def test_from_director_examples():
    assert np.allclose(from_director([0, 0, 1]), Q_INF, atol=1e-15)
    assert Q_INF[1] == pytest.approx(-math.sqrt(2 / 3))
    assert np.allclose(from_director([0, 0, 1], 0.0), 0.0)
    q = from_director([1.0, 0.0, 0.0])
    assert np.allclose(to_matrix(q), uniaxial([1, 0, 0]), atol=1e-15)
    assert norm(q) ** 2 == pytest.approx(2 / 3)
    with pytest.raises(InvalidInput):
        from_director([1.0, 1.0, 0.0])


def test_model_params_validation():
    p = ModelParams(0.02, 0.1)
    assert p.lam == pytest.approx(5.0) and p.eps == pytest.approx(0.2)
    for bad in ((0.0, 0.1), (0.1, -1.0)):
        with pytest.raises(InvalidInput):
            ModelParams(*bad)


# ---- potentials --------------------------------------------------------------


def test_cste_from_scalar_scan():
    s = np.linspace(-2, 3, 200001)
    poly = -s ** 2 / 3 - 2 * s ** 3 / 9 + s ** 4 / 3
    assert -poly.min() == pytest.approx(2 / 9, abs=1e-9)
    assert s[np.argmin(poly)] == pytest.approx(1.0, abs=1e-4)
    assert F_CONST == 2 / 9


def test_nematic_potential_examples():
    v, g = nematic_potential(Q_INF)
    assert v == pytest.approx(0.0, abs=1e-15) and np.allclose(g, 0, atol=1e-14)
    assert nematic_potential(np.zeros(5))[0] == pytest.approx(2 / 9)
    q = from_matrix(uniaxial([0, 0, 1], 2.0))
    assert nematic_potential(q)[0] == pytest.approx(22 / 9, rel=1e-14)


def test_nematic_matches_matrix_oracle():
    q = random_states(100, seed=1)
    ref = [f_matrix(m) for m in to_matrix(q)]
    assert np.allclose(nematic_potential(q)[0], ref, rtol=1e-12, atol=1e-13)


def test_field_potential_examples():
    assert field_potential(Q_INF)[0] == pytest.approx(0.0, abs=1e-15)
    assert field_potential(from_director([1, 0, 0]))[0] == pytest.approx(math.sqrt(1.5), rel=1e-12)
    assert field_potential(5 * Q_INF)[0] == pytest.approx(0.0, abs=1e-15)
    v, g = field_potential(np.zeros(5))
    assert v == pytest.approx(math.sqrt(2 / 3)) and np.all(g == 0)


def test_field_matches_matrix_oracle():
    q = random_states(100, seed=2)
    ref = [g_matrix(m) for m in to_matrix(q)]
    assert np.allclose(field_potential(q)[0], ref, rtol=1e-12)


@pytest.mark.parametrize("pot", [nematic_potential, field_potential])
def test_potential_gradients_central_difference(pot):
    q = random_states(100, seed=3)
    _, g = pot(q)
    h = 1e-6
    fd = np.empty_like(q)
    for k in range(5):
        e = np.zeros(5)
        e[k] = h
        fd[:, k] = (pot(q + e)[0] - pot(q - e)[0]) / (2 * h)
    assert np.max(np.abs(fd - g) / np.maximum(1.0, np.abs(g))) < 1e-6


@pytest.mark.parametrize("pot,hess", [(nematic_potential, nematic_hessian), (field_potential, field_hessian)])
def test_hessians_central_difference(pot, hess):
    q = random_states(20, seed=4)
    H = hess(q)
    h = 1e-6
    for k in range(5):
        e = np.zeros(5)
        e[k] = h
        fd = (pot(q + e)[1] - pot(q - e)[1]) / (2 * h)
        assert np.allclose(fd, H[:, :, k], atol=1e-6, rtol=1e-6)


def test_invariances():
    q = random_states(30, seed=5)
    rots = Rotation.random(100, random_state=6).as_matrix()
    m = to_matrix(q)
    for R in rots[:10]:
        mr = np.einsum("ai,nab,bj->nij", R, m, R)
        assert np.allclose(nematic_potential(from_matrix(mr))[0], nematic_potential(q)[0], atol=1e-12)
    for phi in np.linspace(0, 2 * math.pi, 7):
        assert np.allclose(field_potential(rotate_z(q, phi))[0], field_potential(q)[0], atol=1e-12)
    R = Rotation.from_rotvec([0.7, 0, 0]).as_matrix()
    mr = np.einsum("ai,nab,bj->nij", R, m, R)
    assert np.max(np.abs(field_potential(from_matrix(mr))[0] - field_potential(q)[0])) > 1e-3


def test_zero_set_is_positive_ray_of_q_inf():
    from scipy.optimize import minimize

    rng = np.random.default_rng(7)
    for _ in range(50):
        res = minimize(lambda x: nematic_potential(x)[0] + field_potential(x)[0], rng.normal(size=5),
                       jac=lambda x: nematic_potential(x)[1] + field_potential(x)[1], method="BFGS",
                       options={"gtol": 1e-10})
        if res.fun < 1e-10:
            assert np.allclose(res.x, Q_INF, atol=1e-4)


# ---- geometry ----------------------------------------------------------------


def test_boundary_tensor_examples():
    assert np.allclose(boundary_tensor(0.0), Q_INF, atol=1e-15)
    assert np.allclose(boundary_tensor(math.pi), Q_INF, atol=1e-15)
    assert np.allclose(to_matrix(boundary_tensor(math.pi / 2, 0.0)), uniaxial([1, 0, 0]), atol=1e-15)
    th, ph = 0.7, 1.9
    er = [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
    assert np.allclose(to_matrix(boundary_tensor(th, ph)), uniaxial(er), atol=1e-14)


def test_rotate_z_examples():
    assert np.allclose(rotate_z(Q_INF, 1.234), Q_INF, atol=1e-15)
    assert np.allclose(to_matrix(rotate_z(from_director([1, 0, 0]), math.pi / 2)), uniaxial([0, 1, 0]),
                       atol=1e-15)
    q = random_states(10, seed=8)
    assert np.allclose(rotate_z(q, 2 * math.pi), q, atol=1e-12)


def test_xi_form_commutator_oracle():
    L3 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], float)
    q = random_states(40, seed=9)
    m = to_matrix(q)
    comm = np.einsum("ij,njk->nik", L3, m) - np.einsum("nij,jk->nik", m, L3)
    assert np.allclose(xi_form(q), np.einsum("nij,nij->n", comm, comm), atol=1e-12)
    assert xi_form(Q_INF) == 0.0
    assert xi_form(from_director([1, 0, 0])) == pytest.approx(2.0)
    th = math.pi / 6
    assert xi_form(from_director([math.sin(th), 0, math.cos(th)])) == pytest.approx(0.5)


def test_xi_bounded_by_distance_to_q_inf():
    q = Q_INF + random_states(10_000, seed=10, scale=0.5)
    ratio = xi_form(q) / np.sum((q - Q_INF) ** 2, axis=-1)
    assert ratio.max() <= 4.0 + 1e-12


def test_reflect_equator_maps_boundary_data():
    th = np.linspace(0, math.pi, 9)
    assert np.allclose(reflect_equator(boundary_tensor(th)), boundary_tensor(math.pi - th), atol=1e-14)


def test_meridian_tensor():
    psi = 0.4
    assert np.allclose(to_matrix(meridian_tensor(psi)), uniaxial([math.sin(psi), 0, math.cos(psi)]),
                       atol=1e-15)


def test_biaxiality_examples():
    assert biaxiality(Q_INF) == pytest.approx(0.0, abs=1e-12)
    assert biaxiality(from_matrix(np.diag([1 / 3, -2 / 3, 1 / 3]))) == pytest.approx(0.0, abs=1e-12)
    assert biaxiality(np.array([0.3, 0, 0, 0, 0])) == pytest.approx(1.0)
    assert np.isnan(biaxiality(np.zeros(5)))


def test_coercivity_examples():
    rng = np.random.default_rng(11)
    d = rng.normal(size=(10_000, 5))
    d *= (0.3 * rng.random(10_000) ** 0.2 / norm(d))[:, None]
    near = Q_INF + d
    r1 = coercivity_ratio(1.0, samples=near)
    r2 = coercivity_ratio(2.0, samples=near)
    assert r1 > 0 and r2 >= r1
    n = rng.normal(size=(10_000, 3))
    n /= np.linalg.norm(n, axis=1)[:, None]
    n = n[np.abs(n[:, 2]) < 0.99]
    assert coercivity_ratio(0.0, samples=from_director(n)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidInput):
        coercivity_ratio(1.0, sample_count=10)


# ---- complex order parameter -------------------------------------------------


def test_embed_complex_matrix_entries():
    assert np.allclose(to_matrix(embed_complex(0.0)), np.diag([1 / 3, -2 / 3, 1 / 3]), atol=1e-15)
    x = 0.8
    m = to_matrix(embed_complex(math.sqrt(6) * x + 0j))
    assert m[0, 0] == pytest.approx(1 / 3 + x) and m[2, 2] == pytest.approx(1 / 3 - x)
    m = to_matrix(embed_complex(1j * math.sqrt(6) * x))
    assert m[0, 2] == pytest.approx(x) and m[2, 0] == pytest.approx(x)


def test_embed_complex_phase_invariance_and_offset():
    u = np.exp(1j * np.linspace(0, 2 * math.pi, 16, endpoint=False))
    v = nematic_potential(embed_complex(u))[0]
    assert np.ptp(v) < 1e-13
    # the family stays away from the uniaxial minimum set
    assert v[0] == pytest.approx(13 / 36, rel=1e-12)


def test_embed_director_phase():
    psi = np.linspace(0, math.pi, 13)
    q = embed_director_phase(phase_to_u(psi))
    assert np.allclose(q, meridian_tensor(psi), atol=1e-14)
    r = np.linspace(0, 1.2, 7)
    assert np.allclose(nematic_potential(embed_director_phase(r + 0j))[0], 3 / 16 * (1 - r ** 2) ** 2,
                       atol=1e-14)


def test_kappa():
    assert KAPPA == pytest.approx(2.2133638, abs=1e-7)
