from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from softrod.actuator import PA_PER_BAR
from softrod.constitutive import (
    CrossSectionGeometry,
    MaterialLaw,
    build_section,
    internal_loads,
    neutral_axis,
    passive_actuator_forces,
    stiffness_homogeneous,
    stiffness_inhomogeneous,
    strains_from_loads,
    young_modulus,
)
from softrod.errors import NonPositiveStiffness
from softrod.kinematics import StrainState

GEOM = CrossSectionGeometry()
HOMO = MaterialLaw()
INHOMO = MaterialLaw(kind="inhomogeneous")
E0 = 289142.05

moduli = st.tuples(*[st.floats(1e4, 1e7)] * 3).map(np.array)


def annulus_quadrature(R_i, R_o, n_r=6, n_t=24):
    """Points and weights integrating polynomials of degree < 2 n_r in r and < n_t in angle exactly."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (R_o - R_i) * x + 0.5 * (R_o + R_i)
    wr = 0.5 * (R_o - R_i) * w * r
    th = 2.0 * math.pi * np.arange(n_t) / n_t
    pts = np.stack([np.outer(r, np.cos(th)).ravel(), np.outer(r, np.sin(th)).ravel()], axis=1)
    return pts, np.repeat(wr, n_t) * (2.0 * math.pi / n_t)


def section_oracle(geom, E):
    """Modulus-weighted centroid and bending tensor by quadrature over the three annuli."""
    pts, w = annulus_quadrature(geom.R_i, geom.R_o)
    xs, ws = [], []
    for Ei, c in zip(E, geom.offsets):
        xs.append(pts + c[:2])
        ws.append(Ei * w)
    X = np.concatenate(xs)
    W = np.concatenate(ws)
    c = (W @ X) / W.sum()
    d = X - c
    K11 = W @ (d[:, 1] ** 2)
    K22 = W @ (d[:, 0] ** 2)
    K12 = -W @ (d[:, 0] * d[:, 1])
    return c, np.array([[K11, K12], [K12, K22]])


def test_geometry_quantities():
    assert GEOM.A_m == pytest.approx(math.pi * (0.014**2 - 0.0095**2), rel=1e-15)
    assert GEOM.A_in == pytest.approx(math.pi * 0.0095**2, rel=1e-15)
    assert GEOM.I_o == pytest.approx(math.pi * (0.014**4 - 0.0095**4) / 4.0, rel=1e-15)
    assert np.allclose(GEOM.offsets.mean(axis=0), 0.0, atol=1e-18)
    d = GEOM.offsets
    for i, j in ((0, 1), (1, 2), (0, 2)):
        assert np.linalg.norm(d[i] - d[j]) == pytest.approx(GEOM.b, rel=1e-14)


def test_young_modulus_examples():
    assert young_modulus(HOMO, 0.0, GEOM) == E0
    assert young_modulus(HOMO, 42.0, GEOM) == E0
    assert young_modulus(INHOMO, 0.0, GEOM) == pytest.approx(1.0 / (GEOM.A_m * 0.00742681), rel=1e-15)
    linear = MaterialLaw(kind="inhomogeneous", a2=0.0)
    assert young_modulus(linear, 0.0, GEOM) == young_modulus(linear, 50.0, GEOM)
    soft = MaterialLaw(kind="inhomogeneous", a2=-1e-5, force_range=(0.0, 10.0))
    with pytest.raises(NonPositiveStiffness):
        young_modulus(soft, 1000.0, GEOM)
    with pytest.raises(NonPositiveStiffness):
        MaterialLaw(kind="inhomogeneous", a2=-1e-4)


def test_passive_forces_examples():
    f = passive_actuator_forces([0.5, 0.0, 0.0], GEOM)
    share = 0.5 * PA_PER_BAR * GEOM.A_in / 2.0
    assert f == pytest.approx([0.0, share, share], rel=1e-15)
    assert np.array_equal(passive_actuator_forces([0.0, 0.0, 0.0], GEOM), np.zeros(3))
    g = passive_actuator_forces([0.3, 0.3, 0.3], GEOM)
    assert g[0] == g[1] == g[2]
    with pytest.raises(ValueError):
        passive_actuator_forces([-0.1, 0.0, 0.0], GEOM)


@given(st.tuples(*[st.floats(0.0, 1.0)] * 3), st.tuples(*[st.floats(0.0, 1.0)] * 3))
def test_passive_forces_superpose(p, q):
    total = passive_actuator_forces(np.add(p, q), GEOM)
    parts = passive_actuator_forces(p, GEOM) + passive_actuator_forces(q, GEOM)
    assert np.allclose(total, parts, rtol=1e-13, atol=1e-12)


def test_neutral_axis_examples():
    assert np.array_equal(neutral_axis([E0] * 3, 0.055), np.zeros(3))
    D = neutral_axis([2 * E0, E0, E0], 0.055)
    assert D[0] == pytest.approx(math.sqrt(3) * 0.055 / 12.0, rel=1e-14)
    assert D[0] == pytest.approx(7.939e-3, abs=5e-7)
    assert D[1] == 0.0
    a = neutral_axis([1.0, 2.0, 3.0], 0.055)
    b = neutral_axis([1.0, 3.0, 2.0], 0.055)
    assert a[0] == pytest.approx(b[0], rel=1e-15) and a[1] == pytest.approx(-b[1], rel=1e-15)


@given(moduli, st.floats(1e-3, 1e3))
def test_neutral_axis_scale_invariant_and_inside_triangle(E, c):
    D = neutral_axis(E, GEOM.b)
    assert np.allclose(neutral_axis(c * E, GEOM.b), D, rtol=1e-12, atol=1e-17)
    # barycentric weights E_i / sum(E) are positive, so D is a convex combination of the offsets
    w = np.linalg.lstsq(np.vstack([GEOM.offsets[:, :2].T, np.ones(3)]), np.r_[D[:2], 1.0], rcond=None)[0]
    assert np.all(w > 0.0)
    assert np.allclose(w, E / E.sum(), rtol=1e-9)


def test_homogeneous_stiffness_examples():
    K_se, K_bt = stiffness_homogeneous(GEOM, HOMO)
    A_m = math.pi * (0.014**2 - 0.0095**2)
    assert K_se[2, 2] == pytest.approx(3.0 * E0 * A_m, rel=1e-14)
    assert K_se[0, 0] == pytest.approx(3.0 * 0.4094 * E0 * A_m, rel=1e-14)
    I_o = math.pi * (0.014**4 - 0.0095**4) / 4.0
    parallel = sum(I_o + A_m * r[1] ** 2 for r in GEOM.offsets)
    assert K_bt[0, 0] / E0 == pytest.approx(parallel, rel=1e-15)
    assert K_bt[1, 1] / E0 == pytest.approx(sum(I_o + A_m * r[0] ** 2 for r in GEOM.offsets), rel=1e-15)
    half = MaterialLaw(gamma=0.5)
    assert stiffness_homogeneous(GEOM, half)[1][2, 2] == pytest.approx(K_bt[0, 0], rel=1e-15)


def test_equal_moduli_reproduce_homogeneous():
    sec = stiffness_inhomogeneous(GEOM, [E0] * 3, HOMO.gamma)
    K_se, K_bt = stiffness_homogeneous(GEOM, HOMO)
    assert np.allclose(sec.K_se, K_se, rtol=1e-12, atol=0.0)
    assert np.allclose(sec.K_bt, K_bt, rtol=1e-12, atol=1e-12 * K_bt.max())
    assert np.array_equal(sec.D_na, np.zeros(3))


def test_unequal_moduli_examples():
    sec = stiffness_inhomogeneous(GEOM, [2 * E0, E0, E0], HOMO.gamma)
    assert abs(sec.K_bt[0, 1]) < 1e-15 * sec.K_bt[0, 0]
    assert np.allclose(sec.shifted_offsets, GEOM.offsets - sec.D_na, atol=0.0)
    E = np.array([2 * E0, E0, E0])
    x = sec.shifted_offsets[:, 0]
    K22 = sum(Ei * (GEOM.I_o + GEOM.A_m * xi**2) for Ei, xi in zip(E, x))
    assert sec.K_bt[1, 1] == pytest.approx(K22, rel=1e-12)


@given(moduli)
def test_bending_stiffness_matches_area_quadrature(E):
    sec = stiffness_inhomogeneous(GEOM, E, 0.4)
    c, K = section_oracle(GEOM, E)
    assert np.allclose(sec.D_na[:2], c, rtol=0.0, atol=1e-12 * GEOM.b)
    assert np.allclose(sec.K_bt[:2, :2], K, rtol=1e-10, atol=1e-10 * K.max())
    assert sec.K_bt[2, 2] == pytest.approx(0.4 * (K[0, 0] + K[1, 1]), rel=1e-10)
    assert np.allclose(sec.K_bt, sec.K_bt.T)
    assert np.all(np.linalg.eigvalsh(sec.K_bt) > 0.0)
    assert np.all(np.linalg.eigvalsh(sec.K_se) > 0.0)


@given(st.floats(1e4, 1e7), st.floats(1e4, 1e7))
def test_symmetric_passive_pair_has_no_coupling(E1, E23):
    sec = stiffness_inhomogeneous(GEOM, [E1, E23, E23], 0.4)
    assert sec.D_na[1] == 0.0
    assert abs(sec.K_bt[0, 1]) <= 1e-14 * sec.K_bt[0, 0]


def test_internal_loads_examples():
    sec = build_section(GEOM, HOMO)
    n, m = internal_loads(StrainState.rest(), np.eye(3), sec)
    assert np.array_equal(n, np.zeros(3)) and np.array_equal(m, np.zeros(3))
    eps = 1e-3
    n, m = internal_loads(StrainState(v=np.array([0.0, 0.0, 1.0 + eps]), u=np.zeros(3)), np.eye(3), sec)
    assert n == pytest.approx([0.0, 0.0, sec.K_se[2, 2] * eps], abs=1e-12)
    rest = strains_from_loads(np.zeros(3), np.zeros(3), np.eye(3), sec)
    assert np.array_equal(rest.v, [0.0, 0.0, 1.0]) and np.array_equal(rest.u, np.zeros(3))


@given(st.integers(0, 2**31 - 1), moduli)
def test_loads_strains_roundtrip(seed, E):
    rng = np.random.default_rng(seed)
    R = Rotation.random(random_state=seed).as_matrix()
    sec = stiffness_inhomogeneous(GEOM, E, 0.4)
    s = StrainState(v=np.array([0.0, 0.0, 1.0]) + 0.01 * rng.standard_normal(3), u=rng.standard_normal(3))
    n, m = internal_loads(s, R, sec)
    back = strains_from_loads(n, m, R, sec)
    assert np.allclose(back.v, s.v, atol=1e-12) and np.allclose(back.u, s.u, atol=1e-12)


def test_coupled_bending_matches_two_by_two_inverse():
    sec = stiffness_inhomogeneous(GEOM, [E0, 2 * E0, 0.5 * E0], 0.4)
    (a, b), (c, d) = sec.K_bt[:2, :2]
    assert abs(b) > 0.0
    m = np.array([1e-2, 0.0, 0.0])
    u = strains_from_loads(np.zeros(3), m, np.eye(3), sec).u
    det = a * d - b * c
    assert u[:2] == pytest.approx([d * m[0] / det, -c * m[0] / det], rel=1e-12)
    assert u[1] != 0.0


def test_build_section_inhomogeneous_softens_passive_actuators():
    sec = build_section(GEOM, INHOMO, [0.65, 0.0, 0.0])
    assert sec.E[1] == sec.E[2] < sec.E[0]
    assert sec.D_na[0] > 0.0
