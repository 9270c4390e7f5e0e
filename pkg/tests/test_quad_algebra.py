import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cloner_lab.quad_algebra import (
    GaussianMap,
    GaussianState,
    NotUnityGain,
    OperatorLinearForm,
    apply,
    chaotic_photons,
    commutator,
    compose,
    fidelity_from_photons,
    fidelity_to_coherent,
    form_moments,
    gaussian_fidelity,
    hermitian_parts,
    make_state,
    omega,
    product_state,
    symplectic_residual,
)

a = OperatorLinearForm.annihilation
ad = OperatorLinearForm.creation


def test_omega_two_modes():
    w = omega(2)
    assert w.shape == (4, 4)
    assert np.allclose(w[:2, :2], [[0, 1], [-1, 0]])
    assert np.allclose(w[:2, 2:], 0)


def test_canonical_commutators():
    assert commutator(a(0, 2), ad(0, 2)) == pytest.approx(1)
    assert commutator(a(0, 2), ad(1, 2)) == pytest.approx(0)
    assert commutator(OperatorLinearForm.x(1, 2), OperatorLinearForm.p(1, 2)) == pytest.approx(1j)


def test_quadrature_convention():
    # A = (X + iP)/sqrt2
    x, p = OperatorLinearForm.x(0, 1), OperatorLinearForm.p(0, 1)
    assert (x + p * 1j).distance(a(0, 1) * math.sqrt(2)) < 1e-15


def test_dagger_is_involution():
    f = a(0, 2) * (0.3 - 2j) + ad(1, 2) * 1.5
    assert f.dagger().dagger().distance(f) < 1e-15


@pytest.mark.parametrize("gamma", np.linspace(-1.5, 1.5, 7))
def test_z_operator_is_not_measurable(gamma):
    n = 3
    Z = (a(2, n) * (math.sqrt(2) * math.cosh(gamma)) - ad(1, n) * (math.sqrt(2) * math.sinh(gamma))
         + ad(0, n) - a(0, n))
    assert commutator(Z, Z.dagger()) == pytest.approx(2, abs=1e-12)
    xz, pz = hermitian_parts(Z)
    assert commutator(xz, pz) == pytest.approx(1j, abs=1e-12)
    assert (xz + pz * 1j).distance(Z) < 1e-14


def test_vacuum_and_coherent_moments():
    vac = make_state("vacuum")
    assert np.allclose(vac.cov, 0.5 * np.eye(2))
    coh = make_state("coherent", alpha=1 - 0.5j)
    assert np.allclose(coh.mean, [math.sqrt(2), -0.5 * math.sqrt(2)])
    assert np.allclose(coh.cov, 0.5 * np.eye(2))


@pytest.mark.parametrize("r, angle", [(0.3, 0.0), (1.0, 0.0), (0.7, 1.2)])
def test_squeezed_state_is_pure(r, angle):
    s = make_state("squeezed", r=r, angle=angle)
    assert np.linalg.det(s.cov) == pytest.approx(0.25)
    assert s.is_physical()
    if angle == 0:
        assert s.cov[0, 0] == pytest.approx(0.5 * math.exp(-2 * r))


def test_thermal_covariance():
    t = make_state("thermal", nbar=2.0)
    assert np.allclose(t.cov, 2.5 * np.eye(2))


def test_unphysical_state_detected():
    bad = GaussianState(np.zeros(2), np.diag([0.1, 0.1]))
    assert not bad.is_physical()
    assert bad.uncertainty_min_eig() < 0


def test_fidelity_known_values():
    c1 = make_state("coherent", alpha=0.3 + 0.1j)
    c2 = make_state("coherent", alpha=-0.2 + 0.4j)
    expect = math.exp(-abs((0.3 + 0.1j) - (-0.2 + 0.4j)) ** 2)
    assert gaussian_fidelity(c1.mean, c1.cov, c2.mean, c2.cov) == pytest.approx(expect, abs=1e-14)
    t = make_state("thermal", nbar=1.5)
    assert fidelity_to_coherent(t, 0, 0) == pytest.approx(1 / 2.5)
    s = make_state("squeezed", r=0.8, angle=0.4)
    assert gaussian_fidelity(s.mean, s.cov, s.mean, s.cov) == pytest.approx(1, abs=1e-12)
    t2 = make_state("thermal", nbar=3.0)
    assert gaussian_fidelity(t2.mean, t2.cov, t2.mean, t2.cov) == pytest.approx(1, abs=1e-12)


def test_chaotic_photons_of_noisy_clone():
    # A' = A_S + c (A_S' + A_I^dag): half of the total noise weight
    n = 3
    c = 0.7
    f = a(0, n) + (a(1, n) + ad(2, n)) * c
    assert chaotic_photons(f, 0) == pytest.approx(c * c)
    assert fidelity_from_photons(chaotic_photons(f, 0)) == pytest.approx(1 / (1 + c * c))
    with pytest.raises(NotUnityGain):
        chaotic_photons(f * 1.1, 0)


def random_symplectic(rng, n):
    """Product of random single-mode rotations, squeezers and two-mode mixers."""
    S = np.eye(2 * n)
    for _ in range(3 * n):
        k = rng.integers(n)
        t, r = rng.uniform(0, 2 * np.pi, 2)
        R = np.eye(2 * n)
        R[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]
        Q = np.eye(2 * n)
        Q[2 * k, 2 * k], Q[2 * k + 1, 2 * k + 1] = math.exp(-0.3 * r), math.exp(0.3 * r)
        S = Q @ R @ S
    return S


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_compose_preserves_symplecticity(n, seed):
    rng = np.random.default_rng(seed)
    m1 = GaussianMap(random_symplectic(rng, n), rng.normal(size=2 * n))
    m2 = GaussianMap(random_symplectic(rng, n), rng.normal(size=2 * n))
    c = compose(m2, m1)
    scale = max(1.0, np.abs(c.symplectic).max()) ** 2
    assert symplectic_residual(c.symplectic) < 1e-13 * scale
    st0 = product_state([make_state("coherent", alpha=complex(*rng.normal(size=2))) for _ in range(n)])
    direct = apply(m2, apply(m1, st0))
    via = apply(c, st0)
    assert np.allclose(direct.mean, via.mean, rtol=1e-10, atol=1e-10)
    assert np.allclose(direct.cov, via.cov, rtol=1e-10, atol=1e-13 * scale)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_operator_picture_matches_state_picture(n, seed):
    rng = np.random.default_rng(seed)
    m = GaussianMap(random_symplectic(rng, n), rng.normal(size=2 * n))
    st0 = product_state([make_state("thermal", nbar=float(x)) for x in rng.uniform(0, 2, n)])
    mean, cov = form_moments(m.output_forms(), st0)
    out = apply(m, st0)
    scale = max(1.0, np.abs(m.symplectic).max()) ** 2
    assert np.allclose(mean, out.mean, rtol=1e-10, atol=1e-10)
    assert np.allclose(cov, out.cov, rtol=1e-10, atol=1e-13 * scale)
