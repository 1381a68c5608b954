import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acx import acstruct as acs
from acx import fields as fl
from acx import forms
from acx import hessian as hs


def vector_field_hessian(J, u, xi, p, h=1e-4):
    """Oracle for ``1/2 (xi.xi.u + Y.Y.u + J[xi, Y].u)`` with ``Y = J xi``.

    Every derivative is a central difference of plain values of ``u`` and ``J``;
    no analytic derivative of either enters.
    """
    I = np.eye(len(p))

    def du(q, v):
        return (u(q + h * v) - u(q - h * v)) / (2 * h)

    xx = (u(p + h * xi) - 2 * u(p) + u(p - h * xi)) / h ** 2

    def Yu(q):
        return du(q, J.matrix(q) @ xi)

    Y = J.matrix(p) @ xi
    yy = (Yu(p + h * Y) - Yu(p - h * Y)) / (2 * h)
    DxJ = (J.matrix(p + h * xi) - J.matrix(p - h * xi)) / (2 * h)
    bracket = DxJ @ xi
    grad = np.array([du(p, e) for e in I])
    return 0.5 * (xx + yy + grad @ (J.matrix(p) @ bracket))


@pytest.fixture(scope="module")
def jet_structure():
    return acs.jet_to_J(acs.random_jet(2, np.random.default_rng(11)), exact=True)


def test_standard_hessian_of_abs2():
    xi = np.array([0.6, 0.0, 0.0, 0.8])
    assert hs.hessian_direct(acs.standard(2), fl.abs2(2), xi, np.zeros(4)) == pytest.approx(2.0)


@pytest.mark.parametrize("field", [fl.abs2(2), fl.mixed_poly(2), fl.exp_re(2, [1 + 0.5j, -0.3j])])
def test_direct_hessian_matches_vector_field_oracle(jet_structure, field):
    rng = np.random.default_rng(0)
    for _ in range(3):
        p = 0.2 * rng.uniform(-1, 1, 4)
        xi = rng.standard_normal(4)
        got = hs.hessian_direct(jet_structure, field, xi, p)
        assert got == pytest.approx(vector_field_hessian(jet_structure, field, xi, p), abs=1e-5)


def test_pluriharmonic_real_part_has_zero_hessian():
    xi = np.array([0.3, -0.2, 1.0, 0.5])
    p = np.array([0.1, 0.2, -0.1, 0.05])
    assert abs(hs.hessian_direct(acs.standard(2), fl.re_z1(2), xi, p)) < 1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_current_matrix_reproduces_hessian(seed):
    rng = np.random.default_rng(seed)
    J = acs.jet_to_J(acs.random_jet(2, rng), exact=True)
    u = fl.mixed_poly(2)
    p = 0.2 * rng.uniform(-1, 1, 4)
    xi = rng.standard_normal(4)
    M = hs.current_11(J, u, p)
    lam = hs.frame_coordinates(J, p, xi)
    assert np.allclose(M, M.conj().T, atol=1e-10)
    assert hs.hessian_direct(J, u, xi, p) == pytest.approx(2 * np.real(lam @ M @ np.conj(lam)), abs=1e-10)


def test_frame_coordinates_invert_frame(jet_structure):
    p = np.array([0.1, 0.0, -0.05, 0.2])
    xi = np.array([1.0, 2.0, -0.5, 0.3])
    lam = hs.frame_coordinates(jet_structure, p, xi)
    Z = acs.holomorphic_frame(jet_structure, p)
    assert np.allclose(2 * np.real(Z @ lam), xi)


def test_zero_jet_expansion_is_levi_form():
    jet = acs.JetACS.zero(2)
    J = acs.jet_to_J(jet)
    rng = np.random.default_rng(3)
    for u in (fl.abs2(2), fl.mixed_poly(2)):
        z = 0.2 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        xi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert hs.hessian_expansion(jet, u, xi, z) == pytest.approx(
            hs.hessian_direct(J, u, xi, acs.to_real(z)), abs=1e-12)


def test_expansion_remainder_is_cubic(jet_structure):
    jet = acs.random_jet(2, np.random.default_rng(11))
    J = acs.jet_to_J(jet)
    terms = hs.expansion_terms(jet)
    d = np.array([0.6 + 0.1j, -0.3 + 0.7j])
    d /= np.linalg.norm(d)
    xi = np.array([1.0, 0.5j])
    radii = np.array([0.004, 0.008, 0.016, 0.032])
    errs = [abs(hs.hessian_expansion(jet, fl.mixed_poly(2), xi, r * d, terms)
                - hs.hessian_direct(J, fl.mixed_poly(2), xi, acs.to_real(r * d))) for r in radii]
    assert hs.fit_slope(radii, errs) > 2.9


def test_reduced_expansion_requires_vanishing_torsion_jet():
    with pytest.raises(acs.InvalidJet):
        hs.hessian_expansion_reduced(acs.single_entry_jet(2, 0.1), fl.abs2(2), np.ones(2), np.zeros(2))


def test_reduced_expansion_agrees_with_full():
    jet = acs.random_jet(2, np.random.default_rng(1), orders=(3,))
    z = np.array([0.05 + 0.02j, -0.03j])
    xi = np.array([1.0, 0.3 - 0.2j])
    u = fl.mixed_poly(2)
    assert hs.hessian_expansion_reduced(jet, u, xi, z) == pytest.approx(
        hs.hessian_expansion(jet, u, xi, z), abs=1e-13)


def test_fit_slope_exact_power():
    x = np.logspace(-3, -1, 7)
    assert hs.fit_slope(x, 5 * x ** 3) == pytest.approx(3.0)


def test_audit_csv_layout():
    text = hs.expansion_audit_csv([(0.1, 1.0, 1.5)])
    lines = text.splitlines()
    assert lines[0] == "|z|,direct,expansion,abs_diff"
    assert lines[1] == "0.1,1.0,1.5,0.5"


def test_laplacian_values(jet_structure):
    std = forms.HermitianMetric.standard(2)
    z0 = np.zeros(4)
    assert hs.laplacian_J(acs.standard(2), std, fl.abs2(2), z0) == pytest.approx(2.0)
    assert hs.laplacian_J(acs.standard(2), std, fl.re_z1(2), z0) == 0.0
    assert hs.laplacian_J(jet_structure, std, fl.abs2(2), z0) == pytest.approx(2.0)


def test_laplacian_scales_with_conformal_factor():
    a = np.log(3.0)
    metric = forms.HermitianMetric.conformal(2, lambda p: a + 0 * p[..., 0], lambda p: 0 * p)
    val = hs.laplacian_J(acs.standard(2), metric, fl.abs2(2), np.zeros(4))
    assert val == pytest.approx(2.0 / 3.0)


def test_grad_form_of_linear_function():
    # u = Re z1: du(xi) = xi_0, du(J xi) = -xi_1
    xi = np.array([0.3, 0.4, 1.0, 2.0])
    assert hs.grad_form(acs.standard(2), fl.re_z1(2), xi, np.zeros(4)) == pytest.approx(0.125)


def test_ddc_residual_small(jet_structure):
    p = np.array([0.05, 0.0, 0.02, -0.01])
    xi = np.array([1.0, 0.2, -0.3, 0.4])
    assert hs.ddc_check(jet_structure, fl.mixed_poly(2), xi, p) < 1e-6


def test_strict_psh_margin_of_abs2():
    pts = np.zeros((2, 4))
    m = hs.strictly_psh_margin(acs.standard(2), fl.abs2(2), forms.HermitianMetric.standard(2), pts)
    assert m == pytest.approx(2.0)
