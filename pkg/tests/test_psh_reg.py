import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acx import acstruct as acs
from acx import config as cf
from acx import fields as fl
from acx import forms
from acx import hessian as hs
from acx import psh_reg as pr

STD2 = forms.HermitianMetric.standard(2)


@pytest.fixture(scope="module")
def jet_J():
    return acs.jet_to_J(acs.single_entry_jet(2, 0.1), exact=True)


# ---------------------------------------------------------------------------
# mean values and the disk test

def test_circle_means_of_harmonic_function():
    means = pr.circle_means(lambda z: np.real(z ** 3 + 2 * z) + 1.5, [0.2, 0.7])
    assert means == pytest.approx([1.5, 1.5], abs=1e-14)
    assert pr.circle_means(lambda z: np.abs(z) ** 2, [0.5])[0] == pytest.approx(0.25)


def test_circle_means_input_checks():
    with pytest.raises(ValueError):
        pr.circle_means(np.abs, [0.5], nodes=32)
    with pytest.raises(ValueError):
        pr.circle_means(np.abs, [1.0])
    with pytest.raises(ValueError):
        pr.circle_means(lambda z: np.full(z.shape, np.nan), [0.5])


def test_cp1_directions_are_unit_and_distinct():
    dirs = pr.cp1_directions()
    assert len(dirs) == 12
    Z = np.array([acs.to_complex(d) for d in dirs])
    assert np.allclose(np.linalg.norm(Z, axis=1), 1)
    # distinct complex lines: |<a, b>| < 1
    G = np.abs(Z @ Z.conj().T)
    assert np.max(G - np.eye(12)) < 0.95
    with pytest.raises(ValueError):
        pr.cp1_directions(10)


def test_psh_verdicts_standard_structure():
    J0 = acs.standard(2)
    dirs = pr.cp1_directions()[:4]
    x = np.zeros(4)
    ok = pr.psh_test(J0, fl.abs2(2), x, directions=dirs, N=64)
    bad = pr.psh_test(J0, fl.neg_abs2(2), x, directions=dirs, N=64)
    flat = pr.psh_test(J0, fl.re_z1(2), x, directions=dirs, N=64)
    assert ok.verdict == "psh_consistent"
    assert ok.worst_margin == pytest.approx(-0.04 * 0.25 ** 2, rel=1e-9)
    assert bad.verdict == "violation" and bad.witness["margin"] > 0
    assert flat.verdict == "psh_consistent"
    assert all(abs(m) <= r["tol"] for r in flat.records for m in r["margins"])
    assert set(ok.to_json()) == {"x", "verdict", "worst_margin", "witness", "records"}


def test_psh_verdicts_jet_structure(jet_J):
    disks = pr.solve_disks(jet_J, np.zeros(4), pr.cp1_directions()[:3], N=64)
    assert pr.psh_test(jet_J, fl.abs2(2), np.zeros(4), disks=disks).verdict == "psh_consistent"
    assert pr.psh_test(jet_J, fl.neg_abs2(2), np.zeros(4), disks=disks).verdict == "violation"


def test_failed_disk_makes_test_inconclusive():
    J0 = acs.standard(2)
    (chart, sols) = pr.solve_disks(J0, np.zeros(4), pr.cp1_directions()[:2], N=64)
    sols = [sols[0], RuntimeError("solver failed")]
    v = pr.psh_test(J0, fl.abs2(2), np.zeros(4), disks=(chart, sols))
    assert v.verdict == "inconclusive"


def test_levi_min_and_disk_points(jet_J):
    Q = np.diag([1.0, -0.5])
    assert pr.levi_min(acs.standard(2), fl.quadratic(Q), np.zeros((1, 4))) == pytest.approx(-0.5)
    disks = pr.solve_disks(jet_J, np.zeros(4), pr.cp1_directions()[:2], N=64)
    pts = pr.disk_points(disks, nodes=8)
    assert pts.shape == (1 + 2 * 3 * 8, 4)
    assert np.allclose(pts[0], 0)


# ---------------------------------------------------------------------------
# log(e^f + eps)

def test_log_eps_values_and_derivatives():
    f = fl.mixed_poly(2)
    fe = pr.log_eps(f, 0.1)
    p = np.array([0.1, 0.2, -0.1, 0.3])
    assert fe(p) == pytest.approx(math.log(math.exp(f(p)) + 0.1))
    h = 1e-5
    fd = np.array([(fe(p + h * e) - fe(p - h * e)) / (2 * h) for e in np.eye(4)])
    assert np.allclose(fe.gradient(p), fd, atol=1e-9)
    Hfd = np.array([(fe.gradient(p + h * e) - fe.gradient(p - h * e)) / (2 * h) for e in np.eye(4)])
    assert np.allclose(fe.hessian(p), Hfd, atol=1e-8)
    with pytest.raises(ValueError):
        pr.log_eps(f, 0.0)


def test_log_eps_handles_large_values():
    big = fl.ScalarField(1, lambda p: 800.0 + 0 * p[..., 0])
    assert pr.log_eps(big, 1.0)(np.zeros(2)) == pytest.approx(800.0)


@pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
def test_log_eps_chain_rule(jet_J, eps):
    lhs, rhs = pr.log_eps_identity(jet_J, fl.mixed_poly(2), eps, np.array([1.0, 0.3, -0.2, 0.5]),
                                   np.array([0.05, -0.02, 0.03, 0.01]))
    assert lhs == pytest.approx(rhs, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 0.1, 0.01]))
def test_log_eps_preserves_plurisubharmonicity(seed, eps):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    f = fl.quadratic(A @ A.conj().T) + fl.exp_re(2, rng.standard_normal(2) + 1j * rng.standard_normal(2))
    pts = 0.3 * rng.uniform(-1, 1, (4, 4))
    assert pr.levi_min(acs.standard(2), pr.log_eps(f, eps), pts) >= -1e-9


# ---------------------------------------------------------------------------
# connection and geodesics

def test_standard_connection_is_flat():
    conn = pr.hermitian_connection(acs.standard(2), STD2)
    assert conn.flat
    assert np.array_equal(pr.exp_map(conn, np.zeros(4), np.ones(4) * 0.1), np.ones(4) * 0.1)


def test_connection_preserves_metric_and_structure(jet_J):
    metric = cf.gaussian_metric(2, 0.5)
    conn = pr.hermitian_connection(jet_J, metric)
    ng, nj = conn.residuals(np.array([0.1, -0.05, 0.08, 0.02]))
    assert ng < pr.TOL_CONN and nj < pr.TOL_CONN


def test_sphere_geodesic_radius():
    # for 4|dz|^2/(1+|z|^2)^2 the geodesic from 0 with Euclidean speed r ends at |z| = tan r
    conn = pr.hermitian_connection(acs.standard(1), cf.sphere_metric(1))
    zeta = np.array([0.3, 0.4])
    end = pr.exp_map(conn, np.zeros(2), zeta)
    assert np.linalg.norm(end) == pytest.approx(math.tan(0.5), abs=1e-8)
    assert np.allclose(end / np.linalg.norm(end), zeta / 0.5)


def test_geodesic_leaving_patch(jet_J):
    conn = pr.hermitian_connection(jet_J, STD2)
    with pytest.raises(acs.DomainError):
        pr.geodesic(conn, np.zeros(4), np.array([2.0, 0, 0, 0]), steps=8)


def test_exp_of_zero_is_base_point(jet_J):
    conn = pr.hermitian_connection(jet_J, STD2)
    x = np.array([0.1, 0.0, 0.2, 0.0])
    assert np.array_equal(pr.exp_map(conn, x, np.zeros(4)), x)


# ---------------------------------------------------------------------------
# kernel and regularisation

def _chi_moment(k):
    return mpmath.quad(lambda s: s ** k * mpmath.exp(1 / (s - 1)), [0, 1])


@pytest.mark.parametrize("n", [1, 2])
def test_kernel_second_moment(n):
    # c_chi = int |v|^2 chi(|v|^2) dv = m_n / m_{n-1} with m_k = int s^k e^{1/(s-1)} ds
    expected = float(_chi_moment(n) / _chi_moment(n - 1))
    assert pr.RegularizationKernel(n).c_chi == pytest.approx(expected, rel=1e-10)


def test_kernel_second_moment_frozen():
    assert pr.RegularizationKernel(1).c_chi == pytest.approx(0.2613112034, rel=1e-9)
    assert pr.RegularizationKernel(2).c_chi == pytest.approx(0.3910484422, rel=1e-9)


@pytest.mark.parametrize("n", [1, 2])
def test_ball_quadrature_mass(n):
    w, W = pr.ball_quadrature(n)
    assert np.all(np.linalg.norm(w, axis=1) < 1)
    assert W.sum() == pytest.approx(1.0, abs=1e-7)
    w, W = pr.ball_quadrature(n, (8, 8))
    # uniform weights without the kernel: volume of the unit ball
    K = pr.RegularizationKernel(n)
    vol = np.sum(W / K(np.sum(w * w, axis=1)))
    assert vol == pytest.approx(math.pi ** n / math.factorial(n), rel=1e-12)


def test_ball_quadrature_rejects_large_n():
    with pytest.raises(ValueError):
        pr.ball_quadrature(3)


@pytest.mark.parametrize("n", [1, 2])
def test_flat_regularization_of_abs2(n):
    K = pr.RegularizationKernel(n)
    for eps in (0.2, 0.05):
        val = pr.regularize(acs.standard(n), forms.HermitianMetric.standard(n), fl.abs2(n), eps,
                            np.zeros(2 * n))
        assert val == pytest.approx(K.c_chi * eps ** 2, abs=1e-8)


def test_regularization_reproduces_constants_and_affine(jet_J):
    one = fl.ScalarField(2, lambda p: np.ones(p.shape[:-1]))
    assert pr.regularize(jet_J, STD2, one, 0.1, np.zeros(4), (6, 8), steps=2) == pytest.approx(1.0, abs=1e-14)
    x = np.array([0.1, 0.2, -0.1, 0.0])
    assert pr.regularize(acs.standard(2), STD2, fl.re_z1(2), 0.2, x) == pytest.approx(0.1, abs=1e-14)
    with pytest.raises(ValueError):
        pr.regularize(acs.standard(2), STD2, one, 0.0, x)


def test_regularization_batched_points():
    pts = np.array([[0.0, 0.0, 0.0, 0.0], [0.1, 0.0, 0.0, 0.0]])
    vals = pr.regularize(acs.standard(2), STD2, fl.abs2(2), 0.1, pts)
    c = pr.RegularizationKernel(2).c_chi * 0.01
    assert vals == pytest.approx([c, c + 0.01], abs=1e-8)


def test_regularized_field_hessian():
    ue = pr.regularized_field(acs.standard(2), STD2, fl.abs2(2), 0.1, (8, 16), 1)
    p = np.array([0.05, 0.0, 0.0, 0.02])
    assert np.allclose(ue.hessian(p), 2 * np.eye(4), atol=1e-5)


def test_scans_on_flat_controls():
    J0 = acs.standard(2)
    pts = np.zeros((1, 4))
    mono = pr.monotonicity_scan(J0, STD2, fl.abs2(2), [0.2, 0.1], pts, quad_res=(8, 16))
    assert mono.passed and mono.worst_margin > 0
    assert mono.criterion == "monotonicity(certified_psh=True)"
    rev = pr.monotonicity_scan(J0, STD2, fl.neg_abs2(2), [0.2, 0.1], pts, quad_res=(8, 16))
    assert not rev.passed
    loss = pr.positivity_loss_scan(J0, STD2, fl.abs2(2), 0.1, pts, quad_res=(8, 16), steps=1)
    assert loss.passed and loss.worst_margin <= 1e-6
    assert set(loss.to_json()) == {"criterion", "samples", "worst_margin", "pass"}


# ---------------------------------------------------------------------------
# curvature

def test_flat_curvature_vanishes():
    assert pr.griffiths_lower(acs.standard(2), STD2, np.zeros(4), np.array([1.0, 0, 0, 0])) == 0.0


def test_sphere_curvature_is_one():
    xi = np.array([0.5, 0.0])  # unit length at the origin
    rep = pr.curvature_report(acs.standard(1), cf.sphere_metric(1), np.zeros(2), xi)
    assert rep.G == pytest.approx(1.0, abs=1e-8)
    assert rep.G_perp == math.inf


@pytest.mark.parametrize("a", [0.5, -0.3])
def test_gaussian_metric_curvature(a):
    # e^{phi}|dz|^2 has Gauss curvature -1/2 e^{-phi} lap(phi) = -2 a e^{-a|p|^2}
    metric = cf.gaussian_metric(1, a)
    p = np.array([0.2, -0.1])
    xi = np.array([1.0, 0.0]) * math.exp(-a * 0.05 / 2)
    G = pr.griffiths_lower(acs.standard(1), metric, p, xi)
    assert G == pytest.approx(-2 * a * math.exp(-a * 0.05), rel=1e-6)


def test_orthogonal_bound_dominates(jet_J):
    conn = pr.hermitian_connection(jet_J, STD2)
    rng = np.random.default_rng(0)
    for _ in range(5):
        rep = pr.curvature_report(jet_J, STD2, 0.1 * rng.uniform(-1, 1, 4), rng.standard_normal(4),
                                  conn=conn)
        assert rep.G_perp >= rep.G
