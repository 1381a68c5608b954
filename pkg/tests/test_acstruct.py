import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acx import acstruct as acs


def _random_acs_matrix(rng, n):
    P = rng.standard_normal((2 * n, 2 * n)) * 0.2 + np.eye(2 * n)
    return P @ acs.standard_matrix(n) @ np.linalg.inv(P)


def test_standard_matrix_rotates_pairs():
    J0 = acs.standard_matrix(2)
    e = np.eye(4)
    assert np.array_equal(J0 @ e[0], e[1])
    assert np.array_equal(J0 @ e[1], -e[0])
    assert np.array_equal(J0 @ J0, -np.eye(4))


def test_complex_real_roundtrip():
    z = np.array([1 + 2j, -0.5 + 0.25j])
    assert np.array_equal(acs.to_real(z), [1, 2, -0.5, 0.25])
    assert np.array_equal(acs.to_complex(acs.to_real(z)), z)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_split_merge_roundtrip(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((2 * n, 2 * n))
    A, B = acs.split(M)
    assert np.allclose(acs.merge(A, B), M, atol=1e-13)


def test_split_of_standard_is_identity():
    A, B = acs.split(acs.standard_matrix(2))
    assert np.allclose(A, 1j * np.eye(2))
    assert np.allclose(B, 0)


def test_merge_acts_on_complex_components():
    # block (k, l) is w -> A w + conj(B) conj(w)
    A = np.array([[0.3 + 0.1j]])
    B = np.array([[0.2 - 0.4j]])
    M = acs.merge(A, B)
    w = 0.7 - 1.1j
    out = M @ np.array([w.real, w.imag])
    expected = A[0, 0] * w + np.conj(B[0, 0]) * np.conj(w)
    assert np.allclose(out[0] + 1j * out[1], expected)


def test_q_vanishes_exactly_at_standard():
    assert np.array_equal(acs.q_from_J(acs.standard_matrix(2)), np.zeros((4, 4)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_q_recovers_structure(seed):
    # (J0 + J) q = J0 - J, so J = (J0 - J0 q)(I + q)^{-1}
    rng = np.random.default_rng(seed)
    J = _random_acs_matrix(rng, 2)
    q = acs.q_from_J(J)
    J0 = acs.standard_matrix(2)
    back = (J0 - J0 @ q) @ np.linalg.inv(np.eye(4) + q)
    assert np.allclose(back, J, atol=1e-10)


def test_q_rejects_opposite_structure():
    with pytest.raises(np.linalg.LinAlgError):
        acs.q_from_J(-acs.standard_matrix(1))


def test_standard_structure_domain():
    J = acs.standard(2)
    assert J(np.zeros(4)).shape == (4, 4)
    with pytest.raises(ValueError):
        J(np.zeros(3))


def test_jet_domain_error():
    J = acs.jet_to_J(acs.single_entry_jet(2, 0.1), radius=0.5)
    with pytest.raises(acs.DomainError):
        J(np.array([0.6, 0, 0, 0]))


def test_zero_jet_gives_standard_structure():
    J = acs.jet_to_J(acs.JetACS.zero(2))
    p = np.array([0.3, -0.1, 0.2, 0.05])
    assert np.allclose(J(p), acs.standard_matrix(2), atol=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exact_jet_squares_to_minus_identity(seed):
    rng = np.random.default_rng(seed)
    J = acs.jet_to_J(acs.random_jet(2, rng), exact=True)
    p = 0.3 * rng.uniform(-1, 1, 4)
    M = J(p)
    assert np.max(np.abs(M @ M + np.eye(4))) < 1e-12


def test_exact_and_raw_share_the_jet():
    rng = np.random.default_rng(3)
    jet = acs.random_jet(2, rng)
    raw, ex = acs.jet_to_J(jet), acs.jet_to_J(jet, exact=True)
    d = rng.standard_normal(4)
    d /= np.linalg.norm(d)
    errs = [np.max(np.abs(raw(r * d) - ex(r * d))) for r in (0.02, 0.01)]
    # agreement to order |z|^4
    assert errs[0] / errs[1] > 12


def test_single_entry_jet():
    jet = acs.single_entry_jet(2, 0.25)
    nz = {k: np.count_nonzero(v) for k, v in jet.coefficients().items()}
    assert nz == {"B1": 1, "B2": 0, "B2bar": 0, "B3": 0, "B3bar1": 0, "B3bar2": 0}
    assert jet.B1[1, 0, 0] == 0.25


def test_jet_json_roundtrip():
    jet = acs.random_jet(2, np.random.default_rng(0))
    back = acs.JetACS.from_json(json.loads(json.dumps(jet.to_json())))
    for k, v in jet.coefficients().items():
        assert np.array_equal(v, getattr(back, k))


def test_invalid_jet_rejected():
    jet = acs.JetACS.zero(2)
    jet.B1[0, 0, 0] = 1.0  # violates the vanishing rule
    with pytest.raises(acs.InvalidJet):
        jet.check()
    with pytest.raises(acs.InvalidJet):
        acs.JetACS(2, B1=np.zeros((2, 2)))


def test_torsion_zero_for_zero_jet():
    jet = acs.JetACS.zero(2)
    assert not np.any(acs.torsion_jet(jet, np.array([0.1j, 0.2])))
    J = acs.jet_to_J(jet)
    assert np.max(np.abs(acs.torsion_bracket(J, np.array([0.1, 0.0, 0.2, 0.0])))) < 1e-12


def test_torsion_vanishes_for_pulled_back_structure():
    # pullback of J0 by a diffeomorphism is integrable
    def phi(p):
        q = p.copy()
        q[..., 0] = p[..., 0] + 0.3 * p[..., 3] ** 2
        q[..., 2] = p[..., 2] + 0.2 * np.sin(p[..., 1])
        return q

    def dphi(p):
        D = np.broadcast_to(np.eye(4), p.shape[:-1] + (4, 4)).copy()
        D[..., 0, 3] = 0.6 * p[..., 3]
        D[..., 2, 1] = 0.2 * np.cos(p[..., 1])
        return D

    def d2phi(p):
        H = np.zeros(p.shape[:-1] + (4, 4, 4))
        H[..., 3, 0, 3] = 0.6
        H[..., 1, 2, 1] = -0.2 * np.sin(p[..., 1])
        return H

    J = acs.pullback_standard(phi, dphi, d2phi, 2)
    p = np.array([0.1, -0.2, 0.05, 0.3])
    M = J(p)
    assert np.allclose(M @ M, -np.eye(4), atol=1e-12)
    assert np.max(np.abs(acs.torsion_bracket(J, p))) < 1e-8


def test_torsion_antisymmetric():
    N = acs.torsion_jet(acs.random_jet(3, np.random.default_rng(1)), np.array([0.1, 0.2j, -0.1]))
    assert np.allclose(N, -np.swapaxes(N, 1, 2))


def test_normalize_chart_gives_standard_at_origin():
    J = acs.jet_to_J(acs.random_jet(2, np.random.default_rng(5)), exact=True)
    x = np.array([0.1, 0.05, -0.08, 0.02])
    Jc, L, x0 = acs.normalize_chart(J, x)
    assert np.allclose(Jc(np.zeros(4)), acs.standard_matrix(2), atol=1e-13)
    w = np.array([0.01, 0.02, 0.0, -0.01])
    assert np.allclose(Jc(w), L @ J(x + np.linalg.solve(L, w)) @ np.linalg.inv(L))


def test_richardson_beats_plain_difference():
    def f(p):
        return np.sin(p[..., 0])

    p = np.array([0.3])
    exact = np.cos(0.3)
    plain = acs.fd_derivative(f, p, 1e-2)
    rich = acs.richardson_derivative(f, p, 1e-2)
    assert abs(rich - exact) < abs(plain - exact) / 100
