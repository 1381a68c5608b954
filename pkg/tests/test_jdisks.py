import numpy as np
import pytest

from acx import acstruct as acs
from acx import cauchy_green as cg
from acx import jdisks as jd

V = np.array([1.0, 0.0, 1.0, 0.0]) / np.sqrt(2)


@pytest.fixture(scope="module")
def jet_J():
    return acs.jet_to_J(acs.single_entry_jet(2, 0.1), exact=True)


@pytest.fixture(scope="module")
def jet_disk(jet_J):
    return jd.solve_disk(jet_J, np.zeros(4), V, 0.2, N=64)


def test_standard_disk_is_a_complex_line():
    x = np.array([0.1, -0.2, 0.0, 0.3])
    d = jd.solve_disk(acs.standard(2), x, V, 0.2, N=64)
    g = d.grid
    expected = acs.to_complex(x) + 0.2 * g.zeta[..., None] * acs.to_complex(V)
    assert d.iterations == 1
    assert np.max(np.abs(d.samples.values[g.inside] - expected[g.inside])) < 1e-14
    assert d.residual < 1e-12


def test_jet_disk_solves_equation(jet_J, jet_disk):
    d = jet_disk
    assert d.residual <= 1e-6
    assert np.array_equal(d.gamma0(), np.zeros(4))
    assert jd.holomorphy_defect(jet_J, d) < 1e-3
    assert jd.residual(jet_J, d, 2 * d.grid.N) < 1e-3
    assert all(r < 0.5 for r in d.decay_ratios())


def test_disk_tangent_at_centre(jet_disk):
    dt, ds = jet_disk.tangents()
    i, j = jet_disk.grid.nearest(0.0)
    assert np.allclose(dt[i, j], 0.2 * V, atol=5e-3)
    assert np.allclose(ds[i, j], 0.2 * acs.standard_matrix(2) @ V, atol=5e-3)


def test_centre_must_be_normalised(jet_J):
    x = np.array([0.0, 0.0, 0.2, 0.1])
    with pytest.raises(ValueError, match="normalise"):
        jd.solve_disk(jet_J, x, V, 0.2, N=32)
    Jc, L, x0 = acs.normalize_chart(jet_J, x)
    d = jd.solve_disk(Jc, np.zeros(4), V, 0.1, N=32)
    assert d.residual <= 1e-6


def _bent_structure(a):
    """Pullback of J_0 by ``(x, y, u, v) -> (x, y + a u^2, u, v)``."""
    def phi(p):
        q = p.copy()
        q[..., 1] = p[..., 1] + a * p[..., 2] ** 2
        return q

    def dphi(p):
        D = np.broadcast_to(np.eye(4), p.shape[:-1] + (4, 4)).copy()
        D[..., 1, 2] = 2 * a * p[..., 2]
        return D

    def d2phi(p):
        H = np.zeros(p.shape[:-1] + (4, 4, 4))
        H[..., 2, 1, 2] = 2 * a
        return H

    return acs.pullback_standard(phi, dphi, d2phi, 2)


def test_radius_too_large():
    with pytest.raises(jd.RadiusTooLarge):
        jd.solve_disk(_bent_structure(1.0), np.zeros(4), V, 0.5, N=32, max_halvings=0)


def test_halving_recovers():
    d = jd.solve_disk(_bent_structure(1.0), np.zeros(4), V, 0.5, N=32, tol=1e-4)
    assert d.halvings > 0
    assert d.radius == 0.5 / 2 ** d.halvings
    assert d.residual <= 1e-4


def test_stalled_iteration_reports_not_converged():
    with pytest.raises(jd.NotConverged):
        jd.solve_disk(_bent_structure(1.0), np.zeros(4), V, 0.5, N=32, max_iter=3)


def test_interpolation_exact_on_cubics():
    g = cg.DiskGrid.build(64)
    f = cg.DiskField.from_function(g, lambda z: z ** 3 - 2 * np.conj(z) * z + 1)
    pts = np.array([0.1 + 0.2j, -0.33 + 0.05j, 0.5j])
    got = jd.interpolate(f, pts)[:, 0]
    assert np.allclose(got, pts ** 3 - 2 * np.conj(pts) * pts + 1, atol=1e-12)


def test_evaluate_near_boundary_is_nan(jet_disk):
    assert np.all(np.isnan(jet_disk.evaluate(np.array([0.999]))))


def test_report_mask_drops_ring():
    g = cg.DiskGrid.build(32)
    m = jd.report_mask(g)
    assert m.sum() < g.inside.sum()
    assert not np.any(m & ~g.inside)
    assert np.max(np.abs(g.zeta[m])) < 1 - 2 * g.h


def test_dump_roundtrip(tmp_path, jet_disk):
    path = tmp_path / "disk.bin"
    jd.dump_disk(jet_disk, path)
    back = jd.load_disk(path)
    m = jet_disk.grid.inside
    assert np.array_equal(back.samples.values[m], jet_disk.samples.values[m])
    assert np.array_equal(back.rhs.values[m], jet_disk.rhs.values[m])
    assert back.residual == jet_disk.residual
    assert np.array_equal(back.gamma0(), jet_disk.gamma0())


def test_load_rejects_other_files(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b'{"format": "other"}\n')
    with pytest.raises(ValueError):
        jd.load_disk(p)


def test_constant_field_defect(jet_J):
    assert jd.constant_field_defect(acs.standard(2), V, [np.zeros(4)]) == 0.0
    d = jd.constant_field_defect(jet_J, V, [np.zeros(4)])
    # (D_V J) V at 0 for the single-entry jet has norm c / 2
    assert d == pytest.approx(0.05, rel=1e-9)
    assert jd.constant_field_defect(jet_J, V, [np.zeros(4)], h=1e-4) == pytest.approx(d, rel=1e-7)


def test_small_cylinder_and_flat_field(jet_J):
    base = jd.solve_disk(jet_J, np.zeros(4), V, 0.1, N=48)
    frame = np.array([[1.0, 0.0, -1.0, 0.0]]) / np.sqrt(2)
    fam = jd.solve_cylinder(jet_J, base, frame, 0.05, 3)
    assert len(fam.slices) == 9
    assert max(fam.residuals) <= 1e-6
    assert fam.sigma().shape == (3, 3, 48, 48, 2)
    F = jd.j_flat_field(jet_J, fam)
    assert F.defect == pytest.approx(F.defect_bracket, rel=1e-3, abs=1e-8)
    assert F.defect < 0.05 / 10


def test_cylinder_rejects_dependent_frame(jet_J):
    base = jd.solve_disk(jet_J, np.zeros(4), V, 0.1, N=32)
    with pytest.raises(ValueError):
        jd.solve_cylinder(jet_J, base, np.array([V]), 0.05, 3)
