import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from layerreg import quadrature as qd
from layerreg.surfaces import Ellipsoid, MolecularSurface, Sphere, rotation_z

import oracles

ELL_AREA = 5.3910070689961  # parametric tensor-product oracle for (1,.6,.4)


@pytest.fixture(scope="module")
def sphere16():
    return qd.build_quadrature(Sphere(), 1 / 16)


@pytest.fixture(scope="module")
def sphere32():
    return qd.build_quadrature(Sphere(), 1 / 32)


def test_sphere_area(sphere16):
    assert abs(sphere16.area - 4 * math.pi) < 1e-4


def test_node_count_scaling(sphere16, sphere32):
    assert 3.5 <= len(sphere32) / len(sphere16) <= 4.5


def test_ellipsoid_area():
    q = qd.build_quadrature(Ellipsoid((1, .6, .4)), 1 / 32)
    assert abs(q.area - ELL_AREA) / ELL_AREA <= 1e-5
    assert ELL_AREA == pytest.approx(oracles.ellipsoid_area(1, .6, .4, 300), rel=1e-13)


def test_smooth_integrals(sphere32):
    assert abs(qd.integrate_smooth(sphere32, lambda x: x[:, 2] ** 2) - 4 * math.pi / 3) <= 1e-6
    assert abs(qd.integrate_smooth(sphere32, lambda x: x[:, 2])) <= 1e-10
    assert qd.integrate_smooth(sphere32, np.ones(len(sphere32))) == pytest.approx(sphere32.area)


def test_z2_converges_faster_than_fourth_order():
    errs = [abs(qd.integrate_smooth(qd.build_quadrature(Sphere(), h), lambda x: x[:, 2] ** 2)
                - 4 * math.pi / 3) for h in (1 / 8, 1 / 16, 1 / 32)]
    assert errs[0] / errs[1] > 16 and errs[1] / errs[2] > 16


@pytest.mark.parametrize("surface", [Sphere(), Ellipsoid((1, .6, .4)), MolecularSurface(),
                                     Ellipsoid((1, .5, .5), (0.1, 0, .5), rotation_z(30))])
def test_node_invariants(surface):
    q = qd.build_quadrature(surface, 1 / 16)
    assert np.all(q.w > 0)
    assert np.max(np.abs(surface.phi(q.x))) <= 1e-12
    nd = np.abs(q.n[np.arange(len(q)), q.direction])
    assert np.all(nd >= math.sqrt(qd.T0))


def test_partition_of_unity():
    g = np.random.default_rng(7)
    n = g.normal(size=(1000, 3))
    n /= np.linalg.norm(n, axis=1)[:, None]
    psi = qd.partition(n)
    assert np.max(np.abs(psi.sum(axis=1) - 1)) <= 1e-14
    assert np.all(psi >= 0)
    assert np.all(psi[n ** 2 <= qd.T0] == 0)
    assert qd.T0 < 1 / 3


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_partition_property(v):
    v = np.asarray(v)
    if np.linalg.norm(v) < 1e-3:
        return
    n = v / np.linalg.norm(v)
    psi = qd.partition(n)
    assert abs(psi.sum() - 1) <= 1e-14 and np.all(psi >= 0)
    assert np.all(psi[n ** 2 <= qd.T0] == 0)


def test_bump_flat_at_support_edge():
    t = qd.T0 + np.array([1e-6, 1e-4, 1e-3])
    assert np.all(qd._bump(t) < 1e-10)
    assert qd._bump(np.array([qd.T0]))[0] == 0


def test_under_resolved_surface_raises():
    with pytest.raises(qd.QuadratureError, match="twice"):
        qd.build_quadrature(Ellipsoid((1, 1, 0.02)), 0.25, origin=(0, 0, 0.125))


def test_independent_of_slab_chunking(monkeypatch):
    E = Ellipsoid((1, .6, .4))
    a = qd.build_quadrature(E, 1 / 16)
    monkeypatch.setattr(qd, "_CHUNK_POINTS", 3000)
    b = qd.build_quadrature(E, 1 / 16)
    ia = np.lexsort(a.x.T)
    ib = np.lexsort(b.x.T)
    assert np.allclose(a.x[ia], b.x[ib], atol=1e-15) and np.allclose(a.w[ia], b.w[ib], atol=1e-15)


def test_quadrature_csv(tmp_path, sphere16):
    p = tmp_path / "nodes.csv"
    sphere16.to_csv(p)
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert open(p).readline().strip() == "x,y,z,nx,ny,nz,w"
    assert data.shape == (len(sphere16), 7)
    assert np.array_equal(data[:, 6], sphere16.w)


def test_shifted_grid_area():
    q = qd.build_quadrature(Sphere(), 1 / 16, origin=(0.013, -0.029, 0.041))
    assert abs(q.area - 4 * math.pi) < 1e-4
