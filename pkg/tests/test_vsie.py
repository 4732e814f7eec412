import math
import warnings

import numpy as np
import pytest

from mgantenna import specfun, vsie
from mgantenna.errors import AccuracyWarning, SingularityError, SolverError, ValidationError
from mgantenna.geometry import (GROUND, WIRE, Cell, DesignSpec, DiscretizedScene, Segment,
                                build_scene)
from mgantenna.validate import quadrature_self_term_surface, quadrature_self_term_volume

F = 10e9


@pytest.fixture(scope="module")
def small():
    # two wavelengths, 8 wires: fast but exercises every element type
    return build_scene(DesignSpec.in_wavelengths(aperture=2.0))


def _lone_scene(segments=(), cells=(), source=(0.0, 0.0)):
    return DiscretizedScene.from_elements(F, segments, cells, source_position=source)


def test_incident_field_value():
    scene = _lone_scene([Segment((5.0, 0.0), 0.001, "ground")])
    r = 1.0 / scene.k
    e = vsie.incident_field(scene, (r, 0.0))
    ref = -(scene.k * scene.eta / 4) * complex(0.7651976866, -0.0882569642)
    assert e == pytest.approx(ref, rel=1e-9)


def test_incident_field_circular_and_linear():
    scene = _lone_scene([Segment((5.0, 0.0), 0.001, "ground")])
    ang = np.linspace(0, 2 * np.pi, 7)
    pts = 0.01 * np.column_stack([np.cos(ang), np.sin(ang)])
    e = vsie.incident_field(scene, pts)
    np.testing.assert_allclose(np.abs(e), abs(e[0]), rtol=1e-14)
    doubled = DiscretizedScene.from_elements(F, [Segment((5.0, 0.0), 0.001, "ground")],
                                             source_amplitude=2.0)
    np.testing.assert_array_equal(vsie.incident_field(doubled, pts), 2 * e)


def test_incident_field_at_source_raises():
    scene = _lone_scene([Segment((5.0, 0.0), 0.001, "ground")])
    with pytest.raises(SingularityError):
        vsie.incident_field(scene, (0.0, 0.0))


@pytest.mark.parametrize("kw", np.logspace(-3, math.log10(0.5), 7))
def test_self_term_surface_matches_quadrature(kw):
    k = 2 * np.pi
    w = kw / k
    got = vsie.self_term_surface(w, k)
    ref = quadrature_self_term_surface(w, k)
    assert abs(got - ref) <= 1e-8 * abs(ref)


def test_self_term_surface_limits():
    k = 2 * np.pi
    w = 1e-4
    val = vsie.self_term_surface(w, k)
    assert val.real == pytest.approx(w, rel=1e-6)
    assert val.imag > 0
    # halving the width roughly halves the integral, up to the log term
    half = vsie.self_term_surface(w / 2, k)
    assert half.real == pytest.approx(val.real / 2, rel=1e-6)
    slope = (val.imag / w - half.imag / (w / 2)) / math.log(2)
    assert slope == pytest.approx(-2 / math.pi, rel=1e-6)


def test_self_term_surface_precondition():
    with pytest.raises(ValidationError):
        vsie.self_term_surface(1.0, 1.0)


@pytest.mark.parametrize("aspect", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("kd", [1e-3, 0.05, 0.5])
def test_self_term_volume_matches_quadrature(aspect, kd):
    k = 2 * np.pi
    dy = kd / k
    dz = dy / aspect
    got = vsie.self_term_volume(dy, dz, k)
    ref = quadrature_self_term_volume(dy, dz, k)
    assert abs(got - ref) <= 1e-6 * abs(ref)


def test_self_term_volume_area_scaling():
    k = 2 * np.pi
    dy, dz = 1e-5, 5e-6
    assert vsie.self_term_volume(dy, dz, k).real == pytest.approx(dy * dz, rel=1e-8)


def test_equal_area_cells():
    k = 2 * np.pi
    dy = 0.05 / k
    square = vsie.self_term_volume(dy, dy, k)
    oblong = vsie.self_term_volume(dy * math.sqrt(2), dy / math.sqrt(2), k)
    # same area, so the disc approximation cannot tell them apart; the true
    # integrals differ by about 1.5 % through the log term
    assert vsie.self_term_volume_equal_area(dy, dy, k) == vsie.self_term_volume_equal_area(
        dy * math.sqrt(2), dy / math.sqrt(2), k)
    assert square.real == pytest.approx(oblong.real, rel=1e-4)
    assert 0.01 < abs(square - oblong) / abs(square) < 0.02
    circle = vsie.self_term_volume_equal_area(dy, dy, k)
    assert abs(circle - square) <= 0.01 * abs(square)


def test_self_term_volume_aspect_warning():
    with pytest.warns(AccuracyWarning):
        vsie.self_term_volume(1e-3, 5e-5, 2 * np.pi)
    with pytest.raises(ValidationError):
        vsie.self_term_volume(1.0, 1.0, 2 * np.pi)


def test_assemble_shape_and_loads(small):
    n = small.n_wires
    zero = vsie.assemble(small, np.zeros(n))
    X = np.linspace(-12, -10, n)
    loaded = vsie.assemble(small, X)
    assert zero.A.shape == (small.size, small.size)
    diff = loaded.A - zero.A
    wires = np.flatnonzero(small.kind == WIRE)
    np.testing.assert_allclose(np.diag(diff)[wires], -1j * X[small.wire_index[wires]])
    off = diff.copy()
    off[wires, wires] = 0
    assert not np.any(off)
    # unloaded wires are PEC rows: no extra diagonal term beyond the cell loads
    np.testing.assert_array_equal(zero.A[wires], vsie.impedance_matrix(small)[wires])


def test_equal_width_ground_block_symmetric(small):
    A = vsie.assemble(small, np.zeros(small.n_wires)).A
    g = np.flatnonzero(small.kind == GROUND)
    g = g[np.isclose(small.dy[g], small.dy[g].max())]
    block = A[np.ix_(g, g)]
    assert np.max(np.abs(block - block.T)) <= 1e-12 * np.max(np.abs(block))


def test_weighted_matrix_reciprocal(small):
    w = small.measure
    Z = vsie.impedance_matrix(small)
    S = w[:, None] * Z
    assert np.max(np.abs(S - S.T)) <= 1e-12 * np.max(np.abs(S))


def test_assemble_deterministic(small):
    X = np.full(small.n_wires, -11.0)
    a = vsie.assemble(build_scene(small.spec), X).A
    b = vsie.assemble(build_scene(small.spec), X).A
    np.testing.assert_array_equal(a, b)


def test_assemble_rejects_wrong_length(small):
    with pytest.raises(ValidationError):
        vsie.assemble(small, np.zeros(small.n_wires + 1))


def test_one_by_one_solve_by_hand():
    w = 1e-3
    scene = _lone_scene([Segment((0.0, 0.01), w, "ground")])
    cur = vsie.solve_design(scene, np.zeros(0))
    k, eta = scene.k, scene.eta
    e_inc = vsie.incident_field(scene, (0.0, 0.01))
    self_term = vsie.self_term_surface(w, k)
    # reciprocal coupling keeps J0 for the radiating part of the self-term
    z11 = -(k * eta / 4) * complex(w, self_term.imag)
    assert cur.J[0] == pytest.approx(-e_inc / z11, rel=1e-10)


def test_zero_rhs_gives_zero_currents(small):
    system = vsie.assemble(small, np.full(small.n_wires, -11.0))
    system = vsie.SystemMatrix(system.A, np.zeros_like(system.rhs), small, system.X)
    assert not np.any(vsie.solve(system).J)


def test_linearity_in_rhs(small):
    system = vsie.assemble(small, np.full(small.n_wires, -11.0))
    c = 0.3 - 2.0j
    a = vsie.solve(system).J
    b = vsie.solve(vsie.SystemMatrix(system.A, c * system.rhs, small, system.X)).J
    np.testing.assert_allclose(b, c * a, rtol=1e-12, atol=1e-12 * np.abs(a).max())


def test_residual_contract_on_design(scene):
    cur = vsie.solve_design(scene, np.full(scene.n_wires, -11.0))
    assert cur.residual <= 1e-10
    assert len(cur.J_w) == scene.n_w and len(cur.J_g) == scene.n_g and len(cur.J_v) == scene.n_v
    assert np.all(np.isfinite(cur.J))


def test_singular_matrix_raises(small):
    A = np.ones((3, 3), dtype=complex)
    with pytest.raises(SolverError):
        vsie.factorize(A, design=np.zeros(1))


def test_solver_error_names_design(small):
    A = np.zeros((2, 2), dtype=complex)
    with pytest.raises(SolverError) as info:
        vsie.factorize(A, design=np.array([1.5, -2.5]))
    assert info.value.design is not None


def test_scattered_field_single_segment():
    w = 1e-4
    scene = _lone_scene([Segment((0.0, 0.0), w, "ground")], source=(1.0, 1.0))
    cur = vsie.CurrentSolution(np.array([2.0 + 1.0j]), scene, np.zeros(0))
    d = 0.5
    e = vsie.scattered_field(cur, (d, 0.3))
    r = math.hypot(d, 0.3)
    ref = -(scene.k * scene.eta / 4) * specfun.hankel2_0(scene.k * r) * cur.J[0] * w
    assert e == pytest.approx(ref, rel=1e-9)
    zero = vsie.CurrentSolution(np.zeros(1, dtype=complex), scene, np.zeros(0))
    assert vsie.scattered_field(zero, (d, 0.3)) == 0


def test_scattered_field_superposition(small):
    rng = np.random.default_rng(1)
    a = rng.normal(size=small.size) + 1j * rng.normal(size=small.size)
    b = rng.normal(size=small.size) + 1j * rng.normal(size=small.size)
    pts = np.array([[0.001, 0.02], [0.01, -0.01], [0.0, 0.05]])
    X = np.zeros(small.n_wires)
    fa = vsie.scattered_field(vsie.CurrentSolution(a, small, X), pts)
    fb = vsie.scattered_field(vsie.CurrentSolution(b, small, X), pts)
    fab = vsie.scattered_field(vsie.CurrentSolution(a + b, small, X), pts)
    np.testing.assert_allclose(fab, fa + fb, rtol=1e-12)


def test_near_field_without_scatterers_is_incident():
    scene = _lone_scene([Segment((50.0, 0.0), 1e-4, "ground")])
    cur = vsie.CurrentSolution(np.zeros(1, dtype=complex), scene, np.zeros(0))
    y = np.linspace(-0.05, 0.05, 5)
    z = np.linspace(0.01, 0.03, 3)
    m = vsie.near_field_map(cur, y, z)
    yy, zz = np.meshgrid(y, z)
    ref = vsie.incident_field(scene, np.column_stack([yy.ravel(), zz.ravel()])).reshape(yy.shape)
    np.testing.assert_allclose(m, ref, rtol=1e-14)


def test_near_field_nudges_source_point():
    scene = _lone_scene([Segment((50.0, 0.0), 1e-4, "ground")])
    cur = vsie.CurrentSolution(np.zeros(1, dtype=complex), scene, np.zeros(0))
    m = vsie.near_field_map(cur, [0.0], [0.0])
    assert np.all(np.isfinite(m))


def test_near_field_symmetric_design(small):
    cur = vsie.solve_design(small, np.full(small.n_wires, -11.0))
    lam = small.wavelength
    y = np.linspace(-1.5, 1.5, 31) * lam
    z = np.array([0.0, 0.2, 1.0]) * lam
    m = vsie.near_field_map(cur, y, z)
    assert np.max(np.abs(m - m[:, ::-1])) <= 1e-8 * np.max(np.abs(m))


def test_near_field_vanishes_on_ground(design, scene):
    lam = design.wavelength
    cur = vsie.solve_design(scene, np.linspace(-11.5, -10.5, scene.n_wires))
    y = scene.centers[scene.kind == GROUND, 0]
    z = np.linspace(0, 2, 81)[:9] * lam
    m = np.abs(vsie.near_field_map(cur, y, z))
    assert m[0].max() <= 0.02 * m.max()


def test_collocation_residual_zero(small):
    cur = vsie.solve_design(small, np.full(small.n_wires, -11.0))
    assert vsie.boundary_residual(cur, at="collocation").max < 1e-10
    with pytest.raises(ValidationError):
        vsie.boundary_residual(cur, at="edges")


def test_quarter_point_residual_at_default(scene):
    X = np.random.default_rng(0).uniform(-11.5, -10.5, scene.n_wires)
    res = vsie.boundary_residual(vsie.solve_design(scene, X))
    assert res.rms <= 0.05


def test_quarter_point_residual_shrinks_with_refinement():
    spec = DesignSpec.in_wavelengths(aperture=2.0)
    X = np.zeros(spec.n_wires)
    coarse = vsie.boundary_residual(vsie.solve_design(build_scene(spec), X), feed_clearance=0.05)
    fine = vsie.boundary_residual(vsie.solve_design(build_scene(spec.refined(2)), X),
                                  feed_clearance=0.05)
    assert fine.rms < coarse.rms
    assert fine.max < coarse.max


def test_feed_clearance_drops_points(small):
    cur = vsie.solve_design(small, np.zeros(small.n_wires))
    full = vsie.boundary_residual(cur)
    cleared = vsie.boundary_residual(cur, feed_clearance=0.05)
    assert cleared.values.size < full.values.size
    assert cleared.max < full.max
