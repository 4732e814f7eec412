import math

import numpy as np
import pytest

from mgantenna import specfun, validate, vsie
from mgantenna.errors import ValidationError
from mgantenna.geometry import DiscretizedScene, DesignSpec, build_scene
from mgantenna.optimize import starting_points


def test_bessel_oracle_values():
    np.testing.assert_allclose(validate.bessel_oracle(0, "j", [0.0, 1.0]), [1.0, 0.7651976865579666], rtol=1e-15)
    np.testing.assert_allclose(validate.bessel_oracle(1, "y", 1.0), [-0.7812128213002887], rtol=1e-15)


def test_oracle_agrees_with_specfun():
    x = np.geomspace(1e-3, 1e3, 60)
    np.testing.assert_allclose(specfun.bessel_j0(x), validate.bessel_oracle(0, "j", x), rtol=1e-10, atol=0)
    np.testing.assert_allclose(specfun.bessel_y1(x), validate.bessel_oracle(1, "y", x), rtol=1e-10, atol=0)


def test_surface_quadrature_small_width():
    k = 2 * math.pi
    for w in (1e-4, 1e-5):
        q = validate.quadrature_self_term_surface(w, k)
        assert q.real == pytest.approx(w, rel=1e-6)
    # the leading term is linear in the width
    a = validate.quadrature_self_term_surface(2e-5, k).real
    b = validate.quadrature_self_term_surface(1e-5, k).real
    assert a / b == pytest.approx(2.0, rel=1e-6)


def test_volume_quadrature_matches_small_cell_limit():
    # for k d -> 0 the cell integral tends to the area times the real part one
    k, d = 2 * math.pi, 1e-4
    q = validate.quadrature_self_term_volume(d, d, k)
    assert q.real == pytest.approx(d * d, rel=1e-6)
    assert q.imag > 0


def _lone_source(amplitude):
    scene = DiscretizedScene.from_elements(3e8, source_amplitude=amplitude, n_wires=0)
    return vsie.CurrentSolution(J=np.zeros(0, dtype=complex), scene=scene, X=np.zeros(0))


@pytest.mark.parametrize("amplitude", [1.0, 2.5 - 1j])
def test_isolated_source_balance(amplitude):
    cur = _lone_source(amplitude)
    P_in = validate.input_power(cur)
    scene = cur.scene
    assert P_in == pytest.approx(scene.k * scene.eta * abs(amplitude) ** 2 / 8, rel=1e-12)
    assert validate.full_circle_power(cur) / P_in == pytest.approx(1.0, abs=1e-6)


@pytest.fixture(scope="module")
def small_spec():
    return DesignSpec.in_wavelengths(aperture=2.0)


def test_design_balance(small_spec):
    for X in starting_points(small_spec.n_wires, small_spec.reactance_bounds, 3, 5):
        pb = validate.power_balance(small_spec, X)
        assert pb.P_input > 0 and pb.P_radiated > 0
        assert pb.ratio == pytest.approx(1.0, abs=1e-6)


def test_balance_independent_of_samples(small_spec):
    X = np.full(small_spec.n_wires, -11.0)
    a = validate.power_balance(small_spec, X, samples=1440).ratio
    b = validate.power_balance(small_spec, X, samples=5760).ratio
    assert a == pytest.approx(b, abs=1e-9)


def test_resistive_load_dissipates(small_spec):
    X = np.full(small_spec.n_wires, -11.0)
    R = np.zeros(small_spec.n_wires)
    R[3] = 50.0
    assert validate.power_balance(small_spec, X, test_resistance=R).ratio < 1.0


def test_complex_loads_rejected(small_spec):
    X = np.full(small_spec.n_wires, -11.0 + 1j)
    with pytest.raises(ValidationError):
        validate.power_balance(small_spec, X)
    # a complex array with zero imaginary part is still reactive
    pb = validate.power_balance(small_spec, np.full(small_spec.n_wires, -11.0 + 0j))
    assert pb.ratio == pytest.approx(1.0, abs=1e-6)


def test_reuses_given_scene(small_spec):
    scene = build_scene(small_spec)
    X = np.full(small_spec.n_wires, -10.8)
    a = validate.power_balance(small_spec, X, scene=scene)
    b = validate.power_balance(small_spec, X)
    assert a.ratio == pytest.approx(b.ratio, rel=1e-12)


def test_convergence_study_table():
    spec = DesignSpec.in_wavelengths(aperture=1.0)
    X = np.full(spec.n_wires, -11.0)
    study = validate.convergence_study(spec, X, 20.0, levels=(1, 2))
    assert [r.level for r in study.rows] == [1, 2]
    assert study.rows[1].n_unknowns > study.rows[0].n_unknowns
    assert all(r.D2D > 0 and r.max_residual >= r.rms_residual for r in study.rows)
    assert study.theta_o == 20.0
    assert math.isnan(study.estimated_order)
    assert study.change_db() == pytest.approx(abs(10 * math.log10(study.rows[1].D2D / study.rows[0].D2D)))
    with pytest.raises(ValidationError):
        validate.convergence_study(spec, X, levels=(1,))


def test_estimated_order():
    rows = [validate.ConvergenceRow(lv, 0, 1.0 + 2.0 ** (-2 * i), 0.0, 0.0, 0.0)
            for i, lv in enumerate((1, 2, 4))]
    assert validate.ConvergenceStudy(0.0, rows).estimated_order == pytest.approx(2.0)
