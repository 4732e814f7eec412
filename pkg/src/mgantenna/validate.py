"""Independent oracles and physics checks.

Quadrature oracles
------------------
The self-term oracles integrate the Hankel kernel numerically with
``scipy.integrate`` and share nothing with the closed forms in
:mod:`mgantenna.vsie` except the Bessel routines.  The Bessel oracle uses
mpmath's hypergeometric series at extended working precision.

Power balance
-------------
For purely reactive wires, a PEC ground and a lossless dielectric, the
power a line current ``I`` delivers per unit length is

    P_in = -1/2 Re{ conj(I) E(rho_s) }

where ``E`` is the total field at the source.  Split ``E`` into the field
of the induced currents, ``E_s``, and the source's own field.  The latter
is singular, but only its imaginary part is: near the axis
``H0(k r) = 1 - (2j/pi) ln(k r) + ...``, so the real part of the self-field
tends to ``-(k eta / 4) I``.  Hence

    P_in = -1/2 Re{ conj(I) E_s(rho_s) } + (k eta / 8) |I|^2

The radiated power follows from the distance-normalized far field over
the full circle, back lobes included:

    P_rad = 1/(2 eta) * integral_0^{2 pi} |F(theta)|^2 dtheta

With lossless loads the two agree.  The solver's reciprocal coupling
makes the agreement hold for the discrete model too, so the ratio tests
the bookkeeping rather than the mesh.  A resistive test load on one wire
dissipates power and pushes the ratio below one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import mpmath
import numpy as np
from scipy import integrate

from . import radiation, specfun, vsie
from .errors import ValidationError
from .geometry import DesignSpec, build_scene

FULL_CIRCLE_SAMPLES = 2880
ORACLE_DIGITS = 30


def _quad_complex(f, a, b, rel):
    re = integrate.quad(lambda t: f(t).real, a, b, epsabs=0.0, epsrel=rel, limit=500)[0]
    im = integrate.quad(lambda t: f(t).imag, a, b, epsabs=0.0, epsrel=rel, limit=500)[0]
    return complex(re, im)


def quadrature_self_term_surface(width: float, k: float, rel_tol: float = 1e-12) -> complex:
    """Adaptive quadrature of ``integral H0(k |y|) dy`` over ``[-w/2, w/2]``, split at 0."""
    half = 0.5 * width
    kernel = lambda y: specfun.hankel2_0(k * y)  # noqa: E731
    return 2.0 * _quad_complex(kernel, 0.0, half, rel_tol)


def quadrature_self_term_volume(dy: float, dz: float, k: float, rel_tol: float = 1e-10) -> complex:
    """Cartesian adaptive quadrature of ``H0(k R)`` over a centered ``dy`` x ``dz`` cell.

    By symmetry this is four times the integral over one quadrant.  The
    inner integral in ``z`` is regular away from ``y = 0`` and the outer
    integrand only has an integrable log singularity there.
    """
    a, b = 0.5 * dy, 0.5 * dz

    def inner(y, part):
        def f(z):
            r = math.hypot(y, z)
            if r == 0.0:
                return 0.0
            h = specfun.hankel2_0(k * r)
            return h.real if part == 0 else h.imag
        return integrate.quad(f, 0.0, b, epsabs=0.0, epsrel=rel_tol, limit=200)[0]

    re = integrate.quad(lambda y: inner(y, 0), 0.0, a, epsabs=0.0, epsrel=rel_tol, limit=200)[0]
    im = integrate.quad(lambda y: inner(y, 1), 0.0, a, epsabs=0.0, epsrel=rel_tol, limit=200)[0]
    return 4.0 * complex(re, im)


def bessel_oracle(order: int, kind: str, x, digits: int = ORACLE_DIGITS) -> np.ndarray:
    """Reference ``J_order`` (``kind="j"``) or ``Y_order`` (``kind="y"``) from mpmath."""
    fn = {"j": mpmath.besselj, "y": mpmath.bessely}[kind]
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    with mpmath.workdps(digits):
        out = np.array([float(fn(order, mpmath.mpf(float(v)))) for v in xs])
    return out


@dataclass(frozen=True)
class PowerBalance:
    P_input: float
    P_radiated: float

    @property
    def ratio(self) -> float:
        return self.P_radiated / self.P_input


def full_circle_power(currents: vsie.CurrentSolution, samples: int = FULL_CIRCLE_SAMPLES) -> float:
    """``1/(2 eta) * integral |F|^2`` over all 360 degrees (periodic trapezoid rule)."""
    theta = np.arange(samples) * (360.0 / samples) - 180.0
    F = radiation.far_field(currents, theta)
    return float(np.sum(np.abs(F) ** 2) * (2 * math.pi / samples) / (2 * currents.scene.eta))


def input_power(currents: vsie.CurrentSolution) -> float:
    scene = currents.scene
    I = scene.source_amplitude
    e_scat = vsie.source_reaction_field(currents)
    return float(-0.5 * (np.conj(I) * e_scat).real + scene.k * scene.eta * abs(I) ** 2 / 8)


def power_balance(spec: DesignSpec, X, test_resistance=None, scene=None,
                  samples: int = FULL_CIRCLE_SAMPLES) -> PowerBalance:
    """Input power versus full-circle radiated power for reactive loads ``X``.

    ``X`` must be real (reactances).  ``test_resistance`` (ohm/sq per wire)
    deliberately adds loss and exists only to exercise the check.
    """
    X = np.asarray(X)
    if np.iscomplexobj(X):
        if np.any(X.imag != 0):
            raise ValidationError("power balance needs purely reactive loads; got a complex X")
        X = X.real
    scene = build_scene(spec) if scene is None else scene
    currents = vsie.solve_design(scene, np.asarray(X, dtype=float), resistance=test_resistance)
    return PowerBalance(P_input=input_power(currents), P_radiated=full_circle_power(currents, samples))


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    n_unknowns: int
    D2D: float
    peak_angle: float
    max_residual: float
    rms_residual: float


@dataclass(frozen=True)
class ConvergenceStudy:
    theta_o: float
    rows: List[ConvergenceRow]

    @property
    def estimated_order(self) -> float:
        """Richardson order from the three finest levels (needs a constant refinement ratio)."""
        if len(self.rows) < 3:
            return math.nan
        a, b, c = (r.D2D for r in self.rows[-3:])
        ratio = self.rows[-1].level / self.rows[-2].level
        if b == c or a == b or (a - b) / (b - c) <= 0:
            return math.nan
        return math.log(abs((a - b) / (b - c))) / math.log(ratio)

    def change_db(self) -> float:
        """|D| change in dB between the two finest levels."""
        return abs(10 * math.log10(self.rows[-1].D2D / self.rows[-2].D2D))

    def peak_shift(self) -> float:
        return abs(self.rows[-1].peak_angle - self.rows[-2].peak_angle)


def convergence_study(spec: DesignSpec, X, theta_o: float = 0.0,
                      levels: Sequence[int] = (1, 2, 4),
                      sample_count: int = radiation.DEFAULT_SAMPLE_COUNT) -> ConvergenceStudy:
    """Repeat the analysis with every discretization density multiplied by each level."""
    levels = list(levels)
    if len(levels) < 2:
        raise ValidationError("a convergence study needs at least two levels")
    rows = []
    for level in levels:
        scene = build_scene(spec.refined(level))
        cur = vsie.solve_design(scene, X)
        pattern = radiation.sample_pattern(cur, sample_count)
        metrics = radiation.pattern_metrics(pattern)
        res = vsie.boundary_residual(cur)
        rows.append(ConvergenceRow(level, scene.size, radiation.directivity(pattern, theta_o),
                                   metrics.peak_angle, res.max, res.rms))
    return ConvergenceStudy(float(theta_o), rows)
