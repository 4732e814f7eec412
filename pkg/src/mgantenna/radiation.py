"""Far-field pattern, 2D directivity and pattern metrics.

Angles are measured from broadside (+z) toward +y, in degrees, and the
upper half-space is ``[-90, 90]``.  Far fields are distance-normalized:
``E(rho, theta) ~ F(theta) exp(-j k rho) / sqrt(rho)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MetricsError, ValidationError
from .geometry import DiscretizedScene
from .vsie import CurrentSolution

DEFAULT_SAMPLE_COUNT = 181


def far_field_prefactor(k: float, eta: float) -> complex:
    # large-argument H0(kR) ~ sqrt(2j / (pi k R)) exp(-j k R)
    return -(k * eta / 4) * np.sqrt(2j / (math.pi * k))


def radiation_operator(scene: DiscretizedScene, theta_deg):
    """Return ``(C, f_src)`` such that ``F(theta) = C @ J + f_src``."""
    th = np.radians(np.atleast_1d(np.asarray(theta_deg, dtype=float)))
    k = scene.k
    pref = far_field_prefactor(k, scene.eta)
    s, c = np.sin(th)[:, None], np.cos(th)[:, None]
    phase = k * (scene.centers[:, 0][None, :] * s + scene.centers[:, 1][None, :] * c)
    C = pref * scene.measure[None, :] * np.exp(1j * phase)
    ys, zs = scene.source_position
    f_src = pref * scene.source_amplitude * np.exp(1j * k * (ys * s[:, 0] + zs * c[:, 0]))
    return C, f_src


def far_field(currents: CurrentSolution, theta_deg):
    """Far-field pattern of the induced currents plus the line source."""
    C, f_src = radiation_operator(currents.scene, theta_deg)
    F = C @ currents.J + f_src
    return complex(F[0]) if np.ndim(theta_deg) == 0 else F


@dataclass(frozen=True, eq=False)
class RadiationPattern:
    theta_deg: np.ndarray
    E_ff: np.ndarray

    @property
    def sample_count(self) -> int:
        return len(self.theta_deg)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.E_ff) ** 2


def angle_grid(sample_count: int = DEFAULT_SAMPLE_COUNT) -> np.ndarray:
    if sample_count < DEFAULT_SAMPLE_COUNT:
        raise ValidationError(f"sample_count must be >= {DEFAULT_SAMPLE_COUNT}, got {sample_count}")
    if sample_count % 2 == 0:
        raise ValidationError(f"sample_count must be odd so broadside is sampled, got {sample_count}")
    return np.linspace(-90.0, 90.0, sample_count)


def sample_pattern(currents: CurrentSolution, sample_count: int = DEFAULT_SAMPLE_COUNT) -> RadiationPattern:
    theta = angle_grid(sample_count)
    return RadiationPattern(theta, far_field(currents, theta))


def trapezoid_weights(theta_deg) -> np.ndarray:
    """Composite-trapezoid weights (radians) on a uniform grid."""
    n = len(theta_deg)
    h = math.radians(theta_deg[1] - theta_deg[0])
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def radiated_integral(pattern: RadiationPattern) -> float:
    return float(trapezoid_weights(pattern.theta_deg) @ pattern.power)


def directivity(pattern: RadiationPattern, theta_o: float) -> float:
    """``|F(theta_o)|^2 / integral |F|^2 dtheta`` over the upper half-space.

    ``|F|^2`` is interpolated linearly when ``theta_o`` is between samples.
    """
    th = pattern.theta_deg
    if not th[0] <= theta_o <= th[-1]:
        raise ValidationError(f"theta_o={theta_o} outside pattern domain [{th[0]}, {th[-1]}]")
    denom = radiated_integral(pattern)
    if not denom > 0:
        raise MetricsError("directivity undefined for an all-zero pattern")
    return float(np.interp(theta_o, th, pattern.power) / denom)


def directivity_pattern(pattern: RadiationPattern) -> np.ndarray:
    """Directivity at every sample angle."""
    denom = radiated_integral(pattern)
    if not denom > 0:
        raise MetricsError("directivity undefined for an all-zero pattern")
    return pattern.power / denom


@dataclass(frozen=True)
class PatternMetrics:
    peak_angle: float
    peak_db: float
    max_sidelobe_db: float
    beamwidth_3db: float

    def as_dict(self):
        return {
            "peak_angle_deg": self.peak_angle,
            "peak_db": self.peak_db,
            "max_sidelobe_db": self.max_sidelobe_db,
            "beamwidth_3db_deg": self.beamwidth_3db,
        }


def _peak_index(p, theta):
    # ties (grating lobes) resolve to the sample closest to broadside
    top = np.flatnonzero(p >= p.max() * (1 - 1e-12))
    return int(top[np.argmin(np.abs(theta[top]))])


def main_lobe(p, i0, floor_ratio=0.01):
    """Index range ``[lo, hi]`` of the lobe around ``i0``.

    The lobe ends at the first local minimum or at the first sample more
    than 20 dB below the peak, whichever comes first.
    """
    floor = p[i0] * floor_ratio
    hi = i0
    while hi + 1 < len(p) and p[hi + 1] < p[hi] and p[hi] >= floor:
        hi += 1
    lo = i0
    while lo - 1 >= 0 and p[lo - 1] < p[lo] and p[lo] >= floor:
        lo -= 1
    return lo, hi


def _local_maxima(p):
    n = len(p)
    idx = []
    for i in range(n):
        left = p[i - 1] if i > 0 else -np.inf
        right = p[i + 1] if i < n - 1 else -np.inf
        if p[i] > left and p[i] >= right:
            idx.append(i)
    return np.array(idx, dtype=int)


def _half_power_crossing(p, theta, i0, step):
    half = p[i0] / 2
    i = i0
    while 0 <= i + step < len(p):
        if p[i + step] <= half:
            # linear interpolation between samples i and i + step
            frac = (p[i] - half) / (p[i] - p[i + step])
            return theta[i] + frac * (theta[i + step] - theta[i])
        i += step
    return theta[i]


def pattern_metrics(pattern: RadiationPattern) -> PatternMetrics:
    """Peak, sidelobe level and 3 dB beamwidth of a sampled pattern.

    Sidelobes are local maxima of ``|F|^2`` outside the main lobe; the end
    samples count as maxima when they exceed their single neighbour.  When
    there are none, ``max_sidelobe_db`` is ``-inf``.
    """
    p = pattern.power
    th = pattern.theta_deg
    pmax = p.max()
    if not pmax > 0:
        raise MetricsError("metrics undefined for an all-zero pattern")
    if p.max() - p.min() <= 1e-12 * pmax:
        raise MetricsError("metrics undefined for a flat pattern")
    i0 = _peak_index(p, th)
    lo, hi = main_lobe(p, i0)
    maxima = _local_maxima(p)
    side = maxima[(maxima < lo) | (maxima > hi)]
    sll = 10 * math.log10(p[side].max() / p[i0]) if side.size else -math.inf
    width = _half_power_crossing(p, th, i0, +1) - _half_power_crossing(p, th, i0, -1)
    return PatternMetrics(
        peak_angle=float(th[i0]),
        peak_db=float(10 * math.log10(p[i0])),
        max_sidelobe_db=float(sll),
        beamwidth_3db=float(width),
    )
