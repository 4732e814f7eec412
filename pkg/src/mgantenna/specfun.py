"""Real-argument Bessel functions of order 0 and 1 and the matching Hankel functions.

Two regimes, switched at ``x = 2``:

* ``x <= 2``: truncated power series (with the logarithmic part for Y).
* ``x > 2``: modulus/phase form ``sqrt(2/(pi x)) (P cos(chi) -/+ Q sin(chi))``
  where ``P`` and ``Q`` come from Chebyshev tables in ``t = (2/x)**2``.
  The tables are produced by ``tools/fit_bessel_asymptotics.py``.

All functions accept scalars or arrays and return the same shape.  They
keep no state and are safe to call concurrently.
"""
from __future__ import annotations

import numpy as np

from ._bessel_tables import SWITCH_POINT, _P0_CHEB, _P1_CHEB, _Q0_CHEB, _Q1_CHEB
from .errors import DomainError

__all__ = [
    "SWITCH_POINT",
    "bessel_j0",
    "bessel_j1",
    "bessel_y0",
    "bessel_y1",
    "hankel2_0",
    "hankel2_1",
    "hankel2_0_regular",
]

_EULER_GAMMA = 0.57721566490153286061
_TWO_OVER_PI = 2.0 / np.pi
_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_N_SERIES = 16


def _series_tables(n):
    m = np.arange(n, dtype=float)
    fact = np.cumprod(np.concatenate(([1.0], np.arange(1, n, dtype=float))))
    harmonic = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, n, dtype=float))))
    sign = (-1.0) ** m
    # coefficients in z = x**2 / 4
    j0 = sign / fact**2
    j1 = sign / (fact * fact * (m + 1.0))  # (x/2) * sum z^m / (m! (m+1)!)
    y0 = -sign * harmonic / fact**2  # (-1)^(m+1) H_m / (m!)^2
    harmonic_next = harmonic + 1.0 / (m + 1.0)
    y1 = sign * (harmonic + harmonic_next) / (fact * fact * (m + 1.0))
    # Horner wants highest degree first
    return j0[::-1].copy(), j1[::-1].copy(), y0[::-1].copy(), y1[::-1].copy()


_J0_SER, _J1_SER, _Y0_SER, _Y1_SER = _series_tables(_N_SERIES)


def _horner(coeffs, z):
    acc = np.zeros_like(z)
    for c in coeffs:
        acc = acc * z + c
    return acc


def _clenshaw(coeffs, s):
    b1 = np.zeros_like(s)
    b2 = np.zeros_like(s)
    two_s = 2.0 * s
    for c in coeffs[:0:-1]:
        b1, b2 = two_s * b1 - b2 + c, b1
    return s * b1 - b2 + coeffs[0]


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _check(x, allow_zero):
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite")
    bad = x < 0 if allow_zero else x <= 0
    if np.any(bad):
        raise DomainError(
            "Bessel argument must be %s, got min %r"
            % ("non-negative" if allow_zero else "positive", float(np.min(x)))
        )


def _out(values, scalar):
    return float(values) if scalar else values


def _large(x, order):
    """Modulus/phase evaluation above the switch point; returns (J, Y)."""
    t = (SWITCH_POINT / x) ** 2
    s = 2.0 * t - 1.0
    if order == 0:
        p = _clenshaw(_P0_CHEB, s)
        q = _clenshaw(_Q0_CHEB, s) * (SWITCH_POINT / x)
    else:
        p = _clenshaw(_P1_CHEB, s)
        q = _clenshaw(_Q1_CHEB, s) * (SWITCH_POINT / x)
    # cos/sin of chi = x - (2n+1)pi/4 built from cos(x), sin(x) so that the
    # exact double x is reduced by libm rather than x - pi/4 in floating point
    c = np.cos(x)
    sn = np.sin(x)
    if order == 0:
        cos_chi = (c + sn) * _INV_SQRT2
        sin_chi = (sn - c) * _INV_SQRT2
    else:
        cos_chi = (sn - c) * _INV_SQRT2
        sin_chi = -(c + sn) * _INV_SQRT2
    amp = np.sqrt(_TWO_OVER_PI / x)
    return amp * (p * cos_chi - q * sin_chi), amp * (p * sin_chi + q * cos_chi)


def _j0(x):
    out = np.empty_like(x)
    small = x <= SWITCH_POINT
    xs = x[small]
    out[small] = _horner(_J0_SER, 0.25 * xs * xs)
    if not np.all(small):
        out[~small] = _large(x[~small], 0)[0]
    return out


def _j1(x):
    out = np.empty_like(x)
    small = x <= SWITCH_POINT
    xs = x[small]
    out[small] = 0.5 * xs * _horner(_J1_SER, 0.25 * xs * xs)
    if not np.all(small):
        out[~small] = _large(x[~small], 1)[0]
    return out


def _y0(x):
    out = np.empty_like(x)
    small = x <= SWITCH_POINT
    xs = x[small]
    z = 0.25 * xs * xs
    j0 = _horner(_J0_SER, z)
    out[small] = _TWO_OVER_PI * ((np.log(0.5 * xs) + _EULER_GAMMA) * j0 + _horner(_Y0_SER, z))
    if not np.all(small):
        out[~small] = _large(x[~small], 0)[1]
    return out


def _y1(x):
    out = np.empty_like(x)
    small = x <= SWITCH_POINT
    xs = x[small]
    z = 0.25 * xs * xs
    j1 = 0.5 * xs * _horner(_J1_SER, z)
    out[small] = (
        _TWO_OVER_PI * (np.log(0.5 * xs) + _EULER_GAMMA) * j1
        - _TWO_OVER_PI / xs
        - 0.5 * xs * _horner(_Y1_SER, z) / np.pi
    )
    if not np.all(small):
        out[~small] = _large(x[~small], 1)[1]
    return out


def bessel_j0(x):
    """Bessel function of the first kind, order 0, for ``x >= 0``."""
    arr, scalar = _as_array(x)
    _check(arr, allow_zero=True)
    return _out(_j0(np.atleast_1d(arr)).reshape(arr.shape), scalar)


def bessel_j1(x):
    """Bessel function of the first kind, order 1, for ``x >= 0``."""
    arr, scalar = _as_array(x)
    _check(arr, allow_zero=True)
    return _out(_j1(np.atleast_1d(arr)).reshape(arr.shape), scalar)


def bessel_y0(x):
    """Bessel function of the second kind, order 0, for ``x > 0``."""
    arr, scalar = _as_array(x)
    _check(arr, allow_zero=False)
    return _out(_y0(np.atleast_1d(arr)).reshape(arr.shape), scalar)


def bessel_y1(x):
    """Bessel function of the second kind, order 1, for ``x > 0``."""
    arr, scalar = _as_array(x)
    _check(arr, allow_zero=False)
    return _out(_y1(np.atleast_1d(arr)).reshape(arr.shape), scalar)


def hankel2_0(x):
    """Hankel function of the second kind, order 0: ``J0(x) - 1j*Y0(x)``.

    The singular point ``x = 0`` is rejected; coincident source and
    observation points are handled by the integrated self-terms in
    :mod:`mgantenna.vsie`.
    """
    arr, scalar = _as_array(x)
    _check(arr, allow_zero=False)
    flat = np.atleast_1d(arr)
    out = _hankel_pair(flat, 0).reshape(arr.shape)
    return complex(out) if scalar else out


def hankel2_1(x):
    """Hankel function of the second kind, order 1: ``J1(x) - 1j*Y1(x)``."""
    arr, scalar = _as_array(x)
    _check(arr, allow_zero=False)
    flat = np.atleast_1d(arr)
    out = _hankel_pair(flat, 1).reshape(arr.shape)
    return complex(out) if scalar else out


def _hankel_pair(x, order):
    # one pass over the large-argument branch for both J and Y
    out = np.empty(x.shape, dtype=complex)
    small = x <= SWITCH_POINT
    if np.any(small):
        xs = x[small]
        if order == 0:
            out[small] = _j0(xs) - 1j * _y0(xs)
        else:
            out[small] = _j1(xs) - 1j * _y1(xs)
    if not np.all(small):
        j, y = _large(x[~small], order)
        out[~small] = j - 1j * y
    return out


def hankel2_0_regular(x):
    """``H0(x) + (2j/pi) ln(x)``: the Hankel kernel with its log singularity removed.

    Finite and continuous on ``x >= 0``; the value at 0 is
    ``1 - (2j/pi) (gamma - ln 2)``.  Used for singularity-subtracted
    quadrature of near-coincident kernel integrals.
    """
    arr, scalar = _as_array(x)
    _check(arr, allow_zero=True)
    flat = np.atleast_1d(arr)
    out = np.empty(flat.shape, dtype=complex)
    small = flat <= SWITCH_POINT
    if np.any(small):
        xs = flat[small]
        z = 0.25 * xs * xs
        j0 = _horner(_J0_SER, z)
        j0_minus_1 = z * _horner(_J0_SER[:-1], z)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_part = np.where(xs > 0, np.log(xs) * j0_minus_1, 0.0)
        y0_reg = _TWO_OVER_PI * (log_part + (_EULER_GAMMA - np.log(2.0)) * j0 + _horner(_Y0_SER, z))
        out[small] = j0 - 1j * y0_reg
    if not np.all(small):
        xl = flat[~small]
        j, y = _large(xl, 0)
        out[~small] = j - 1j * (y - _TWO_OVER_PI * np.log(xl))
    out = out.reshape(arr.shape)
    return complex(out) if scalar else out
