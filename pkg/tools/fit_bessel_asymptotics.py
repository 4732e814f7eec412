"""Regenerate the large-argument Chebyshev tables used by ``mgantenna.specfun``.

For x >= 2 the order-0/1 Bessel functions are written as

    J_n(x) = sqrt(2/(pi x)) * (P_n(x) cos(chi) - Q_n(x) sin(chi))
    Y_n(x) = sqrt(2/(pi x)) * (P_n(x) sin(chi) + Q_n(x) cos(chi))

with chi = x - (2n+1) pi/4.  P_n and (x/2) Q_n are smooth functions of
t = (2/x)^2 on (0, 1]; this script samples them with mpmath at Chebyshev
nodes and prints interpolating Chebyshev coefficients in s = 2t - 1.

Usage: python tools/fit_bessel_asymptotics.py [n_terms]
"""
import sys

import mpmath as mp
import numpy as np

SWITCH = 2


def modulus_phase_factors(order, x):
    x = mp.mpf(x)
    chi = x - (2 * order + 1) * mp.pi / 4
    j = mp.besselj(order, x)
    y = mp.bessely(order, x)
    scale = mp.sqrt(mp.pi * x / 2)
    p = scale * (j * mp.cos(chi) + y * mp.sin(chi))
    q = scale * (y * mp.cos(chi) - j * mp.sin(chi))
    return p, q


def chebyshev_coefficients(order, n_terms):
    k = np.arange(n_terms)
    nodes = [mp.cos(mp.pi * (kk + mp.mpf(1) / 2) / n_terms) for kk in k]
    p_vals, q_vals = [], []
    for s in nodes:
        t = (s + 1) / 2
        x = SWITCH / mp.sqrt(t)
        p, q = modulus_phase_factors(order, x)
        p_vals.append(p)
        q_vals.append(q * x / SWITCH)
    # discrete Chebyshev transform at extended precision
    out = []
    for vals in (p_vals, q_vals):
        coeffs = []
        for j in range(n_terms):
            acc = mp.fsum(vals[i] * mp.cos(mp.pi * j * (i + mp.mpf(1) / 2) / n_terms)
                          for i in range(n_terms))
            c = 2 * acc / n_terms
            coeffs.append(c / 2 if j == 0 else c)
        out.append([float(c) for c in coeffs])
    return out


def main():
    n_terms = int(sys.argv[1]) if len(sys.argv) > 1 else 48
    mp.mp.dps = 50
    for order in (0, 1):
        p, q = chebyshev_coefficients(order, n_terms)
        print(f"_P{order}_CHEB = np.array([")
        for c in p:
            print(f"    {c!r},")
        print("])")
        print(f"_Q{order}_CHEB = np.array([")
        for c in q:
            print(f"    {c!r},")
        print("])")


if __name__ == "__main__":
    main()
