"""Independent numerical oracles used to freeze and cross-check constants.

Everything here deliberately avoids the package's own numerics: plain
bisection instead of the grid-scan root finder, quadrature instead of the
closed-form normal cdf, finite-difference Newton instead of closed-form
algebra, and explicit nested evaluation instead of the decoder's folded
affine state.  Constants frozen into the tests were produced by these
routines (or by 50-digit decimal arithmetic on exact polynomial forms) and
are cited next to their definitions.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate

# Largest root of 5 x^3 - 20 x^2 + 18 x + 2 on [1, 2], the polynomial left
# after clearing logarithms from the two-receiver sum-rate equation at P = 10:
# (1 + 10 x - 5 x^2)^2 = 1 + 10 x.  50-digit bisection, truncated to double.
LAMBDA_2_10 = 1.610586077871746919

# Same elimination at P = 1: x^3 - 4 x^2 + 4 = 0 on [1, 2].
LAMBDA_2_1 = 1.193936566474630448

# Four receivers, P = 10: largest real root of (1 + 10x - 2.5x^2)^4 - (1 + 10x)^3
# on [1, 4], via companion-matrix eigenvalues of the expanded polynomial.
LAMBDA_4_10 = 2.2859501875901556

# Stationary correlation for the two-user scheme at P = 10, g = 1, zero common
# noise, unit private noises.  With D = 2 (1 + x) and both residual-variance
# factors equal to 6 - 5x, the fixed-point equation x + map(x) = 0 collapses to
# 55 x^2 - 127 x + 60 = 0, whose root in [0, 1] is (127 - sqrt(2929)) / 110.
RHO_STAR_10 = 0.662543304446006973
# Residual contraction at that point: a1*^2 = (6 - 5 rho*) / 11.
A1_STAR_SQ_10 = 0.244298497979087739

# Closed-form constants downstream of LAMBDA_2_10 (50-digit decimal):
A_SQ_2_10 = 0.241783986263454229     # per-step contraction squared
LAMBDA0_2_10 = 0.389413922128253080  # embedding eigenvalue
B_2_10 = 0.580716091634187291
GAMMA_2_10 = -0.08895385298471476
U1_2_10 = 0.434221110335689344       # warmup beta * b at step 1
P0_2_10 = 1.502300345717691584       # embedding variance (P / M)(lambda0 + gamma)
BETA_2_10 = 0.810671959629165905

# Quadrature values of the standard normal cdf (scipy.integrate.quad).
PHI_1 = 0.841344746068543
PHI_M2_5 = 0.006209665325776104
PHI_0_673 = 0.7495263545390305


def bisect(f, lo: float, hi: float, iters: int = 200) -> float:
    """Plain bisection; assumes one sign change on [lo, hi]."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise ValueError("no sign change for the oracle bisection")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def normal_cdf_quad(x: float) -> float:
    """Standard normal cdf by adaptive quadrature from zero."""
    val, _ = integrate.quad(
        lambda t: math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi),
        0.0, x, epsabs=1e-15, epsrel=1e-13,
    )
    return 0.5 + val


def mp_solve_b_gamma(lam: float, M: int, P: float, start) -> tuple[float, float]:
    """Solve the two (b, gamma) defining identities by 60-digit Newton.

    The identities are written out literally here, so this shares no code
    with the library's closed form.  High precision is not a luxury: the two
    residual surfaces cross at an extremely shallow angle (Jacobian condition
    number around 1e10), so float64 residual noise of ~1e-16 smears the
    crossing over ~1e-6.  At 60 significant digits the same plain Newton
    iteration pins it far below 1e-12.
    """
    with mpmath.workdps(60):
        lam_mp = mpmath.mpf(lam)
        p_mp = mpmath.mpf(P)
        snr = 1 + p_mp * lam_mp

        def residuals(b, gamma):
            r10 = gamma - (snr / (1 + (p_mp / M) * lam_mp * (M - lam_mp))) * (
                gamma + (M / p_mp) * b * b
            )
            inner = M * b * b + (p_mp / M) * lam_mp * lam_mp / snr
            r11 = gamma - (inner * inner / (4 * b * b) - lam_mp)
            return r10, r11

        root = mpmath.findroot(
            residuals,
            (mpmath.mpf(start[0]), mpmath.mpf(start[1])),
            solver="mdnewton",
            tol=mpmath.mpf(10) ** -40,
            maxsteps=200,
        )
        return float(root[0]), float(root[1])


def affine_chain(coeffs, s: float) -> float:
    """Evaluate w_1(w_2(...w_n(s))) by explicit nesting.

    ``coeffs`` is a sequence of (a_k, c_k) pairs with w_k(s) = a_k s + c_k,
    ordered k = 1..n; the innermost map is the last pair.
    """
    val = s
    for a_k, c_k in reversed(list(coeffs)):
        val = a_k * val + c_k
    return val
