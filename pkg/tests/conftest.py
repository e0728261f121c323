"""Shared slow-but-independent reference implementations for the tests.

The Bessel oracle integrates the representations

    K0(x) e^x = int_0^inf exp(-x (cosh t - 1)) dt
    K1(x) e^x = int_0^inf exp(-x (cosh t - 1)) cosh t dt

with adaptive quadrature; the Airy oracle is arbitrary-precision mpmath.
Neither shares any code with the package's evaluations.
"""

import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad


def k0_oracle(x):
    """K0(x) by quadrature; accurate to ~1e-13 relative on [1e-8, 700]."""
    val, _ = quad(lambda t: math.exp(-x * (math.cosh(t) - 1.0)),
                  0.0, math.acosh(1.0 + 60.0 / x) if x < 30 else 8.0,
                  epsabs=0.0, epsrel=1e-13, limit=400)
    return val * math.exp(-x)


def k1_oracle(x):
    val, _ = quad(lambda t: math.exp(-x * (math.cosh(t) - 1.0)) * math.cosh(t),
                  0.0, math.acosh(1.0 + 60.0 / x) if x < 30 else 8.0,
                  epsabs=0.0, epsrel=1e-13, limit=400)
    return val * math.exp(-x)


def log_k1_oracle(x):
    """ln K1(x) via the scaled quadrature (finite far beyond underflow)."""
    val, _ = quad(lambda t: math.exp(-x * (math.cosh(t) - 1.0)) * math.cosh(t),
                  0.0, math.acosh(1.0 + 60.0 / x) if x < 30 else 8.0,
                  epsabs=0.0, epsrel=1e-13, limit=400)
    return math.log(val) - x


def airy_oracle(x):
    """(Ai, Ai') at 40 significant digits."""
    mpmath.mp.dps = 40
    return (float(mpmath.airyai(mpmath.mpf(x))),
            float(mpmath.airyai(mpmath.mpf(x), 1)))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
