"""Physical parameters, discretized closed paths, and log-domain path weights.

The system is H = sqrt(p^2 + m^2) + (1/2) m w^2 q^2 in natural units
(hbar = c = 1).  Imaginary time is sliced into n_t steps of length tau; a
path is a periodic array q[0..n_t-1] with q[n_t] identified with q[0].  The
short-time kinetic kernel between adjacent slices is

    (m / pi) * (1 + (dq/tau)^2)^(-1/2) * K1(m*tau*sqrt(1 + (dq/tau)^2))

and each site additionally carries exp(-tau*V(q_i)).  Around the closed
loop every site's potential factor appears exactly once, so attaching it to
the left kernel argument is a pure convention with no effect on
observables.

Everything lives in log domain: K1 underflows already near argument 700,
while the log form stays finite up to ~1e6.  Acceptance ratios must be
formed as differences of logs before exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .specfun import log_bessel_k1

# Below this kernel argument the kernel is the Cauchy (|p|-limit) form to
# better than 1e-3 relative; users wanting the massless limit pick m small
# enough that m*tau*sqrt(1+(dq/tau)^2) stays under it.
CAUCHY_REGIME_THRESHOLD = 1e-4


@dataclass(frozen=True)
class SimParams:
    """Physical and lattice parameters.

    m: rest mass (> 0; m = 0 exactly is rejected, see CAUCHY_REGIME_THRESHOLD)
    omega: oscillator frequency (>= 0; 0 gives a free particle)
    tau: imaginary-time step (> 0)
    n_t: number of time slices (>= 3); beta = n_t*tau, theta = 1/beta
    """

    m: float
    omega: float
    tau: float
    n_t: int

    def __post_init__(self):
        if not self.m > 0.0:
            raise ValueError("mass m must be > 0 (the kernel requires it); "
                             "for the massless limit use a small positive m")
        if self.omega < 0.0:
            raise ValueError("frequency omega must be >= 0")
        if not self.tau > 0.0:
            raise ValueError("time step tau must be > 0")
        if self.n_t < 3:
            raise ValueError("n_t must be at least 3")

    @property
    def beta(self):
        return self.n_t * self.tau

    @property
    def theta(self):
        return 1.0 / self.beta


def estimated_gap(params):
    """Crude first-excitation gap estimate used for beta-adequacy warnings.

    The harmonic gap is omega; the ultra-relativistic gap is
    1.0471*(m*omega^2)^(1/3).  The smaller of the two is a safe lower bound
    in either regime.
    """
    if params.omega == 0.0:
        return 0.0
    ultra = 1.0471405640237368 * (params.m * params.omega ** 2) ** (1.0 / 3.0)
    return min(params.omega, ultra)


def new_path(params, value=0.0):
    """A fresh constant path (cold start by default)."""
    return np.full(params.n_t, float(value))


def validate_path(path, params):
    path = np.asarray(path, dtype=float)
    if path.ndim != 1 or len(path) != params.n_t:
        raise ValueError("path must be a 1-D array of length n_t")
    if not np.all(np.isfinite(path)):
        raise ValueError("path entries must be finite")
    return path


@njit(cache=True)
def _potential(q, m, omega):
    return 0.5 * m * omega * omega * q * q


@njit(cache=True)
def _log_kinetic_kernel(dq, m, tau):
    u = dq / tau
    s2 = 1.0 + u * u
    return math.log(m / math.pi) - 0.5 * math.log(s2) + log_bessel_k1(m * tau * math.sqrt(s2))


@njit(cache=True)
def _log_site_weight(path, i, m, omega, tau):
    n = len(path)
    q = path[i]
    q_prev = path[(i - 1) % n]
    q_next = path[(i + 1) % n]
    return (_log_kinetic_kernel(q - q_prev, m, tau)
            + _log_kinetic_kernel(q_next - q, m, tau)
            - tau * _potential(q, m, omega))


@njit(cache=True)
def _log_path_weight(path, m, omega, tau):
    n = len(path)
    total = 0.0
    for i in range(n):
        dq = path[(i + 1) % n] - path[i]
        total += _log_kinetic_kernel(dq, m, tau) - tau * _potential(path[i], m, omega)
    return total


def potential(q, params):
    """V(q) = (1/2) m omega^2 q^2."""
    return _potential(q, params.m, params.omega)


def log_kinetic_kernel(dq, params):
    """ln of the single-link kinetic kernel; even in dq, decreasing in |dq|."""
    return _log_kinetic_kernel(dq, params.m, params.tau)


def log_site_weight(path, i, params):
    """ln pi(q_i): the two kernels touching site i minus tau*V(q_i).

    Indices wrap periodically.  exp of this equals the fixed-site part of
    the density matrix up to q_i-independent factors.
    """
    if not 0 <= i < params.n_t:
        raise IndexError("site index out of range")
    return _log_site_weight(np.asarray(path, dtype=float), i, params.m, params.omega, params.tau)


def log_path_weight(path, params):
    """ln of the full closed-path weight: all link kernels, each site's
    potential counted exactly once."""
    path = validate_path(path, params)
    return _log_path_weight(path, params.m, params.omega, params.tau)
