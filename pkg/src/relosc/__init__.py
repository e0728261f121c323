"""Path-integral Monte Carlo for the one-dimensional relativistic oscillator
H = sqrt(p^2 + m^2) + (1/2) m omega^2 q^2, with analytic oracles for the
non-relativistic and ultra-relativistic limits and a weighted least-squares
fit harness."""

__version__ = "0.1.0"

from .config import ExperimentConfig, parse_config, serialize_config
from .estimators import (MeasurementObserver, blocked_error, blocking_plateau,
                         density_histogram, kinetic_estimate,
                         potential_estimate, q2_estimate,
                         total_energy_estimate)
from .fits import fit_constant, fit_exponential, fit_gaussian, fit_power
from .model import SimParams, log_kinetic_kernel, log_path_weight, log_site_weight, potential
from .oracles import grid_diagonalize, grid_oracle, sho_oracle, ultra_density, ultra_oracle
from .sampler import (ChainState, SamplerConfig, init_chain_state,
                      metropolis_site_update, propose, run_chain, sweep,
                      thermalize)
from .specfun import (airy_ai, airy_ai_prime, airy_ai_prime_zero, airy_ai_zero,
                      bessel_k0, bessel_k1, bessel_k_ratio, log_bessel_k1)
