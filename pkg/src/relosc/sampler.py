"""Metropolis sampling of closed paths.

Single-site updates in sequential (typewriter) order, N hits per site.  The
proposal is a symmetric mixture: with probability 0.9 a uniform window of
half-width delta, with probability 0.1 a wide window of half-width
10*delta.  The wide component is what keeps the heavy-tailed
ultra-relativistic kernel mixing; since both components are even in
(q' - q) the acceptance rule is the plain min(1, pi'/pi).

delta is tuned toward ~50% acceptance during the first two thirds of
thermalization and frozen afterwards, so detailed balance holds exactly
during every measurement sweep.

Chains are independent: chain k draws from a Philox counter-based generator
seeded with SeedSequence([master_seed, k]).  Results are merged in chain
order, so a run is bit-reproducible for any worker count.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import _log_kinetic_kernel, _potential, new_path

WIDE_FRACTION = 0.1
WIDE_SCALE = 10.0
TARGET_ACCEPTANCE = 0.5
TUNING_FACTOR_BOUNDS = (0.8, 1.25)


@dataclass(frozen=True)
class SamplerConfig:
    """Markov-chain run parameters.

    n_paths: number of independent chains
    n_sweeps: measurement sweeps per chain
    n_hits: proposal attempts per site per sweep
    delta: initial proposal half-width (tuned during thermalization)
    therm_sweeps: discarded thermalization sweeps (not measured)
    seed: master seed; chain k derives its stream from (seed, k)
    tuning: adjust delta toward 50% acceptance while thermalizing
    hot_start: start from uniform random positions instead of q = 0
    """

    n_paths: int
    n_sweeps: int
    n_hits: int = 10
    delta: float = 0.1
    therm_sweeps: int = 500
    seed: int = 1
    tuning: bool = True
    hot_start: bool = False

    def __post_init__(self):
        if self.n_paths < 1 or self.n_sweeps < 1 or self.n_hits < 1:
            raise ValueError("n_paths, n_sweeps and n_hits must be positive")
        if not self.delta > 0.0:
            raise ValueError("proposal half-width delta must be > 0")
        if self.therm_sweeps < 0:
            raise ValueError("therm_sweeps must be >= 0")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class ChainState:
    """Mutable state of one Markov chain."""

    path: np.ndarray
    rng: np.random.Generator
    delta: float
    sweep_index: int = 0
    accept_count: int = 0
    proposal_count: int = 0


def chain_rng(seed, chain_id):
    """The deterministic per-chain generator (counter-based, period >= 2^128)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chain_id)])))


def init_chain_state(params, config, chain_id):
    rng = chain_rng(config.seed, chain_id)
    if config.hot_start:
        if params.omega > 0.0:
            w = 3.0 / math.sqrt(2.0 * params.m * params.omega)
        else:
            w = 1.0
        path = rng.uniform(-w, w, params.n_t)
    else:
        path = new_path(params)
    return ChainState(path=path, rng=rng, delta=config.delta)


def propose(q, delta, rng):
    """Symmetric local proposal: q + uniform(-delta, +delta)."""
    if delta < 0.0:
        raise ValueError("delta must be >= 0")
    return q + rng.uniform(-delta, delta)


@njit(cache=True)
def _hits_at_site(path, i, m, omega, tau, delta, n_hits, rng):
    # n_hits Metropolis attempts at site i; returns the number accepted.
    n = len(path)
    q_prev = path[(i - 1) % n]
    q_next = path[(i + 1) % n]
    q = path[i]
    lw_old = (_log_kinetic_kernel(q - q_prev, m, tau)
              + _log_kinetic_kernel(q_next - q, m, tau)
              - tau * _potential(q, m, omega))
    accepted = 0
    for _ in range(n_hits):
        w = delta
        if rng.random() < WIDE_FRACTION:
            w = WIDE_SCALE * delta
        qp = q + rng.uniform(-w, w)
        lw_new = (_log_kinetic_kernel(qp - q_prev, m, tau)
                  + _log_kinetic_kernel(q_next - qp, m, tau)
                  - tau * _potential(qp, m, omega))
        d = lw_new - lw_old
        if d >= 0.0 or rng.random() < math.exp(d):
            q = qp
            lw_old = lw_new
            accepted += 1
    path[i] = q
    return accepted


@njit(cache=True)
def _sweep_kernel(path, m, omega, tau, delta, n_hits, rng):
    accepted = 0
    for i in range(len(path)):
        accepted += _hits_at_site(path, i, m, omega, tau, delta, n_hits, rng)
    return accepted


@njit(cache=True)
def _site_update_series(path, i, m, omega, tau, delta, n_updates, rng):
    # repeated single-hit updates of one site, recording its value after each;
    # used by the stationary-distribution checks.
    out = np.empty(n_updates)
    for k in range(n_updates):
        _hits_at_site(path, i, m, omega, tau, delta, 1, rng)
        out[k] = path[i]
    return out


def metropolis_site_update(state, i, params, config):
    """One proposal at site i; returns True when accepted.

    Rejection leaves the path bit-identical.
    """
    if not 0 <= i < params.n_t:
        raise IndexError("site index out of range")
    acc = _hits_at_site(state.path, i, params.m, params.omega, params.tau,
                        state.delta, 1, state.rng)
    state.proposal_count += 1
    state.accept_count += acc
    return bool(acc)


def sweep(state, params, config):
    """One full sweep: every site in order, n_hits attempts each.

    Returns the sweep's acceptance fraction.
    """
    accepted = _sweep_kernel(state.path, params.m, params.omega, params.tau,
                             state.delta, config.n_hits, state.rng)
    proposals = params.n_t * config.n_hits
    state.accept_count += accepted
    state.proposal_count += proposals
    state.sweep_index += 1
    return accepted / proposals


def thermalize(state, params, config):
    """Run the thermalization sweeps, tuning delta toward 50% acceptance.

    delta is adjusted multiplicatively during the first two thirds of the
    sweeps and held fixed for the rest, so the chain re-equilibrates under
    the frozen kernel before measurements start.  Counters are reset at the
    end; returns the tuned delta.
    """
    tune_until = (2 * config.therm_sweeps) // 3 if config.tuning else 0
    lo, hi = TUNING_FACTOR_BOUNDS
    for s in range(config.therm_sweeps):
        rate = sweep(state, params, config)
        if s < tune_until:
            factor = min(max(rate / TARGET_ACCEPTANCE, lo), hi)
            state.delta = min(max(state.delta * factor, 1e-9), 1e9)
    state.sweep_index = 0
    state.accept_count = 0
    state.proposal_count = 0
    return state.delta


class PathObserver:
    """Per-sweep measurement hook driven by run_chain.

    begin_chain/observe/end_chain run inside the worker that owns the
    chain; end_chain's payload must be picklable.  combine receives the
    payloads in chain order (fixed merge order for reproducibility).
    """

    def begin_chain(self, chain_id):
        return None

    def observe(self, acc, chain_id, sweep_index, path):
        raise NotImplementedError

    def end_chain(self, acc):
        return acc

    def combine(self, payloads):
        return payloads


class FunctionObserver(PathObserver):
    """Adapter: records fn(chain_id, sweep_index, path) per sweep.

    fn must be picklable (module-level) when run_chain uses jobs > 1.
    """

    def __init__(self, fn):
        self.fn = fn

    def begin_chain(self, chain_id):
        return []

    def observe(self, acc, chain_id, sweep_index, path):
        acc.append(self.fn(chain_id, sweep_index, path))

    def combine(self, payloads):
        return payloads


@dataclass
class ChainSummary:
    """Merged counters and per-chain metadata from a run."""

    n_chains: int
    n_sweeps: int
    proposals: int
    accepts: int
    chains: list = field(default_factory=list)
    result: object = None

    @property
    def acceptance_rate(self):
        return self.accepts / self.proposals if self.proposals else 0.0


def _run_single_chain(args):
    chain_id, params, config, observer = args
    state = init_chain_state(params, config, chain_id)
    delta = thermalize(state, params, config)
    acc = observer.begin_chain(chain_id)
    for s in range(config.n_sweeps):
        sweep(state, params, config)
        observer.observe(acc, chain_id, s, state.path)
    meta = {
        "chain_id": chain_id,
        "delta": delta,
        "acceptance_rate": state.accept_count / state.proposal_count,
        "accepts": state.accept_count,
        "proposals": state.proposal_count,
        "therm_sweeps": config.therm_sweeps,
    }
    return meta, observer.end_chain(acc)


def run_chain(params, config, observer, jobs=1):
    """Run n_paths independent chains, thermalized then measured.

    The observer sees every measurement sweep of every chain.  Identical
    (seed, params, config) gives bit-identical results for any jobs count;
    chains are merged in chain-id order.
    """
    args = [(k, params, config, observer) for k in range(config.n_paths)]
    if jobs <= 1 or config.n_paths == 1:
        outputs = [_run_single_chain(a) for a in args]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(min(jobs, config.n_paths)) as pool:
            outputs = pool.map(_run_single_chain, args)
    metas = [o[0] for o in outputs]
    payloads = [o[1] for o in outputs]
    summary = ChainSummary(
        n_chains=config.n_paths,
        n_sweeps=config.n_sweeps,
        proposals=sum(m["proposals"] for m in metas),
        accepts=sum(m["accepts"] for m in metas),
        chains=metas,
        result=observer.combine(payloads),
    )
    return summary
