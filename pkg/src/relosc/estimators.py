"""Per-sweep observables and statistical error analysis.

Kinetic energy uses the thermodynamic estimator of the relativistic kernel,

    mean over links of  m*tau/r * K0(m*r)/K1(m*r) + (tau^2 - dq^2)/(tau*r^2),

with r = sqrt(tau^2 + dq^2); the Bessel ratio is evaluated in scaled form so
large arguments never underflow.  Potential and <q^2> are site means, the
density is a plain disjoint-bin histogram normalized to unit integral, and
the correlation function is the periodic path autocorrelation.

Errors come from blocking (block means over consecutive sweeps, never
crossing chain boundaries, block size grown until the error plateaus) and,
for quantities derived per chain, from jackknife over the independent
chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .sampler import PathObserver
from .specfun import bessel_k_ratio

MAX_OUT_OF_RANGE_FRACTION = 1e-3


class InsufficientDataError(ValueError):
    pass


class HistogramRangeError(ValueError):
    pass


@njit(cache=True)
def _path_scalars(path, m, omega, tau):
    # (kinetic, potential, q2) means for one path
    n = len(path)
    kin = 0.0
    pot = 0.0
    q2 = 0.0
    for i in range(n):
        dq = path[(i + 1) % n] - path[i]
        r2 = tau * tau + dq * dq
        r = math.sqrt(r2)
        kin += m * tau / r * bessel_k_ratio(m * r) + (tau * tau - dq * dq) / (tau * r2)
        q = path[i]
        pot += 0.5 * m * omega * omega * q * q
        q2 += q * q
    return kin / n, pot / n, q2 / n


@njit(cache=True)
def _hist_accumulate(path, q_min, h, counts):
    # bins [q_min + k*h, q_min + (k+1)*h); returns out-of-range count
    oor = 0
    nb = len(counts)
    for q in path:
        k = int(math.floor((q - q_min) / h))
        if 0 <= k < nb:
            counts[k] += 1
        else:
            oor += 1
    return oor


def kinetic_estimate(path, params):
    """Path-mean relativistic kinetic energy (includes the rest mass)."""
    return _path_scalars(np.asarray(path, dtype=float), params.m, params.omega, params.tau)[0]


def potential_estimate(path, params):
    """Path-mean potential energy (1/2) m omega^2 <q_i^2>."""
    return _path_scalars(np.asarray(path, dtype=float), params.m, params.omega, params.tau)[1]


def total_energy_estimate(path, params):
    """Kinetic plus potential estimate on one path."""
    k, v, _ = _path_scalars(np.asarray(path, dtype=float), params.m, params.omega, params.tau)
    return k + v


def q2_estimate(path):
    """Path-mean of q_i^2."""
    path = np.asarray(path, dtype=float)
    return float(np.mean(path * path))


def periodic_autocorrelation(path):
    """C(n) = mean_i q_i q_{i+n mod N} for all n, symmetrized exactly.

    Computed by FFT; C(n) = C(N-n) holds to the last bit because the two
    mathematically equal entries are averaged.
    """
    q = np.asarray(path, dtype=float)
    f = np.fft.rfft(q)
    c = np.fft.irfft(np.abs(f) ** 2, n=len(q)) / len(q)
    c[1:] = 0.5 * (c[1:] + c[:0:-1])
    return c


@dataclass
class ObservableSeries:
    """One scalar measurement per sweep per chain, in chain order.

    chain_bounds holds the start offsets of each chain plus the total
    length, so blocking never mixes sweeps from different chains.
    """

    name: str
    values: np.ndarray
    chain_bounds: np.ndarray

    @property
    def n_chains(self):
        return len(self.chain_bounds) - 1

    def chain_means(self):
        b = self.chain_bounds
        return np.array([self.values[b[i]:b[i + 1]].mean() for i in range(self.n_chains)])


@dataclass
class HistogramDensity:
    """Position density normalized so that sum(masses)*h = 1."""

    bin_edges: np.ndarray
    masses: np.ndarray
    total_samples: int
    out_of_range: int = 0
    chain_masses: np.ndarray | None = None  # per-chain normalized masses

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def mass_errors(self):
        """Per-bin standard errors from the scatter of independent chains."""
        if self.chain_masses is None or len(self.chain_masses) < 2:
            raise InsufficientDataError("per-bin errors need >= 2 chains")
        n = len(self.chain_masses)
        return np.std(self.chain_masses, axis=0, ddof=1) / math.sqrt(n)


@dataclass
class CorrelationSeries:
    """<q(t) q(t+n*tau)> for lags n = 0..n_t/2 with per-chain scatter errors."""

    lags: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    chain_values: np.ndarray | None = None  # (n_chains, n_lags+1)


def density_histogram(samples, bin_width, q_range):
    """Histogram of all site samples, normalized to unit integral.

    Out-of-range samples are counted and reported; more than 0.1% of them
    is an error (the range was chosen too small to cover the support).
    """
    if bin_width <= 0.0:
        raise ValueError("bin width must be > 0")
    q_min, q_max = float(q_range[0]), float(q_range[1])
    if q_max <= q_min:
        raise ValueError("empty histogram range")
    n_bins = int(round((q_max - q_min) / bin_width))
    if n_bins < 1 or abs(n_bins * bin_width - (q_max - q_min)) > 1e-9 * (q_max - q_min):
        raise ValueError("histogram range must be a whole number of bins")
    edges = q_min + bin_width * np.arange(n_bins + 1)
    counts = np.zeros(n_bins, dtype=np.int64)
    samples = np.asarray(samples, dtype=float).ravel()
    oor = _hist_accumulate(samples, q_min, bin_width, counts)
    total = len(samples)
    if total == 0:
        raise InsufficientDataError("no samples")
    if oor > MAX_OUT_OF_RANGE_FRACTION * total:
        raise HistogramRangeError(
            f"{oor} of {total} samples fall outside [{q_min}, {q_max}]")
    in_range = total - oor
    masses = counts / (in_range * bin_width)
    return HistogramDensity(edges, masses, total, oor)


def correlation(paths, n):
    """<q_i q_{i+n}> averaged over sites and over the given paths."""
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    n_t = paths.shape[1]
    if not 0 <= n <= n_t // 2:
        raise ValueError("lag must be in 0..n_t/2")
    return float(np.mean(paths * np.roll(paths, -n, axis=1)))


@dataclass
class BlockedStats:
    mean: float
    std_error: float
    block_size: int
    n_blocks: int
    plateau: bool = True


def blocked_error(series, block_size, chain_bounds=None):
    """Mean of block means and their standard error at a fixed block size.

    Blocks are consecutive within a chain; remainders are dropped.  Needs at
    least 10 blocks in total.
    """
    values = series.values if isinstance(series, ObservableSeries) else np.asarray(series, dtype=float)
    if chain_bounds is None:
        chain_bounds = series.chain_bounds if isinstance(series, ObservableSeries) \
            else np.array([0, len(values)])
    if block_size < 1:
        raise ValueError("block size must be >= 1")
    block_means = []
    for i in range(len(chain_bounds) - 1):
        seg = values[chain_bounds[i]:chain_bounds[i + 1]]
        nb = len(seg) // block_size
        if nb:
            block_means.append(seg[:nb * block_size].reshape(nb, block_size).mean(axis=1))
    if not block_means:
        raise InsufficientDataError("no complete blocks")
    bm = np.concatenate(block_means)
    if len(bm) < 10:
        raise InsufficientDataError(f"only {len(bm)} blocks; need at least 10")
    err = bm.std(ddof=1) / math.sqrt(len(bm))
    return BlockedStats(float(bm.mean()), float(err), block_size, len(bm))


def blocking_plateau(series, chain_bounds=None, growth_tol=0.05):
    """Blocking analysis with automatic plateau detection.

    Doubles the block size while at least 10 blocks remain; the reported
    error is taken at the first size where further doubling no longer grows
    the error estimate beyond its own sampling noise (correlations
    exhausted).  If no plateau is reached, the largest size is used and
    flagged; that error is then a lower bound.
    """
    stats = []
    b = 1
    while True:
        try:
            stats.append(blocked_error(series, b, chain_bounds))
        except InsufficientDataError:
            break
        b *= 2
    if not stats:
        raise InsufficientDataError("series too short for blocking")
    for j in range(len(stats) - 1):
        nxt = stats[j + 1]
        # the se estimate itself fluctuates ~ 1/sqrt(2 n_blocks)
        tol = max(growth_tol, 1.0 / math.sqrt(max(nxt.n_blocks, 2)))
        if nxt.std_error <= (1.0 + tol) * stats[j].std_error:
            # report the settled (larger-block) estimate
            return BlockedStats(nxt.mean, nxt.std_error, nxt.block_size,
                                nxt.n_blocks, True)
    st = stats[-1]
    return BlockedStats(st.mean, st.std_error, st.block_size, st.n_blocks, False)


def jackknife_chains(chain_values, stat_fn=None):
    """Leave-one-chain-out jackknife: (estimate, std_error).

    chain_values has one row (or scalar) per independent chain; stat_fn maps
    an array of retained rows to the derived scalar (default: mean).
    """
    x = np.asarray(chain_values, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise InsufficientDataError("jackknife needs >= 2 chains")
    if stat_fn is None:
        stat_fn = lambda rows: float(np.mean(rows))
    full = stat_fn(x)
    leave = np.array([stat_fn(np.delete(x, i, axis=0)) for i in range(n)])
    err = math.sqrt((n - 1) / n * np.sum((leave - leave.mean()) ** 2))
    return float(full), float(err)


def jackknife_fit(x, chain_rows, sigma, fit_fn, names):
    """Leave-one-chain-out errors for fitted parameters.

    chain_rows holds one row of y-values per independent chain; the fit is
    repeated on each retained-chain mean with the per-point sigma held
    fixed, and the parameter spread gives the errors.  Use this instead of
    the fit's curvature errors when the points share chains (their
    fluctuations are then correlated and curvature errors are too small).

    Returns (params, errors) dicts for the requested parameter names.
    """
    rows = np.asarray(chain_rows, dtype=float)
    n = rows.shape[0]
    if n < 2:
        raise InsufficientDataError("jackknife needs >= 2 chains")
    full = fit_fn(np.column_stack([x, rows.mean(axis=0), sigma]))
    leave = np.array([
        [fit_fn(np.column_stack([x, np.delete(rows, i, axis=0).mean(axis=0),
                                 sigma])).parameters[k] for k in names]
        for i in range(n)
    ])
    err = np.sqrt((n - 1) / n * np.sum((leave - leave.mean(axis=0)) ** 2, axis=0))
    return ({k: full.parameters[k] for k in names},
            {k: float(e) for k, e in zip(names, err)})


@dataclass(frozen=True)
class HistogramSpec:
    bin_width: float
    q_min: float
    q_max: float

    def edges(self):
        n_bins = int(round((self.q_max - self.q_min) / self.bin_width))
        if n_bins < 1 or abs(n_bins * self.bin_width - (self.q_max - self.q_min)) \
                > 1e-9 * (self.q_max - self.q_min):
            raise ValueError("histogram range must be a whole number of bins")
        return self.q_min + self.bin_width * np.arange(n_bins + 1)


@dataclass
class MeasurementResult:
    """Everything a measured run produces, merged over chains."""

    series: dict
    histogram: HistogramDensity | None = None
    correlation: CorrelationSeries | None = None

    def blocked(self, name):
        s = self.series[name]
        return blocking_plateau(s.values, s.chain_bounds)


class MeasurementObserver(PathObserver):
    """Standard per-sweep measurements: scalars, histogram, correlation."""

    def __init__(self, params, histogram=None, correlate=False, n_lags=None):
        self.params = params
        self.histogram = histogram
        self.correlate = correlate
        self.n_lags = params.n_t // 2 if n_lags is None else int(n_lags)
        if not 0 <= self.n_lags <= params.n_t // 2:
            raise ValueError("n_lags must be in 0..n_t/2")

    def begin_chain(self, chain_id):
        acc = {
            "kinetic": [], "potential": [], "q2": [],
            "n_sweeps": 0, "n_samples": 0,
        }
        if self.histogram is not None:
            acc["counts"] = np.zeros(len(self.histogram.edges()) - 1, dtype=np.int64)
            acc["oor"] = 0
        if self.correlate:
            acc["corr"] = np.zeros(self.n_lags + 1)
        return acc

    def observe(self, acc, chain_id, sweep_index, path):
        p = self.params
        kin, pot, q2 = _path_scalars(path, p.m, p.omega, p.tau)
        acc["kinetic"].append(kin)
        acc["potential"].append(pot)
        acc["q2"].append(q2)
        acc["n_sweeps"] += 1
        acc["n_samples"] += len(path)
        if self.histogram is not None:
            acc["oor"] += _hist_accumulate(path, self.histogram.q_min,
                                           self.histogram.bin_width, acc["counts"])
        if self.correlate:
            acc["corr"] += periodic_autocorrelation(path)[:self.n_lags + 1]

    def end_chain(self, acc):
        out = {
            "kinetic": np.array(acc["kinetic"]),
            "potential": np.array(acc["potential"]),
            "q2": np.array(acc["q2"]),
            "n_sweeps": acc["n_sweeps"],
            "n_samples": acc["n_samples"],
        }
        if self.histogram is not None:
            out["counts"] = acc["counts"]
            out["oor"] = acc["oor"]
        if self.correlate:
            out["corr"] = acc["corr"] / acc["n_sweeps"]
        return out

    def combine(self, payloads):
        bounds = np.concatenate([[0], np.cumsum([p["n_sweeps"] for p in payloads])])
        series = {}
        for name in ("kinetic", "potential", "q2"):
            series[name] = ObservableSeries(name, np.concatenate([p[name] for p in payloads]), bounds)
        series["energy"] = ObservableSeries(
            "energy", series["kinetic"].values + series["potential"].values, bounds)
        result = MeasurementResult(series=series)
        if self.histogram is not None:
            edges = self.histogram.edges()
            h = self.histogram.bin_width
            counts = np.sum([p["counts"] for p in payloads], axis=0)
            oor = int(sum(p["oor"] for p in payloads))
            total = int(sum(p["n_samples"] for p in payloads))
            if oor > MAX_OUT_OF_RANGE_FRACTION * total:
                raise HistogramRangeError(
                    f"{oor} of {total} samples fall outside the histogram range")
            chain_masses = np.array([
                p["counts"] / ((p["n_samples"] - p["oor"]) * h) for p in payloads])
            result.histogram = HistogramDensity(
                edges, counts / ((total - oor) * h), total, oor, chain_masses)
        if self.correlate:
            chain_corr = np.array([p["corr"] for p in payloads])
            values = chain_corr.mean(axis=0)
            if len(payloads) >= 2:
                errors = chain_corr.std(axis=0, ddof=1) / math.sqrt(len(payloads))
            else:
                errors = np.zeros_like(values)
            result.correlation = CorrelationSeries(
                np.arange(self.n_lags + 1), values, errors, chain_corr)
        return result
