"""Acceptance gate: every release criterion, one printed PASS/FAIL line each.

Statistical criteria run the fixed desk-scale configurations (seeded, so
reruns are deterministic) and use blocked standard errors; "within k sigma"
always means k combined standard errors.  Run with `pytest -v -s` to see
the per-criterion lines.

Budget on one core: the non-relativistic ensemble and its two scan
companions take ~1 minute each, the ultra-relativistic ensemble ~7
minutes, the step-size extrapolation pair ~3 minutes.
"""

import math
import os

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chi2

from relosc import SimParams, SamplerConfig, run_chain, MeasurementObserver
from relosc.cli import main as cli_main
from relosc.estimators import HistogramSpec, jackknife_chains, jackknife_fit
from relosc.fits import fit_exponential, fit_gaussian, fit_power
from relosc.model import log_kinetic_kernel, log_site_weight, new_path
from relosc.oracles import (default_p_max, gap_coefficient, grid_diagonalize,
                            grid_oracle, lambda0, ultra_oracle)
from relosc.sampler import _site_update_series, chain_rng
from relosc.specfun import airy_ai, airy_ai_prime, bessel_k0, bessel_k1, log_bessel_k1

from conftest import airy_oracle, k0_oracle, k1_oracle, log_k1_oracle


def report(num, desc, ok, detail):
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}  {desc}: {detail}"
    print(line)
    assert ok, line


def blocked(result, name):
    st = result.blocked(name)
    return st.mean, st.std_error


# ----------------------------------------------------------------------
# shared desk-scale ensembles
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def nonrel():
    # m = 100, omega = 1, tau = 0.1, N_t = 100; N_p = 100, N_s = 2000
    params = SimParams(m=100.0, omega=1.0, tau=0.1, n_t=100)
    config = SamplerConfig(n_paths=100, n_sweeps=2000, n_hits=10,
                           therm_sweeps=500, seed=20260809)
    obs = MeasurementObserver(params, histogram=HistogramSpec(0.007, -0.35, 0.35),
                              correlate=True, n_lags=50)
    return params, run_chain(params, config, obs).result


@pytest.fixture(scope="module")
def mass_scan(nonrel):
    # q2 means for m in {50, 100, 200} at omega = 1 (100 reused from nonrel)
    points = {100.0: blocked(nonrel[1], "q2")}
    for m_val in (50.0, 200.0):
        params = SimParams(m=m_val, omega=1.0, tau=0.1, n_t=100)
        config = SamplerConfig(n_paths=100, n_sweeps=2000, n_hits=10,
                               therm_sweeps=500, seed=20260809)
        result = run_chain(params, config, MeasurementObserver(params)).result
        points[m_val] = blocked(result, "q2")
    return points


@pytest.fixture(scope="module")
def ultra():
    # m = 0.1, omega = 100, tau = 0.01, N_t = 1000; N_p = 50, N_s = 2000
    params = SimParams(m=0.1, omega=100.0, tau=0.01, n_t=1000)
    config = SamplerConfig(n_paths=50, n_sweeps=2000, n_hits=10,
                           therm_sweeps=1000, seed=20260810)
    obs = MeasurementObserver(params, histogram=HistogramSpec(0.008, -0.4, 0.4),
                              correlate=True, n_lags=100)
    return params, run_chain(params, config, obs).result, ultra_oracle(0.1, 100.0)


# ----------------------------------------------------------------------
# deterministic criteria
# ----------------------------------------------------------------------

def test_criterion_01_spectral_constants():
    lam0 = lambda0()
    gap_c = gap_coefficient()
    gap_ref_point = gap_c * (0.1 * 100.0 ** 2) ** (1.0 / 3.0)
    ok = (abs(lam0 - 0.808617) < 1e-6
          and abs(gap_c - 1.0471) < 1e-4
          and abs(gap_ref_point - 10.471) < 1e-3)
    report(1, "Airy spectral constants",
           ok, f"lambda0 = {lam0:.8f}, gap coeff = {gap_c:.6f}, "
               f"gap(0.1, 100) = {gap_ref_point:.4f}")


def test_criterion_02_special_function_suite():
    worst_k = 0.0
    for x in np.geomspace(1e-8, 700.0, 120):
        worst_k = max(worst_k,
                      abs(bessel_k0(x) / k0_oracle(x) - 1.0),
                      abs(bessel_k1(x) / k1_oracle(x) - 1.0))
    worst_log = max(abs(log_bessel_k1(x) - log_k1_oracle(x))
                    for x in np.geomspace(1e-3, 700.0, 40))
    worst_ai = 0.0
    worst_ai_rel = 0.0
    for x in np.linspace(-30.0, 30.0, 601):
        ai, aip = airy_oracle(x)
        worst_ai = max(worst_ai, abs(airy_ai(x) - ai), abs(airy_ai_prime(x) - aip))
        if x >= 0.0:
            worst_ai_rel = max(worst_ai_rel, abs(airy_ai(x) / ai - 1.0),
                               abs(airy_ai_prime(x) / aip - 1.0))
    worst_d = 0.0
    for x in (0.1, 1.0, 10.0):
        h = 1e-5 * x
        d = (bessel_k0(x + h) - bessel_k0(x - h)) / (2.0 * h)
        worst_d = max(worst_d, abs(d / -bessel_k1(x) - 1.0))
    ok = worst_k < 1e-10 and worst_log < 1e-10 and worst_ai < 1e-10 \
        and worst_ai_rel < 1e-10 and worst_d < 1e-6
    report(2, "special functions vs quadrature/series oracles",
           ok, f"K rel {worst_k:.1e}, logK1 abs {worst_log:.1e}, "
               f"Ai abs {worst_ai:.1e} (rel on x>=0 {worst_ai_rel:.1e}), "
               f"dK0/dx=-K1 to {worst_d:.1e}")


def test_criterion_03_grid_diagonalization():
    heavy, _ = grid_diagonalize(100.0, 1.0, default_p_max(100.0, 1.0), 4096)
    light, _ = grid_diagonalize(0.1, 100.0, default_p_max(0.1, 100.0), 4096)
    rel_h = abs(heavy[0] / 100.5 - 1.0)
    rel_l = abs(light[0] / 8.086 - 1.0)
    ok = rel_h < 1e-3 and rel_l < 1e-3
    report(3, "momentum-grid eigenvalues at n_points = 4096",
           ok, f"E0(100, 1) = {heavy[0]:.5f} ({rel_h:.1e}), "
               f"E0(0.1, 100) = {light[0]:.5f} ({rel_l:.1e})")


def test_criterion_04_kernel_limits():
    # Gaussian limit at m*tau = 50 over the kernel's bulk support
    p = SimParams(m=500.0, omega=1.0, tau=0.1, n_t=10)
    base = log_kinetic_kernel(0.0, p)
    worst_g = max(abs((log_kinetic_kernel(dq, p) - base) + 500.0 * dq * dq / 0.2)
                  for dq in np.linspace(0.0, math.sqrt(2.0 * 0.1 / 500.0), 40))
    # Cauchy limit for kernel arguments <= 1e-4
    pc = SimParams(m=1e-6, omega=1.0, tau=0.01, n_t=10)
    worst_c = 0.0
    for dq in np.linspace(0.0, 0.5, 40):
        assert 1e-6 * math.hypot(0.01, dq) <= 1e-4
        kernel = math.exp(log_kinetic_kernel(dq, pc))
        cauchy = 0.01 / (math.pi * (1e-4 + dq * dq))
        worst_c = max(worst_c, abs(kernel / cauchy - 1.0))
    ok = worst_g < 0.02 and worst_c < 1e-3
    report(4, "kernel Gaussian and Cauchy limits",
           ok, f"Gaussian |dlog| {worst_g:.4f} (< 0.02), Cauchy rel {worst_c:.1e} (< 1e-3)")


# ----------------------------------------------------------------------
# non-relativistic ensemble
# ----------------------------------------------------------------------

def test_criterion_05_nonrel_virial_energies(nonrel):
    _, result = nonrel
    t_mean, t_err = blocked(result, "kinetic")
    v_mean, v_err = blocked(result, "potential")
    zt = (t_mean - 100.0 - 0.25) / t_err
    zv = (v_mean - 0.25) / v_err
    ok = abs(zt) <= 3.0 and abs(zv) <= 3.0 and t_err <= 0.02 and v_err <= 0.02
    report(5, "<T>-m and <V> equal omega/4 = 0.25",
           ok, f"<T>-m = {t_mean - 100.0:.4f} +/- {t_err:.4f} (z = {zt:+.2f}), "
               f"<V> = {v_mean:.4f} +/- {v_err:.4f} (z = {zv:+.2f})")


def test_criterion_06_nonrel_q2_and_mass_scan(nonrel, mass_scan):
    _, result = nonrel
    q2_mean, q2_err = blocked(result, "q2")
    z_point = (q2_mean - 0.005) / q2_err
    pts = np.array([(m, v[0], v[1]) for m, v in sorted(mass_scan.items())])
    fit = fit_power(pts, -1.0)
    a, ea = fit.parameters["a"], fit.std_errors["a"]
    z_fit = (a - 0.5) / ea
    ok = abs(z_point) <= 3.0 and abs(z_fit) <= 3.0
    report(6, "<q^2> = 1/(2 m omega) and its 1/m mass scan",
           ok, f"<q^2> = {q2_mean:.6f} +/- {q2_err:.2g} (z = {z_point:+.2f}); "
               f"scan amplitude a = {a:.4f} +/- {ea:.4f} (z = {z_fit:+.2f})")


def test_criterion_07_nonrel_density_width(nonrel):
    # bins share chains, so the width error comes from jackknife over chains
    _, result = nonrel
    hist = result.histogram
    err = hist.mass_errors()
    keep = err > 0.0
    params_fit, errs = jackknife_fit(hist.centers[keep],
                                     hist.chain_masses[:, keep], err[keep],
                                     fit_gaussian, ("b",))
    b, eb = params_fit["b"], errs["b"]
    z = (b - 100.0) / eb
    ok = abs(z) <= 3.0 and abs(b / 100.0 - 1.0) <= 0.05
    report(7, "density Gaussian width = m*omega = 100",
           ok, f"b = {b:.2f} +/- {eb:.2f} (z = {z:+.2f}, off by {b - 100.0:+.2f})")


def test_criterion_08_nonrel_correlator(nonrel):
    # fit window s <= 1.5 keeps the periodic wraparound term below 0.1%;
    # lag points share chains, so errors come from jackknife over chains
    params, result = nonrel
    corr = result.correlation
    keep = (corr.lags * params.tau <= 1.5) & (corr.errors > 0.0)
    params_fit, errs = jackknife_fit(corr.lags[keep] * params.tau,
                                     corr.chain_values[:, keep],
                                     corr.errors[keep], fit_exponential,
                                     ("a", "b"))
    a, ea = params_fit["a"], errs["a"]
    b, eb = params_fit["b"], errs["b"]
    za = (a - 0.005) / ea
    zb = (b - 1.0) / eb
    ok = abs(za) <= 3.0 and abs(zb) <= 3.0
    report(8, "correlator amplitude 1/(2 m omega) and rate omega",
           ok, f"a = {a:.6f} +/- {ea:.2g} (z = {za:+.2f}), "
               f"b = {b:.4f} +/- {eb:.4f} (z = {zb:+.2f})")


def test_nonrel_correlator_peak_at_zero_lag(nonrel):
    # series invariant: C(0) >= |C(n)| in the harmonic regime (3 sigma)
    _, result = nonrel
    corr = result.correlation
    c0, e0 = corr.values[0], corr.errors[0]
    for n in range(1, len(corr.lags)):
        slack = 3.0 * math.hypot(e0, corr.errors[n])
        assert c0 >= abs(corr.values[n]) - slack


# ----------------------------------------------------------------------
# ultra-relativistic ensemble
# ----------------------------------------------------------------------

def test_criterion_09_ultra_energy(ultra):
    _, result, oracle = ultra
    e_mean, e_err = blocked(result, "energy")
    z = (e_mean - oracle.ground_energy) / e_err
    rel = abs(e_mean / oracle.ground_energy - 1.0)
    ok = abs(z) <= 3.0 and rel <= 0.02
    report(9, "ground energy = 0.8086*(m omega^2)^(1/3) = 8.086",
           ok, f"E = {e_mean:.4f} +/- {e_err:.4f} (z = {z:+.2f}, {100 * rel:.2f}%)")


def test_criterion_10_ultra_virial(ultra):
    _, result, _ = ultra
    kin = result.series["kinetic"].chain_means()
    pot = result.series["potential"].chain_means()
    ratio, err = jackknife_chains(np.column_stack([kin, pot]),
                                  lambda rows: rows[:, 0].mean() / rows[:, 1].mean())
    z = (ratio - 2.0) / err
    ok = abs(z) <= 3.0
    report(10, "virial ratio <T>/<V> = 2",
           ok, f"ratio = {ratio:.4f} +/- {err:.4f} (z = {z:+.2f})")


def test_criterion_11_ultra_q2(ultra):
    _, result, oracle = ultra
    q2_mean, q2_err = blocked(result, "q2")
    z = (q2_mean - oracle.q_squared) / q2_err
    ok = abs(z) <= 3.0
    report(11, "<q^2> = 2 lambda0 / (3 (m omega^2)^(2/3)) = 0.0053908",
           ok, f"<q^2> = {q2_mean:.7f} +/- {q2_err:.2g} (z = {z:+.2f})")


def test_criterion_12_ultra_correlator(ultra):
    params, result, _ = ultra
    corr = result.correlation
    keep = (corr.lags * params.tau <= 0.6) & (corr.errors > 0.0)
    params_fit, errs = jackknife_fit(corr.lags[keep] * params.tau,
                                     corr.chain_values[:, keep],
                                     corr.errors[keep], fit_exponential,
                                     ("a", "b"))
    a, ea = params_fit["a"], errs["a"]
    b, eb = params_fit["b"], errs["b"]
    za = (a - 0.00539) / ea
    rate_ok = (10.47 - 3.0 * eb) <= b <= (10.60 + 3.0 * eb)
    ok = abs(za) <= 3.0 and rate_ok
    report(12, "correlator amplitude 0.00539, rate in [10.47, 10.60]",
           ok, f"a = {a:.6f} +/- {ea:.2g} (z = {za:+.2f}), "
               f"b = {b:.3f} +/- {eb:.3f}")


def test_criterion_13_ultra_density_vs_oracle(ultra):
    _, result, oracle = ultra
    hist = result.histogram
    err = hist.mass_errors()
    centers = hist.centers
    # oracle density renormalized over the histogram window
    fine = np.linspace(hist.bin_edges[0], hist.bin_edges[-1], 4001)
    rho_fine = np.interp(fine, oracle.density_q, oracle.density_rho)
    window_mass = np.trapezoid(rho_fine, fine)
    rho = np.interp(centers, oracle.density_q, oracle.density_rho) / window_mass
    live = err > 0.0
    z = np.abs(hist.masses[live] - rho[live]) / err[live]
    n_bad = int(np.sum(z > 3.0))
    allowed = math.ceil(0.01 * len(centers))
    # bins that never fired must be expected-empty
    dead_ok = np.all(rho[~live] * hist.total_samples * hist.bin_width < 10.0)
    ok = n_bad <= allowed and bool(dead_ok)
    report(13, "PIMC density vs Airy-density oracle (per-bin 3 sigma)",
           ok, f"{n_bad}/{len(z)} bins beyond 3 sigma (allowed {allowed}), "
               f"max z = {z.max():.2f}")


# ----------------------------------------------------------------------
# property-based criteria
# ----------------------------------------------------------------------

def test_criterion_14_intermediate_regime_tau_extrapolation():
    # beta = 12.5 fixed; tau = 0.5 resolves the discretization bias at ~19
    # sigma, the halved step must land within 3 sigma of the grid oracle
    e0 = grid_oracle(1.0, 1.0).ground_energy
    energies = {}
    for tau, n_t in ((0.5, 25), (0.25, 50)):
        params = SimParams(m=1.0, omega=1.0, tau=tau, n_t=n_t)
        config = SamplerConfig(n_paths=150, n_sweeps=3000, n_hits=10,
                               therm_sweeps=500, seed=20260811)
        result = run_chain(params, config, MeasurementObserver(params)).result
        energies[tau] = blocked(result, "energy")
    e_c, err_c = energies[0.5]
    e_f, err_f = energies[0.25]
    z_f = (e_f - e0) / err_f
    same_side = (e_c - e0) * (e_f - e0) > 0.0
    shrinking = abs(e_f - e0) < abs(e_c - e0)
    ok = abs(z_f) <= 3.0 and same_side and shrinking
    report(14, "m = omega = 1 energy vs grid oracle with tau -> tau/2",
           ok, f"E0 = {e0:.5f}; E(0.5) = {e_c:.5f} +/- {err_c:.2g} "
               f"(bias {e_c - e0:+.5f}), E(0.25) = {e_f:.5f} +/- {err_f:.2g} "
               f"(bias {e_f - e0:+.5f}, z = {z_f:+.2f})")


def test_criterion_15_conditional_distribution_chi2():
    # both neighbors frozen at 0 (m = 1, omega = 1, tau = 0.5): the update
    # chain must sample pi(q) = exp(2 log-kernel(q) - tau V(q)) / norm
    params = SimParams(m=1.0, omega=1.0, tau=0.5, n_t=3)
    path = new_path(params)
    rng = chain_rng(20260812, 0)
    raw = _site_update_series(path, 1, params.m, params.omega, params.tau,
                              1.2, 2_000_000, rng)
    samples = raw[::20]  # thin to near-independence for an honest chi^2

    def weight(q):
        return math.exp(log_site_weight(np.array([0.0, q, 0.0]), 1, params))

    lo, hi = -2.8, 2.8
    norm, _ = quad(weight, lo, hi, limit=300)
    edges = np.linspace(lo, hi, 101)
    kept = samples[(samples > lo) & (samples < hi)]
    counts, _ = np.histogram(kept, bins=edges)
    stat = 0.0
    merged_counts = 0.0
    merged_prob = 0.0
    dof = 0
    for k in range(100):
        prob, _ = quad(weight, edges[k], edges[k + 1], limit=200)
        prob /= norm
        merged_counts += counts[k]
        merged_prob += prob
        if merged_prob * len(kept) >= 10.0:  # merge sparse tail bins
            expected = merged_prob * len(kept)
            stat += (merged_counts - expected) ** 2 / expected
            merged_counts = 0.0
            merged_prob = 0.0
            dof += 1
    crit = chi2.ppf(0.99, dof - 1)
    ok = stat < crit
    report(15, "Metropolis conditional distribution chi^2 at 99%",
           ok, f"chi2 = {stat:.1f} vs critical {crit:.1f} ({dof - 1} dof, "
               f"{len(kept)} thinned samples)")


def test_criterion_16_full_determinism_across_workers(tmp_path):
    cfg = tmp_path / "d.cfg"
    cfg.write_text("""
[model]
m = 100.0
omega = 1.0
tau = 0.1
n_t = 50

[sampler]
n_paths = 6
n_sweeps = 150
n_hits = 5
seed = 99
therm_sweeps = 100

[observables]
density = true
correlation = true

[histogram]
bin_width = 0.02
q_min = -0.4
q_max = 0.4
""")
    blobs = []
    for name, jobs in (("r1", 1), ("r2", 1), ("r3", 4)):
        out = tmp_path / name
        assert cli_main(["run", "--config", str(cfg), "--out", str(out),
                         "--jobs", str(jobs)]) == 0
        blob = {}
        for f in sorted(os.listdir(out)):
            with open(out / f, "rb") as fh:
                blob[f] = fh.read()
        blobs.append(blob)
    ok = blobs[0] == blobs[1] == blobs[2]
    report(16, "byte-identical outputs across reruns and worker counts",
           ok, f"{sorted(blobs[0])} identical for jobs = 1, 1, 4")
