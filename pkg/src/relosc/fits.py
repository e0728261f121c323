"""Weighted least-squares fits of the functional forms the analysis uses:
exponential decay a*exp(-b|x|), Gaussian a*exp(-b x^2), constant, and
fixed-exponent power laws a*x^e.

The nonlinear shapes are log-linearizable, so the fit is deterministic: a
weighted log-linear regression supplies the starting point and damped
Gauss-Newton refines it on the original residuals.  Parameter errors are
the square roots of the diagonal of the inverse Gauss-Newton curvature
(J^T J)^-1 at the minimum, i.e. they scale with the supplied sigma_y and
are not rescaled by chi^2/dof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_ITER = 200
STEP_HALVINGS = 30


@dataclass
class FitResult:
    model: str
    parameters: dict
    std_errors: dict
    chi_squared_per_dof: float
    converged: bool
    n_points: int
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "model": self.model,
            "parameters": {k: float(v) for k, v in self.parameters.items()},
            "std_errors": {k: float(v) for k, v in self.std_errors.items()},
            "chi_squared_per_dof": float(self.chi_squared_per_dof),
            "converged": self.converged,
            "n_points": self.n_points,
            "meta": self.meta,
        }


def _as_points(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be an (n, 3) array of (x, y, sigma_y)")
    x, y, s = pts[:, 0], pts[:, 1], pts[:, 2]
    if len(x) == 0:
        raise ValueError("empty input")
    if np.any(s <= 0.0) or not np.all(np.isfinite(pts)):
        raise ValueError("all sigma_y must be finite and positive")
    return x, y, s


def fit_constant(points):
    """Weighted mean y = a."""
    x, y, s = _as_points(points)
    w = 1.0 / (s * s)
    a = float(np.sum(w * y) / np.sum(w))
    err = float(1.0 / math.sqrt(np.sum(w)))
    chi2 = float(np.sum(w * (y - a) ** 2))
    dof = max(len(y) - 1, 1)
    return FitResult("constant", {"a": a}, {"a": err}, chi2 / dof, True, len(y),
                     {"method": "weighted mean"})


def fit_amplitude(points, design, model="amplitude"):
    """Single-amplitude weighted fit y = a * g(x), g supplied as values."""
    x, y, s = _as_points(points)
    g = np.asarray(design, dtype=float)
    if g.shape != x.shape:
        raise ValueError("design values must match the points")
    w = 1.0 / (s * s)
    denom = np.sum(w * g * g)
    if denom <= 0.0:
        raise ValueError("degenerate design (all g(x) = 0)")
    a = float(np.sum(w * g * y) / denom)
    err = float(1.0 / math.sqrt(denom))
    chi2 = float(np.sum(w * (y - a * g) ** 2))
    dof = max(len(y) - 1, 1)
    return FitResult(model, {"a": a}, {"a": err}, chi2 / dof, True, len(y),
                     {"method": "weighted amplitude"})


def fit_power(points, exponent):
    """Weighted amplitude fit of y = a * x^exponent (exponent fixed)."""
    x, _, _ = _as_points(points)
    if np.any(x <= 0.0) and exponent != round(exponent):
        raise ValueError("x must be positive for a fractional exponent")
    res = fit_amplitude(points, np.asarray(x, dtype=float) ** exponent,
                        model="power")
    res.meta["exponent"] = exponent
    return res


def _gauss_newton_exp(t, y, s, a0, b0):
    # weighted fit of y = a*exp(-b*t); returns (a, b, cov, chi2, converged, iters)
    p = np.array([a0, b0])
    w = 1.0 / s

    def chi2_of(pp):
        with np.errstate(over="ignore", invalid="ignore"):
            r = (y - pp[0] * np.exp(-pp[1] * t)) * w
        c = float(np.sum(r * r))
        return c if math.isfinite(c) else math.inf

    chi2 = chi2_of(p)
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        e = np.exp(-p[1] * t)
        f = p[0] * e
        r = (y - f) * w
        jac = np.column_stack([e * w, -p[0] * t * e * w])
        jtj = jac.T @ jac
        jtr = jac.T @ r
        try:
            step = np.linalg.solve(jtj, jtr)
        except np.linalg.LinAlgError:
            break
        alpha = 1.0
        improved = False
        for _ in range(STEP_HALVINGS):
            trial = p + alpha * step
            c = chi2_of(trial)
            if c <= chi2:
                improved = c < chi2 - 1e-14 * (1.0 + chi2)
                p, chi2 = trial, c
                break
            alpha *= 0.5
        if np.linalg.norm(alpha * step) <= 1e-12 * (1.0 + np.linalg.norm(p)) or not improved:
            converged = True
            break
    e = np.exp(-p[1] * t)
    jac = np.column_stack([e / s, -p[0] * t * e / s])
    try:
        cov = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), math.nan)
    return p[0], p[1], cov, chi2, converged, it


def _log_linear_init(t, y, s):
    # weighted regression of ln y on t over the y > 0 subset
    mask = y > 0.0
    if np.count_nonzero(mask) < 2:
        raise ValueError("need at least 2 points with y > 0 to initialize")
    tt, yy, ss = t[mask], y[mask], s[mask]
    if np.ptp(tt) == 0.0:
        raise ValueError("degenerate data: all x equal")
    w = (yy / ss) ** 2
    ly = np.log(yy)
    sw = np.sum(w)
    mt = np.sum(w * tt) / sw
    ml = np.sum(w * ly) / sw
    var = np.sum(w * (tt - mt) ** 2)
    if var == 0.0:
        raise ValueError("degenerate data: all x equal")
    slope = np.sum(w * (tt - mt) * (ly - ml)) / var
    return math.exp(ml - slope * mt), -slope


def _fit_decay(points, transform, model):
    x, y, s = _as_points(points)
    if len(x) < 3:
        raise ValueError("need at least 3 points")
    t = transform(x)
    if np.ptp(t) == 0.0:
        raise ValueError("degenerate data: all x equal")
    a0, b0 = _log_linear_init(t, y, s)
    a, b, cov, chi2, converged, iters = _gauss_newton_exp(t, y, s, a0, b0)
    dof = max(len(y) - 2, 1)
    return FitResult(
        model, {"a": a, "b": b},
        {"a": math.sqrt(abs(cov[0, 0])), "b": math.sqrt(abs(cov[1, 1]))},
        chi2 / dof, converged, len(y),
        {"method": "log-linear init + damped Gauss-Newton",
         "iterations": iters, "init": {"a": a0, "b": b0}},
    )


def fit_exponential(points):
    """Weighted fit of y = a * exp(-b |x|)."""
    return _fit_decay(points, np.abs, "exponential")


def fit_gaussian(points):
    """Weighted fit of y = a * exp(-b x^2)."""
    return _fit_decay(points, np.square, "gaussian")
