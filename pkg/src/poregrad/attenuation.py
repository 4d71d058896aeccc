"""Exponential attenuation model: fit, ideal-particle synthesis, subtraction.

The pore-free intensity profile is modeled as value(d) = a*exp(-b*d) + c over
the distance-to-boundary d, fitted to a binned percentile profile by damped
Gauss-Newton (Levenberg-Marquardt) least squares weighted by bin counts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distfield import BinnedProfile
from .errors import DataError, FitError

GRAD_TOL = 1e-10
MAX_ITERATIONS = 200
FLAT_RANGE = 1e-6


@dataclass
class AttenuationFit:
    a: float
    b: float
    c: float
    rmse: float
    n_bins_used: int
    converged: bool


@dataclass
class ResidualImage:
    """image - ideal inside the mask, 0 outside."""

    residual: np.ndarray
    fit: AttenuationFit


def _objective(params, mids, vals, wts):
    """Weighted SSE, its gradient w.r.t. (a, b, c), residuals, and Jacobian."""
    a, b, c = params
    e = np.exp(-b * mids)
    r = a * e + c - vals
    jac = np.column_stack([e, -a * mids * e, np.ones_like(mids)])
    grad = jac.T @ (wts * r)
    return float(np.sum(wts * r * r)), grad, r, jac


def fit_attenuation(profile: BinnedProfile) -> AttenuationFit:
    """Least-squares fit of a*exp(-b*mid)+c to the nonempty bins (a, b >= 0)."""
    used = profile.used
    mids = profile.midpoints[used]
    vals = profile.bin_values[used]
    wts = profile.counts[used].astype(np.float64)
    if not np.all(np.isfinite(vals)):
        raise DataError("profile contains non-finite bin values")
    if len(vals) < 4:
        raise FitError(f"need >= 4 nonempty bins to fit, got {len(vals)}")

    if vals.max() - vals.min() < FLAT_RANGE:
        mean = float(np.average(vals, weights=wts))
        return AttenuationFit(0.0, 0.0, mean, _rmse((0.0, 0.0, mean), mids, vals),
                              n_bins_used=len(vals), converged=True)

    params = _initial_guess(mids, vals, wts)
    sse, grad, r, jac = _objective(params, mids, vals, wts)
    lam = 1e-3
    converged = False
    for _ in range(MAX_ITERATIONS):
        if np.abs(grad).max() <= GRAD_TOL:
            converged = True
            break
        jtj = jac.T @ (wts[:, None] * jac)
        step_ok = False
        for _ in range(50):
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                delta = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = np.array([max(params[0] + delta[0], 0.0),
                              max(params[1] + delta[1], 0.0),
                              params[2] + delta[2]])
            trial_sse, trial_grad, trial_r, trial_jac = _objective(trial, mids, vals, wts)
            if trial_sse <= sse:
                # Accepted steps never increase the weighted SSE.
                params, grad, r, jac = trial, trial_grad, trial_r, trial_jac
                assert trial_sse <= sse
                sse = trial_sse
                lam = max(lam / 3.0, 1e-14)
                step_ok = True
                break
            lam *= 2.0
        if not step_ok:
            converged = np.abs(grad).max() <= 1e-6
            break
    return AttenuationFit(float(params[0]), float(params[1]), float(params[2]),
                          _rmse(params, mids, vals), n_bins_used=len(vals),
                          converged=bool(converged))


def _initial_guess(mids, vals, wts):
    """Log-linear regression on (value - c_hat), c_hat slightly below the minimum."""
    c0 = vals.min() - 1e-3
    y = np.log(vals - c0)
    slope, intercept = np.polyfit(mids, y, 1, w=np.sqrt(wts))
    b0 = max(-slope, 0.0)
    a0 = max(float(np.exp(intercept)), 1e-6)
    return np.array([a0, b0, c0])


def _rmse(params, mids, vals) -> float:
    a, b, c = params
    r = a * np.exp(-b * mids) + c - vals
    return float(np.sqrt(np.mean(r * r)))


def evaluate_model(fit: AttenuationFit, d) -> np.ndarray:
    return fit.a * np.exp(-fit.b * np.asarray(d, dtype=np.float64)) + fit.c


def ideal_particle(fit: AttenuationFit, field: np.ndarray, mask: np.ndarray,
                   image: np.ndarray) -> np.ndarray:
    """Synthesize the pore-free particle: model inside mask, image elsewhere."""
    out = np.asarray(image, dtype=np.float64).copy()
    mask = np.asarray(mask, dtype=bool)
    out[mask] = evaluate_model(fit, field[mask])
    return out


def subtract(image: np.ndarray, ideal: np.ndarray, mask: np.ndarray,
             fit: AttenuationFit) -> ResidualImage:
    """Residual image: image - ideal inside the mask, exactly 0 outside."""
    residual = np.where(mask, np.asarray(image, dtype=np.float64) - ideal, 0.0)
    return ResidualImage(residual=residual, fit=fit)
