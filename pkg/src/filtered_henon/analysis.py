"""Linear stability, largest Lyapunov exponent and spectral diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import signal

from .dynamics import ESCAPE_RADIUS, FilteredHenonSystem, _state
from .exceptions import (
    DimensionMismatchError,
    DivergedStateError,
    InputTooShortError,
    NumericalFailureError,
)

__all__ = [
    "StabilityReport",
    "LyapunovEstimate",
    "PsdEstimate",
    "spectral_radius",
    "lyapunov_largest",
    "lyapunov_batch",
    "psd_estimate",
    "PSD_SEGMENT",
]

MAX_EIG_DIM = 64
PSD_SEGMENT = 256


@dataclass(frozen=True)
class StabilityReport:
    spectral_radius: float
    stable: bool


def spectral_radius(J) -> StabilityReport:
    """Largest eigenvalue modulus of a dense real matrix.

    LAPACK ``geev`` (via numpy) balances, reduces to Hessenberg form and runs
    the shifted QR iteration; its convergence failure is re-raised as
    :class:`NumericalFailureError`.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {J.shape}")
    if J.shape[0] > MAX_EIG_DIM:
        raise DimensionMismatchError(f"matrix order {J.shape[0]} exceeds {MAX_EIG_DIM}")
    if not np.all(np.isfinite(J)):
        raise NumericalFailureError("Jacobian has non-finite entries")
    try:
        eig = np.linalg.eigvals(J)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigenvalue iteration did not converge: {exc}") from exc
    rho = float(np.max(np.abs(eig)))
    if not np.isfinite(rho):
        raise NumericalFailureError("eigenvalue computation returned non-finite values")
    return StabilityReport(rho, rho < 1.0)


@dataclass(frozen=True)
class LyapunovEstimate:
    """``lambda_max`` is NaN whenever ``diverged`` is set."""

    lambda_max: float
    n_used: int
    diverged: bool
    escape_index: Optional[int] = None


def lyapunov_batch(
    sys: FilteredHenonSystem,
    X0,
    n_total: int = 3000,
    n_transient: int = 500,
    renorm_every: int = 1,
    stop_on_divergence: bool = False,
):
    """Tangent-map estimate of the largest exponent for many orbits at once.

    Each row of ``X0`` is an initial state.  The tangent vector starts at
    ``(1, 0, ..., 0)``, is pushed through ``J(x(n))`` alongside the orbit and
    renormalized every ``renorm_every`` steps; log-growth is accumulated only
    after ``n_transient`` steps.

    Returns
    -------
    lam : ndarray
        Exponent per orbit in nats/iteration (NaN for escaped orbits).
    escape : ndarray of int
        Step index at which each orbit escaped, ``-1`` if it stayed bounded.
        With ``stop_on_divergence`` the run ends at the first escape, so
        later escapes in other rows are not recorded.
    """
    if not n_total > n_transient >= 0:
        raise ValueError("need n_total > n_transient >= 0")
    if renorm_every < 1:
        raise ValueError("renorm_every must be >= 1")
    X = np.array(X0, dtype=float, ndmin=2)
    sys._check(X)
    if not np.all(np.isfinite(X)):
        raise DivergedStateError("initial states must be finite")
    B, D = X.shape
    V = np.zeros((B, D))
    V[:, 0] = 1.0
    log_sum = np.zeros(B)
    escape = np.full(B, -1, dtype=np.int64)
    alive = np.ones(B, dtype=bool)

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_total + 1):
            V = sys.tangent_batch(X, V)
            X = sys.step_batch(X)
            bad = alive & ~np.all(np.abs(X) <= ESCAPE_RADIUS, axis=1)
            if bad.any():
                escape[bad] = n
                alive &= ~bad
                if stop_on_divergence:
                    break
            if not alive.all():
                # park escaped rows on a harmless state so they stay finite
                X[~alive] = 0.0
                V[~alive] = 0.0
                V[~alive, 0] = 1.0
            if n == n_transient:
                V /= np.linalg.norm(V, axis=1)[:, None]
            elif n > n_transient and ((n - n_transient) % renorm_every == 0 or n == n_total):
                norm = np.linalg.norm(V, axis=1)
                log_sum += np.log(norm)
                V /= norm[:, None]
            elif n % renorm_every == 0:
                V /= np.linalg.norm(V, axis=1)[:, None]

    lam = log_sum / (n_total - n_transient)
    lam[escape >= 0] = np.nan
    return lam, escape


def lyapunov_largest(
    sys: FilteredHenonSystem,
    x0,
    n_total: int = 3000,
    n_transient: int = 500,
    renorm_every: int = 1,
) -> LyapunovEstimate:
    """Largest Lyapunov exponent of the orbit starting at ``x0``."""
    x0 = _state(sys, x0)
    lam, escape = lyapunov_batch(
        sys, x0[None, :], n_total, n_transient, renorm_every, stop_on_divergence=True
    )
    if escape[0] >= 0:
        return LyapunovEstimate(float("nan"), 0, True, int(escape[0]))
    return LyapunovEstimate(float(lam[0]), n_total - n_transient, False, None)


@dataclass(frozen=True)
class PsdEstimate:
    """Frequencies in rad/sample on [0, pi]; power in dB relative to the peak."""

    frequencies: np.ndarray
    power_db: np.ndarray

    @property
    def peak_frequency(self) -> float:
        return float(self.frequencies[np.argmax(self.power_db)])


def psd_estimate(orbit_x1, segment: int = PSD_SEGMENT) -> PsdEstimate:
    """Welch estimate: Hamming segments, 50 % overlap, mean removed per segment."""
    x = np.asarray(orbit_x1, dtype=float).ravel()
    if x.size < 2 * segment:
        raise InputTooShortError(f"need at least {2 * segment} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("PSD input contains non-finite samples")
    f, pxx = signal.welch(
        x, fs=1.0, window="hamming", nperseg=segment, noverlap=segment // 2, detrend="constant"
    )
    peak = pxx.max()
    if peak <= 0:
        db = np.zeros_like(pxx)
    else:
        with np.errstate(divide="ignore"):
            db = np.maximum(10.0 * np.log10(pxx / peak), -300.0)
    return PsdEstimate(2.0 * np.pi * f, db)
