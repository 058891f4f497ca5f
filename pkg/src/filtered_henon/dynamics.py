"""The filtered Henon map written as a first-order system.

With FIR taps ``c_0 ... c_Nz`` the filtered map

    x1(n+1) = alpha - x3(n)**2 + beta * x2(n)
    x2(n+1) = x1(n)
    x3(n+1) = sum_j c_j x1(n+1-j)

is closed by the delay line ``x4(n+1) = x2(n)``, ``x5(n+1) = x4(n)``, ...,
giving ``D = N_z + 1`` state variables ordered ``(x1, x2, x3, x4, ...)``.
For ``N_z = 1`` the filter output is eliminated and the state is just
``(x1, x2)``; pass ``minimal=False`` to keep the three-variable form.

All the stepping code is vectorized over a leading batch axis so that many
orbits (and their tangent vectors) advance together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DimensionMismatchError, DivergedStateError
from .fir_design import FirCoefficients, gain_of

__all__ = [
    "MapParams",
    "FilteredHenonSystem",
    "FixedPointPair",
    "Orbit",
    "ESCAPE_RADIUS",
    "ZERO_GAIN_TOL",
    "step",
    "fixed_points",
    "jacobian_at",
    "jacobian_general",
    "iterate",
]

ESCAPE_RADIUS = 1e6
ZERO_GAIN_TOL = 1e-12


@dataclass(frozen=True)
class MapParams:
    alpha: float = 1.4
    beta: float = 0.3

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("map parameters must be finite")


def _tap_sum(X, c):
    # fixed summation order, unlike BLAS, so results do not depend on batch size
    acc = c[3] * X[:, 3]
    for k in range(4, X.shape[1]):
        acc = acc + c[k] * X[:, k]
    return acc


class FilteredHenonSystem:
    """Map parameters bound to a set of FIR taps.

    ``coefficients`` may be a :class:`FirCoefficients` or any real sequence of
    length ``N_z + 1 >= 2``.  Raw sequences are accepted without the
    ``c_0 != 0`` check so that the zero-gain limit can be analysed.
    """

    def __init__(self, coefficients, params: MapParams | None = None, minimal: bool = True):
        c = np.array(coefficients, dtype=float).ravel()
        if c.size < 2:
            raise DimensionMismatchError("need at least two taps (N_z >= 1)")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        self._c = c
        self.params = params if params is not None else MapParams()
        self.minimal = bool(minimal)
        self.order = c.size - 1
        self.dimension = 2 if (self.order == 1 and self.minimal) else max(self.order + 1, 3)
        # taps padded to at least c_0..c_2 so the N_z = 1 long form shares code
        self._cp = np.concatenate([c, np.zeros(max(0, 3 - c.size))])

    @property
    def coefficients(self) -> np.ndarray:
        return self._c

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def gain(self) -> float:
        return gain_of(self._c)

    def fingerprint(self) -> bytes:
        """Bytes identifying the system exactly (parameters, taps, form)."""
        head = np.array([self.alpha, self.beta, float(self.dimension)])
        return head.tobytes() + self._c.tobytes()

    def __repr__(self):
        return (
            f"FilteredHenonSystem(coefficients={self._c.tolist()!r}, "
            f"params={self.params!r}, dimension={self.dimension})"
        )

    def _check(self, x):
        if x.shape[-1] != self.dimension:
            raise DimensionMismatchError(
                f"state has length {x.shape[-1]}, system dimension is {self.dimension}"
            )

    # -- batched kernels; callers validate shapes ---------------------------

    def step_batch(self, X: np.ndarray) -> np.ndarray:
        """One map step for every row of ``X`` (shape ``(B, D)``)."""
        a, b = self.alpha, self.beta
        c = self._cp
        Y = np.empty_like(X)
        if self.dimension == 2:
            u = c[0] * X[:, 0] + c[1] * X[:, 1]
            Y[:, 0] = a - u * u + b * X[:, 1]
            Y[:, 1] = X[:, 0]
            return Y
        f = a - X[:, 2] * X[:, 2] + b * X[:, 1]
        Y[:, 0] = f
        Y[:, 1] = X[:, 0]
        Y[:, 2] = c[0] * f + c[1] * X[:, 0] + c[2] * X[:, 1]
        if self.dimension > 3:
            Y[:, 2] += _tap_sum(X, c)
            Y[:, 3] = X[:, 1]
            Y[:, 4:] = X[:, 3:-1]
        return Y

    def tangent_batch(self, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Jacobian-vector products ``J(X[i]) @ V[i]`` without forming ``J``."""
        b = self.beta
        c = self._cp
        W = np.empty_like(V)
        if self.dimension == 2:
            u = c[0] * X[:, 0] + c[1] * X[:, 1]
            du = c[0] * V[:, 0] + c[1] * V[:, 1]
            W[:, 0] = -2.0 * u * du + b * V[:, 1]
            W[:, 1] = V[:, 0]
            return W
        df = b * V[:, 1] - 2.0 * X[:, 2] * V[:, 2]
        W[:, 0] = df
        W[:, 1] = V[:, 0]
        W[:, 2] = c[0] * df + c[1] * V[:, 0] + c[2] * V[:, 1]
        if self.dimension > 3:
            W[:, 2] += _tap_sum(V, c)
            W[:, 3] = V[:, 1]
            W[:, 4:] = V[:, 3:-1]
        return W


def _state(sys: FilteredHenonSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatchError("a state is a 1-D vector")
    sys._check(x)
    return x


def step(sys: FilteredHenonSystem, x) -> np.ndarray:
    """Advance a single state by one iteration of the map."""
    x = _state(sys, x)
    if not np.all(np.isfinite(x)):
        raise DivergedStateError("cannot step a non-finite state")
    return sys.step_batch(x[None, :])[0]


@dataclass(frozen=True)
class FixedPointPair:
    """Fixed points in extended coordinates.

    ``p_minus`` and ``p1_minus`` are ``None`` in the zero-gain case, where the
    single fixed point has first coordinate ``p0 = alpha / (1 - beta)``.
    """

    p_plus: np.ndarray
    p_minus: Optional[np.ndarray]
    p1_plus: float
    p1_minus: Optional[float]
    p0: float
    gain: float


def _extended(sys: FilteredHenonSystem, p1: float, g: float) -> np.ndarray:
    x = np.full(sys.dimension, p1)
    if sys.dimension >= 3:
        x[2] = g * p1
    return x


def fixed_points(sys: FilteredHenonSystem) -> FixedPointPair:
    """Roots of ``G^2 p^2 + (1 - beta) p - alpha = 0`` lifted to the full state.

    The positive root uses the cancellation-free form
    ``2 alpha / ((1 - beta) + sqrt(disc))`` so it tends smoothly to ``p0``.
    """
    a, b = sys.alpha, sys.beta
    g = sys.gain
    p0 = a / (1.0 - b)
    if abs(g) <= ZERO_GAIN_TOL:
        return FixedPointPair(_extended(sys, p0, 0.0), None, p0, None, p0, 0.0)
    g2 = g * g
    disc = (1.0 - b) ** 2 + 4.0 * a * g2
    root = math.sqrt(disc)
    p_plus = 2.0 * a / ((1.0 - b) + root)
    p_minus = (-(1.0 - b) - root) / (2.0 * g2)
    return FixedPointPair(
        _extended(sys, p_plus, g), _extended(sys, p_minus, g), p_plus, p_minus, p0, g
    )


def _jacobian_nz1(c, beta, x):
    c0, c1 = c[0], c[1]
    return np.array(
        [
            [-2 * c0 * c0 * x[0] - 2 * c0 * c1 * x[1], -2 * c0 * c1 * x[0] - 2 * c1 * c1 * x[1] + beta],
            [1.0, 0.0],
        ]
    )


def _jacobian_nz2(c, beta, x):
    return np.array(
        [
            [0.0, beta, -2 * x[2]],
            [1.0, 0.0, 0.0],
            [c[1], c[0] * beta + c[2], -2 * c[0] * x[2]],
        ]
    )


def _jacobian_nz3(c, beta, x):
    return np.array(
        [
            [0.0, beta, -2 * x[2], 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [c[1], c[0] * beta + c[2], -2 * c[0] * x[2], c[3]],
            [0.0, 1.0, 0.0, 0.0],
        ]
    )


def jacobian_general(sys: FilteredHenonSystem, x) -> np.ndarray:
    """Companion-like construction valid for every ``D >= 3``."""
    x = _state(sys, x)
    if sys.dimension == 2:
        raise DimensionMismatchError("the general construction needs D >= 3")
    D = sys.dimension
    c = sys._cp
    J = np.zeros((D, D))
    J[0, 1] = sys.beta
    J[0, 2] = -2 * x[2]
    J[1, 0] = 1.0
    J[2, 0] = c[1]
    J[2, 1] = c[0] * sys.beta + c[2]
    J[2, 2] = -2 * c[0] * x[2]
    J[2, 3:] = c[3:D]
    if D > 3:
        J[3, 1] = 1.0
        for k in range(4, D):
            J[k, k - 1] = 1.0
    return J


def jacobian_at(sys: FilteredHenonSystem, x) -> np.ndarray:
    """Jacobian of one map step at ``x``.

    ``D`` of 2, 3 and 4 use the explicit small-order matrices; larger systems
    use :func:`jacobian_general`.
    """
    x = _state(sys, x)
    if sys.dimension == 2:
        return _jacobian_nz1(sys._cp, sys.beta, x)
    if sys.dimension == 3 and sys.order == 2:
        return _jacobian_nz2(sys._cp, sys.beta, x)
    if sys.dimension == 4:
        return _jacobian_nz3(sys._cp, sys.beta, x)
    return jacobian_general(sys, x)


@dataclass
class Orbit:
    """States ``x(0) ... x(m)``; ``m < n`` when the orbit escaped early."""

    states: np.ndarray
    diverged: bool = False
    escape_index: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, k):
        return self.states[k]


def _escaped(x: np.ndarray) -> bool:
    return not np.all(np.isfinite(x)) or np.max(np.abs(x)) > ESCAPE_RADIUS


def iterate(sys: FilteredHenonSystem, x0, n: int) -> Orbit:
    """Apply the map ``n`` times starting at ``x0``.

    Escape (any ``|x_i| > 1e6`` or a non-finite coordinate) stops the
    iteration; the offending state is kept as the last row and its index is
    reported as ``escape_index``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = _state(sys, x0).copy()
    if not np.all(np.isfinite(x)):
        raise DivergedStateError("initial state is not finite")
    out = np.empty((n + 1, sys.dimension))
    out[0] = x
    X = x[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n + 1):
            X = sys.step_batch(X)
            out[k] = X[0]
            if _escaped(X[0]):
                return Orbit(out[: k + 1], diverged=True, escape_index=k)
    return Orbit(out)
