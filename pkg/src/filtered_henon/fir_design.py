"""FIR filters for the feedback loop: zeros, prototypes, coefficients, responses.

A filter is described either by its zeros and its DC gain ``G = H(1)``
(:class:`FilterSpec`), or by its expanded real taps ``c_0 ... c_Nz``
(:class:`FirCoefficients`).  The transfer function is normalized so that

    H(z) = G * prod_k (z - z_k) / (z (1 - z_k))

which makes the tap sum equal to ``G`` by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import (
    DegenerateFilterError,
    FilterDesignError,
    NonRealCoefficientsError,
    NormalizationUndefinedError,
)

__all__ = [
    "ZeroSet",
    "FilterSpec",
    "FirCoefficients",
    "EquallySpaced",
    "Notch",
    "NotchPlusNyquist",
    "RepeatedNyquist",
    "HammingLowpass",
    "FilterPrototype",
    "expand_zeros",
    "make_prototype",
    "prototype_zeros",
    "with_gain",
    "gain_of",
    "frequency_response",
    "magnitude_db",
    "freqz",
    "DB_FLOOR",
]

# |H| below this is reported as DB_FLOOR rather than -inf
MAG_FLOOR = 1e-15
DB_FLOOR = -300.0

IMAG_TOL = 1e-12
PAIR_TOL = 1e-9


def _as_complex_tuple(values) -> tuple[complex, ...]:
    return tuple(complex(v) for v in np.atleast_1d(np.asarray(values, dtype=complex)))


@dataclass(frozen=True)
class ZeroSet:
    """Zeros of the filter in the z-plane.

    Non-real zeros must come in conjugate pairs and no zero may equal 1.
    """

    zeros: tuple[complex, ...]

    def __post_init__(self):
        zeros = _as_complex_tuple(self.zeros)
        object.__setattr__(self, "zeros", zeros)
        if len(zeros) < 1:
            raise FilterDesignError("a filter needs at least one zero")
        if not all(math.isfinite(z.real) and math.isfinite(z.imag) for z in zeros):
            raise FilterDesignError("zeros must be finite")
        for z in zeros:
            if abs(z - 1) < IMAG_TOL:
                raise NormalizationUndefinedError(
                    "zero at z=1 makes the unit-gain normalization undefined"
                )
        _check_conjugate_pairs(zeros)

    def __len__(self):
        return len(self.zeros)

    @property
    def count(self) -> int:
        return len(self.zeros)


def _check_conjugate_pairs(zeros):
    unmatched = [z for z in zeros if abs(z.imag) > IMAG_TOL]
    while unmatched:
        z = unmatched.pop()
        dist = [abs(w - z.conjugate()) for w in unmatched]
        if not dist or min(dist) > PAIR_TOL:
            raise NonRealCoefficientsError(
                f"zero {z} has no conjugate partner; coefficients would be complex"
            )
        unmatched.pop(int(np.argmin(dist)))


@dataclass(frozen=True)
class FilterSpec:
    zero_set: ZeroSet
    gain: float = 1.0

    def __post_init__(self):
        if not isinstance(self.zero_set, ZeroSet):
            object.__setattr__(self, "zero_set", ZeroSet(self.zero_set))
        if not math.isfinite(self.gain):
            raise FilterDesignError("gain must be finite")

    @property
    def order(self) -> int:
        return self.zero_set.count


@dataclass(frozen=True, eq=False)
class FirCoefficients:
    """Real taps ``c_0 ... c_Nz`` of a causal FIR filter (``c_0 != 0``)."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).ravel()
        if c.size < 2:
            raise FilterDesignError("an FIR filter with N_z >= 1 zeros has at least 2 taps")
        if not np.all(np.isfinite(c)):
            raise FilterDesignError("coefficients must be finite")
        if c[0] == 0.0:
            raise DegenerateFilterError("leading coefficient c_0 must be nonzero")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    def __len__(self):
        return self.coefficients.size

    def __iter__(self):
        return iter(self.coefficients)

    def __getitem__(self, j):
        return self.coefficients[j]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coefficients, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, FirCoefficients):
            return NotImplemented
        return np.array_equal(self.coefficients, other.coefficients)

    def __hash__(self):
        return hash(self.coefficients.tobytes())

    def __repr__(self):
        return f"FirCoefficients({self.coefficients.tolist()!r})"


# --- prototypes -------------------------------------------------------------


@dataclass(frozen=True)
class EquallySpaced:
    """``N_z`` zeros at ``exp(j (2k-1) pi / N_z)`` on the unit circle."""

    nz: int
    gain: float = 1.0

    def __post_init__(self):
        if int(self.nz) != self.nz or self.nz < 1:
            raise FilterDesignError("EquallySpaced needs an integer nz >= 1")


@dataclass(frozen=True)
class Notch:
    """Conjugate pair ``exp(+-j w0)``, ``0 < w0 <= pi``."""

    w0: float
    gain: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.w0 <= math.pi:
            raise FilterDesignError("notch frequency must satisfy 0 < w0 <= pi")


@dataclass(frozen=True)
class NotchPlusNyquist:
    """Conjugate pair ``exp(+-j w0)`` plus a zero at ``z = -1``."""

    w0: float
    gain: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.w0 <= math.pi:
            raise FilterDesignError("notch frequency must satisfy 0 < w0 <= pi")


@dataclass(frozen=True)
class RepeatedNyquist:
    """``N_z`` zeros at ``z = -1``."""

    nz: int
    gain: float = 1.0

    def __post_init__(self):
        if int(self.nz) != self.nz or self.nz < 1:
            raise FilterDesignError("RepeatedNyquist needs an integer nz >= 1")


@dataclass(frozen=True)
class HammingLowpass:
    """Windowed-sinc lowpass with ``N_z + 1`` taps, cutoff ``wc``; unit gain."""

    nz: int
    wc: float

    def __post_init__(self):
        if int(self.nz) != self.nz or self.nz < 1:
            raise FilterDesignError("HammingLowpass needs an integer nz >= 1")
        if not 0.0 < self.wc < math.pi:
            raise FilterDesignError("cutoff must satisfy 0 < wc < pi")

    @property
    def gain(self) -> float:
        return 1.0


FilterPrototype = Union[EquallySpaced, Notch, NotchPlusNyquist, RepeatedNyquist, HammingLowpass]


def _conjugate_pair(theta):
    z = complex(math.cos(theta), math.sin(theta))
    return [z, z.conjugate()]


def prototype_zeros(p: FilterPrototype) -> tuple[complex, ...]:
    """Zero locations of a prototype.

    The equally spaced set is emitted as explicit conjugate pairs so that,
    for instance, ``EquallySpaced(2)`` and ``Notch(pi/2)`` give bit-identical
    taps.  Hamming zeros are the numerical roots of the designed taps.
    """
    if isinstance(p, EquallySpaced):
        zeros = []
        for k in range(1, p.nz // 2 + 1):
            zeros += _conjugate_pair((2 * k - 1) * math.pi / p.nz)
        if p.nz % 2:
            zeros.append(complex(-1.0, 0.0))
        return tuple(zeros)
    if isinstance(p, Notch):
        return tuple(_conjugate_pair(p.w0))
    if isinstance(p, NotchPlusNyquist):
        return tuple(_conjugate_pair(p.w0) + [complex(-1.0, 0.0)])
    if isinstance(p, RepeatedNyquist):
        return (complex(-1.0, 0.0),) * int(p.nz)
    if isinstance(p, HammingLowpass):
        c = _hamming_taps(p.nz, p.wc)
        return tuple(complex(z) for z in np.roots(c))
    raise TypeError(f"unknown filter prototype {p!r}")


def _leja_order(zeros):
    """Largest modulus first, then greedily the zero farthest from those chosen.

    Multiplying factors in this order keeps partial products small, which is
    what makes the expansion accurate for 40 zeros.
    """
    rest = list(zeros)
    order = [rest.pop(int(np.argmax(np.abs(rest))))]
    score = np.abs(np.array(rest) - order[0]) if rest else np.empty(0)
    while rest:
        k = int(np.argmax(score))
        order.append(rest.pop(k))
        score = np.delete(score, k) * np.abs(np.array(rest) - order[-1]) if rest else score
    return order


def expand_zeros(spec: FilterSpec) -> FirCoefficients:
    """Expand ``G prod (z - z_k) / prod (1 - z_k)`` into real taps.

    Examples
    --------
    >>> expand_zeros(FilterSpec(ZeroSet([-1]), 1.0)).coefficients.tolist()
    [0.5, 0.5]
    """
    if spec.gain == 0.0:
        raise DegenerateFilterError("gain 0 gives the all-zero filter (c_0 = 0)")
    poly = np.array([1.0 + 0.0j])
    bound = 1.0
    for z in _leja_order(spec.zero_set.zeros):
        poly = np.convolve(poly, [1.0, -z])
        bound *= 1.0 + abs(z)
    # rounding in the products grows with prod(1 + |z_k|), the largest
    # coefficient magnitude the expansion can reach
    residue = np.max(np.abs(poly.imag))
    if residue >= IMAG_TOL * bound:
        raise NonRealCoefficientsError(f"imaginary residue {residue:.3e} in expanded taps")
    monic = poly.real
    # p(1) = prod(1 - z_k), taken from the real taps so the sum lands on G
    at_one = math.fsum(monic)
    if at_one == 0.0:
        raise NormalizationUndefinedError("polynomial vanishes at z=1")
    return FirCoefficients(monic * (spec.gain / at_one))


def _sinc(x):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0.0
    out[nz] = np.sin(x[nz]) / x[nz]
    return out


def _hamming_taps(nz, wc):
    j = np.arange(nz + 1)
    return _sinc(wc * (j - nz / 2)) * (0.54 - 0.46 * np.cos(2 * np.pi * j / nz))


def make_prototype(p: FilterPrototype) -> FirCoefficients:
    """Taps of one of the five prototype filter families."""
    if isinstance(p, HammingLowpass):
        taps = _hamming_taps(p.nz, p.wc)
        total = taps.sum()
        if abs(total) < 1e-300:
            raise DegenerateFilterError("Hamming design taps sum to zero")
        return FirCoefficients(taps / total)
    return expand_zeros(FilterSpec(ZeroSet(prototype_zeros(p)), p.gain))


def with_gain(p: FilterPrototype, gain: float) -> FilterPrototype:
    """Copy of a gain-parameterized prototype with another gain."""
    if isinstance(p, HammingLowpass):
        raise FilterDesignError("HammingLowpass always has unit gain")
    return type(p)(**{**p.__dict__, "gain": float(gain)})


def gain_of(c) -> float:
    """DC gain ``H(1)``, i.e. the tap sum."""
    return float(math.fsum(np.asarray(c, dtype=float)))


def frequency_response(c, omega):
    """``H(e^{j omega}) = sum_j c_j e^{-j omega j}``; scalar or array ``omega``."""
    taps = np.asarray(c, dtype=float)
    w = np.asarray(omega, dtype=float)
    h = np.exp(-1j * np.multiply.outer(w, np.arange(taps.size))) @ taps
    return complex(h) if h.ndim == 0 else h


def magnitude_db(h):
    mag = np.abs(np.asarray(h))
    with np.errstate(divide="ignore"):
        db = np.where(mag < MAG_FLOOR, DB_FLOOR, 20.0 * np.log10(np.maximum(mag, MAG_FLOOR)))
    return float(db) if db.ndim == 0 else db


def freqz(c, n_bins: int = 1024):
    """Response at ``omega_k = k pi / n_bins`` for ``k = 0 .. n_bins``.

    Both band edges are included, and with a power-of-two ``n_bins`` the
    dyadic frequencies (pi/4, 3pi/4, ...) fall exactly on the grid.
    Returns ``(omega, magnitude_db, phase_rad)``.
    """
    omega = np.pi * np.arange(n_bins + 1) / n_bins
    h = frequency_response(c, omega)
    return omega, magnitude_db(h), np.angle(h)
