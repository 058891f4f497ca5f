import math

import numpy as np
import pytest

from filtered_henon.dynamics import ESCAPE_RADIUS, FilteredHenonSystem


def random_unit_circle_zeros(rng, nz, jitter=0.4):
    """Random conjugate-paired zeros on the unit circle.

    Pair ``k`` sits at the k-th equally spaced angle ``(2k-1) pi / nz`` moved
    by up to ``jitter`` of the half-spacing, so zeros stay distinct enough
    for root finding to recover them (clustered roots of a degree-40
    polynomial are not recoverable to 1e-8 from double-precision taps).
    """
    zeros = []
    for k in range(1, nz // 2 + 1):
        theta = (2 * k - 1 + rng.uniform(-jitter, jitter)) * math.pi / nz
        z = complex(math.cos(theta), math.sin(theta))
        zeros += [z, z.conjugate()]
    if nz % 2:
        zeros.append(complex(-1.0, 0.0))
    return zeros


def scattered_unit_circle_zeros(rng, nz, min_angle=math.pi / 4):
    """Conjugate pairs at independent uniform angles in ``[min_angle, pi]``."""
    zeros = []
    for _ in range(nz // 2):
        theta = rng.uniform(min_angle, math.pi)
        z = complex(math.cos(theta), math.sin(theta))
        zeros += [z, z.conjugate()]
    if nz % 2:
        zeros.append(complex(-1.0, 0.0))
    return zeros


def benettin_lyapunov(sys: FilteredHenonSystem, x0, n_total, n_transient, d0=1e-8):
    """Largest exponent from two nearby orbits, no Jacobian involved.

    The companion orbit is pulled back to distance ``d0`` along the current
    separation after every step.
    """
    x = np.array(x0, dtype=float)
    e = np.zeros_like(x)
    e[0] = d0
    y = x + e
    acc = 0.0
    for n in range(1, n_total + 1):
        x = sys.step_batch(x[None, :])[0]
        y = sys.step_batch(y[None, :])[0]
        if np.max(np.abs(x)) > ESCAPE_RADIUS:
            return float("nan")
        sep = y - x
        d = np.linalg.norm(sep)
        if n > n_transient:
            acc += math.log(d / d0)
        y = x + sep * (d0 / d)
    return acc / (n_total - n_transient)


QUANTUM = 2.0**-30


def dyadic(x):
    return round(x / QUANTUM) * QUANTUM


def random_taps_with_gain(rng, nz, g):
    """Random taps on a 2**-30 grid whose floating-point sum is exactly ``g``.

    With ``g`` on the same grid every partial sum is exact, so two sets
    really share one gain rather than gains an ulp apart.
    """
    c = np.array([dyadic(v) for v in rng.uniform(-1.0, 1.0, nz + 1)])
    c[-1] = g - math.fsum(c[:-1])
    if c[0] == 0.0:
        c[0], c[-1] = QUANTUM, c[-1] - QUANTUM
    return c


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
