"""Orbit classification over parameter grids, plus attractor-following bifurcation.

A cell is classified by a fixed protocol:

1. spectral radius of the Jacobian at ``p+`` below 1 -> stable fixed point;
2. otherwise ``n_ic`` orbits are launched from a small ball around ``p+``;
   a single escape makes the cell divergent;
3. otherwise the largest Lyapunov exponent is averaged over the orbits and
   its sign separates chaotic (> 0) from periodic (<= 0) cells.

Cells are independent. Each cell draws its initial conditions from a
stream keyed on the run seed and the exact system (parameters and taps),
so results never depend on scheduling or worker count.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .analysis import lyapunov_batch, spectral_radius
from .dynamics import (
    ZERO_GAIN_TOL,
    FilteredHenonSystem,
    MapParams,
    fixed_points,
    iterate,
    jacobian_at,
)
from .exceptions import FilteredHenonError
from .fir_design import (
    EquallySpaced,
    FilterPrototype,
    HammingLowpass,
    Notch,
    NotchPlusNyquist,
    RepeatedNyquist,
    make_prototype,
    with_gain,
)

__all__ = [
    "OrbitClass",
    "CellResult",
    "Axis",
    "ExperimentConfig",
    "ExperimentResult",
    "BifurcationPoint",
    "EXPERIMENTS",
    "sample_initial_conditions",
    "cell_rng",
    "classify_cell",
    "build_system",
    "run_experiment",
    "bifurcation_diagram",
    "count_clusters",
    "load_config",
]


class OrbitClass(str, Enum):
    STABLE_FIXED_POINT = "fixed"
    PERIODIC = "periodic"
    CHAOTIC = "chaotic"
    DIVERGENT = "divergent"

    def __str__(self):
        return self.value


@dataclass
class CellResult:
    axis1: float
    axis2: float
    spectral_radius: float
    lambda_avg: Optional[float]
    n_diverged: int
    orbit_class: Optional[OrbitClass]
    lambda_per_ic: Optional[tuple] = None
    error: Optional[str] = None

    def same_outcome(self, other: "CellResult") -> bool:
        """Equal classification data, ignoring where the cell sits in a grid."""
        return (
            self.spectral_radius == other.spectral_radius
            and self.lambda_avg == other.lambda_avg
            and self.n_diverged == other.n_diverged
            and self.orbit_class == other.orbit_class
        )


@dataclass(frozen=True)
class Axis:
    start: float
    stop: float
    step: float
    integer: bool = False

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("axis step must be positive")
        if self.stop < self.start:
            raise ValueError("axis range is empty (stop < start)")

    def values(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        vals = np.round(self.start + self.step * np.arange(n), 10)
        if self.integer:
            vals = np.round(vals)
        return vals + 0.0  # folds -0.0 into 0.0


@dataclass(frozen=True)
class _ExperimentDef:
    axis1: str
    axis2: str
    default1: Axis
    default2: Axis
    title: str


_G_AXIS = Axis(0.0, 1.5, 0.005)
_NZ20 = Axis(1, 20, 1, integer=True)
_W0_AXIS = Axis(0.05, 1.0, 0.01)

EXPERIMENTS = {
    "I": _ExperimentDef("G", "N_z", _G_AXIS, _NZ20, "equally spaced zeros"),
    "II": _ExperimentDef("omega0_over_pi", "G", _W0_AXIS, _G_AXIS, "notch pair"),
    "III": _ExperimentDef("omega0_over_pi", "G", _W0_AXIS, _G_AXIS, "notch pair + zero at -1"),
    "IV": _ExperimentDef("N_z", "G", _NZ20, _G_AXIS, "N_z zeros at -1"),
    "V": _ExperimentDef(
        "N_z", "omegac_over_pi", Axis(1, 40, 1, integer=True), Axis(0.05, 0.95, 0.01), "Hamming lowpass"
    ),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    axis1: Axis
    axis2: Axis
    n_total: int = 3000
    n_transient: int = 500
    n_ic: int = 25
    ic_radius: float = 0.01
    rng_seed: int = 42
    alpha: float = 1.4
    beta: float = 0.3
    keep_per_ic: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
        if not self.n_total > self.n_transient >= 0:
            raise ValueError("need n_total > n_transient >= 0")
        if self.n_ic < 1 or not self.ic_radius > 0:
            raise ValueError("need n_ic >= 1 and ic_radius > 0")

    @classmethod
    def default(cls, experiment: str, **overrides) -> "ExperimentConfig":
        if experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
        d = EXPERIMENTS[experiment]
        return cls(experiment, d.default1, d.default2).with_overrides(**overrides)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Replace fields; ``axis1_min``/``axis1_max``/``axis1_step`` style keys edit axes."""
        fields_ = {}
        axes = {"axis1": asdict(self.axis1), "axis2": asdict(self.axis2)}
        for key, val in overrides.items():
            if val is None:
                continue
            if key.startswith(("axis1_", "axis2_")):
                name, part = key.split("_", 1)
                axes[name][{"min": "start", "max": "stop"}.get(part, part)] = float(val)
            else:
                fields_[key] = val
        return replace(self, axis1=Axis(**axes["axis1"]), axis2=Axis(**axes["axis2"]), **fields_)

    @property
    def params(self) -> MapParams:
        return MapParams(self.alpha, self.beta)

    @property
    def axis_names(self) -> tuple[str, str]:
        d = EXPERIMENTS[self.experiment]
        return d.axis1, d.axis2

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> dict:
    """Read an ``[experiment]`` INI section into override keys.

    Recognized keys: ``experiment``, ``axis1_min``, ``axis1_max``,
    ``axis1_step``, ``axis2_min``, ``axis2_max``, ``axis2_step``,
    ``n_total``, ``n_transient``, ``n_ic``, ``ic_radius``, ``seed``,
    ``alpha``, ``beta``, ``keep_per_ic``.
    """
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_section("experiment"):
        raise ValueError(f"{path}: missing [experiment] section")
    sec = parser["experiment"]
    conv = {
        "experiment": str,
        "n_total": int,
        "n_transient": int,
        "n_ic": int,
        "ic_radius": float,
        "seed": int,
        "alpha": float,
        "beta": float,
        "keep_per_ic": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    }
    out = {}
    for key, raw in sec.items():
        if key.startswith(("axis1_", "axis2_")) and key.split("_", 1)[1] in ("min", "max", "step"):
            out[key] = float(raw)
        elif key in conv:
            out["rng_seed" if key == "seed" else key] = conv[key](raw)
        else:
            raise ValueError(f"{path}: unknown key {key!r}")
    return out


# --- initial conditions -----------------------------------------------------


def sample_initial_conditions(center, radius: float, n: int, seed) -> np.ndarray:
    """``n`` points uniform in the ``D``-ball of ``radius`` around ``center``."""
    if not radius > 0 or n < 1:
        raise ValueError("need radius > 0 and n >= 1")
    center = np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    D = center.size
    d = rng.standard_normal((n, D))
    d /= np.linalg.norm(d, axis=1)[:, None]
    r = radius * rng.random(n) ** (1.0 / D)
    return center + d * r[:, None]


def cell_rng(rng_seed: int, sys: FilteredHenonSystem) -> np.random.Generator:
    digest = hashlib.sha256(sys.fingerprint()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(rng_seed), *words]))


# --- single cell ------------------------------------------------------------


def classify_cell(
    sys: FilteredHenonSystem,
    cfg: Optional[ExperimentConfig] = None,
    *,
    seed=None,
    axis=(float("nan"), float("nan")),
    n_total: int = 3000,
    n_transient: int = 500,
    n_ic: int = 25,
    ic_radius: float = 0.01,
    keep_per_ic: bool = False,
    rng_seed: int = 42,
) -> CellResult:
    """Classify one parameter cell.

    Protocol settings come from ``cfg`` when given, else from the keyword
    arguments.  ``seed`` overrides the content-keyed stream.
    """
    if cfg is not None:
        n_total, n_transient = cfg.n_total, cfg.n_transient
        n_ic, ic_radius, keep_per_ic = cfg.n_ic, cfg.ic_radius, cfg.keep_per_ic
        rng_seed = cfg.rng_seed
    p_plus = fixed_points(sys).p_plus
    rho = spectral_radius(jacobian_at(sys, p_plus)).spectral_radius
    if rho < 1.0:
        return CellResult(axis[0], axis[1], rho, None, 0, OrbitClass.STABLE_FIXED_POINT)

    rng = cell_rng(rng_seed, sys) if seed is None else np.random.default_rng(seed)
    X0 = sample_initial_conditions(p_plus, ic_radius, n_ic, rng)
    lam, escape = lyapunov_batch(sys, X0, n_total, n_transient, stop_on_divergence=True)
    n_div = int(np.count_nonzero(escape >= 0))
    if n_div:
        return CellResult(axis[0], axis[1], rho, None, n_div, OrbitClass.DIVERGENT)
    lam_avg = float(np.mean(lam))
    cls = OrbitClass.CHAOTIC if lam_avg > 0 else OrbitClass.PERIODIC
    per_ic = tuple(float(v) for v in lam) if keep_per_ic else None
    return CellResult(axis[0], axis[1], rho, lam_avg, 0, cls, per_ic)


# --- experiments ------------------------------------------------------------


def _taps(proto: FilterPrototype, gain: float, nz: int) -> np.ndarray:
    if abs(gain) <= ZERO_GAIN_TOL:
        return np.zeros(nz + 1)
    return make_prototype(with_gain(proto, gain)).coefficients


def build_system(experiment: str, a1: float, a2: float, params: MapParams | None = None):
    """Filtered map for one grid cell of experiment I..V."""
    params = params or MapParams()
    if experiment == "I":
        g, nz = a1, int(round(a2))
        c = _taps(EquallySpaced(nz), g, nz)
    elif experiment == "II":
        c = _taps(Notch(a1 * math.pi), a2, 2)
    elif experiment == "III":
        c = _taps(NotchPlusNyquist(a1 * math.pi), a2, 3)
    elif experiment == "IV":
        nz, g = int(round(a1)), a2
        c = _taps(RepeatedNyquist(nz), g, nz)
    elif experiment == "V":
        c = make_prototype(HammingLowpass(int(round(a1)), a2 * math.pi)).coefficients
    else:
        raise ValueError(f"unknown experiment {experiment!r}")
    return FilteredHenonSystem(c, params)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    axis1: np.ndarray
    axis2: np.ndarray
    cells: list = field(default_factory=list)

    @property
    def shape(self):
        return (self.axis1.size, self.axis2.size)

    def cell(self, i: int, j: int) -> CellResult:
        return self.cells[i * self.axis2.size + j]

    def class_grid(self) -> np.ndarray:
        return np.array([str(c.orbit_class) for c in self.cells], dtype=object).reshape(self.shape)

    def failures(self) -> list:
        return [c for c in self.cells if c.error is not None]


def _run_cell(task):
    cfg, a1, a2 = task
    try:
        sys = build_system(cfg.experiment, a1, a2, cfg.params)
        return classify_cell(sys, cfg, axis=(a1, a2))
    except (FilteredHenonError, ValueError, FloatingPointError) as exc:
        return CellResult(a1, a2, float("nan"), None, 0, None, error=f"{type(exc).__name__}: {exc}")


def run_experiment(cfg: ExperimentConfig, workers: int = 1, progress: Callable | None = None):
    """Evaluate every grid cell; results come back in row-major order."""
    a1, a2 = cfg.axis1.values(), cfg.axis2.values()
    tasks = [(cfg, float(u), float(v)) for u in a1 for v in a2]
    result = ExperimentResult(cfg, a1, a2)
    workers = max(1, int(workers or 1))
    if workers == 1 or len(tasks) < 2:
        it = map(_run_cell, tasks)
        for k, cell in enumerate(it):
            result.cells.append(cell)
            if progress:
                progress(k + 1, len(tasks))
        return result
    chunk = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for k, cell in enumerate(pool.map(_run_cell, tasks, chunksize=chunk)):
            result.cells.append(cell)
            if progress:
                progress(k + 1, len(tasks))
    return result


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


# --- bifurcation diagrams ---------------------------------------------------


@dataclass
class BifurcationPoint:
    gain: float
    samples: np.ndarray
    diverged: bool = False


def _family_taps(family, g):
    if callable(family):
        return np.asarray(family(g), dtype=float)
    nz = len(make_prototype(with_gain(family, 1.0)).coefficients) - 1
    return _taps(family, g, nz)


def bifurcation_diagram(
    family: Union[FilterPrototype, Callable[[float], Sequence[float]]],
    g_values,
    *,
    n_total: int = 3000,
    n_keep: int = 200,
    offset: float = 1e-3,
    params: MapParams | None = None,
) -> list:
    """Follow the attractor across an ascending sequence of gains.

    ``family`` is a gain-parameterized prototype (its own gain is ignored)
    or a callable mapping a gain to taps.  Each run starts from the final
    state of the previous gain; the first run, and any run after an escape,
    starts from ``p+`` shifted by ``offset`` along ``x1``.
    """
    g_values = np.asarray(g_values, dtype=float)
    if np.any(np.diff(g_values) <= 0):
        raise ValueError("gain grid must be strictly ascending")
    if not 0 < n_keep <= n_total:
        raise ValueError("need 0 < n_keep <= n_total")
    points = []
    x_prev = None
    for g in g_values:
        sys = FilteredHenonSystem(_family_taps(family, g), params)
        if x_prev is None or x_prev.size != sys.dimension:
            x0 = fixed_points(sys).p_plus.copy()
            x0[0] += offset
        else:
            x0 = x_prev
        orbit = iterate(sys, x0, n_total)
        if orbit.diverged:
            points.append(BifurcationPoint(float(g), np.empty(0), True))
            x_prev = None
        else:
            points.append(BifurcationPoint(float(g), orbit.states[-n_keep:, 0].copy()))
            x_prev = orbit.states[-1].copy()
    return points


def count_clusters(samples, tol: float = 1e-6) -> int:
    """Number of groups of values separated by gaps larger than ``tol``."""
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size == 0:
        return 0
    return int(1 + np.count_nonzero(np.diff(s) > tol))
