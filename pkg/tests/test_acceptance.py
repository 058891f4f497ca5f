"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (also repeated in the pytest
terminal summary) before asserting.
"""

import math

import numpy as np
import pytest

from filtered_henon.analysis import lyapunov_largest, spectral_radius
from filtered_henon.cli import main as cli_main
from filtered_henon.dynamics import FilteredHenonSystem, fixed_points, jacobian_at, jacobian_general, step
from filtered_henon.fir_design import (
    EquallySpaced,
    FilterSpec,
    HammingLowpass,
    Notch,
    ZeroSet,
    expand_zeros,
    frequency_response,
    freqz,
    gain_of,
    make_prototype,
)
from filtered_henon.sweep import (
    ExperimentConfig,
    OrbitClass,
    bifurcation_diagram,
    build_system,
    classify_cell,
    count_clusters,
    run_experiment,
)

from conftest import (
    ACCEPTANCE_RESULTS,
    benettin_lyapunov,
    dyadic,
    random_taps_with_gain,
    random_unit_circle_zeros,
)

pytestmark = pytest.mark.acceptance


def report(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    print(line)
    ACCEPTANCE_RESULTS.append(line)
    assert ok, line


def uniform_unit_circle_zeros(rng, nz):
    zeros = []
    for _ in range(nz // 2):
        theta = rng.uniform(1e-3, math.pi - 1e-3)
        z = complex(math.cos(theta), math.sin(theta))
        zeros += [z, z.conjugate()]
    if nz % 2:
        zeros.append(complex(-1.0, 0.0))
    return zeros


def fd_jacobian(sys, x, h=1e-6):
    J = np.empty((x.size, x.size))
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        J[:, k] = (step(sys, x + e) - step(sys, x - e)) / (2 * h)
    return J


def test_01_notch_boundaries():
    cfg = ExperimentConfig.default("II", axis1_min=0.5, axis1_max=0.5, axis1_step=0.01,
                                   axis2_min=0.0, axis2_max=1.3, axis2_step=0.01)
    res = run_experiment(cfg)
    g = res.axis2
    cls = [res.cell(0, j).orbit_class for j in range(g.size)]
    first_periodic = next(g[j] for j, c in enumerate(cls) if c is not OrbitClass.STABLE_FIXED_POINT)
    first_chaotic = next(g[j] for j, c in enumerate(cls) if c is OrbitClass.CHAOTIC)
    last_bounded = max(j for j, c in enumerate(cls) if c is not OrbitClass.DIVERGENT)
    onset = g[last_bounded + 1]
    ok = (
        cls[int(np.flatnonzero(g == first_periodic)[0])] is OrbitClass.PERIODIC
        and abs(first_periodic - 0.51) <= 0.02
        and abs(first_chaotic - 0.77) <= 0.02
        and abs(onset - 1.10) <= 0.02
    )
    report(1, "notch boundaries at pi/2", ok,
           f"fixed->periodic {first_periodic:.2f}, periodic->chaotic {first_chaotic:.2f}, "
           f"divergent from {onset:.2f}")


def test_02_equally_spaced_claims():
    bad = []
    for nz in range(2, 21):
        if classify_cell(build_system("I", 1.0, nz)).orbit_class is not OrbitClass.CHAOTIC:
            bad.append(f"G=1 N_z={nz}")
        if classify_cell(build_system("I", 0.45, nz)).orbit_class is not OrbitClass.STABLE_FIXED_POINT:
            bad.append(f"G=0.45 N_z={nz}")
    report(2, "chaos at G=1 and fixed point at G=0.45 for N_z 2..20", not bad,
           "38 cells" if not bad else "mismatch: " + ", ".join(bad))


def test_03_hamming_claims():
    wc = np.round(np.arange(0.01, 1.0, 0.01), 10)
    bad = []
    for w in wc:
        if classify_cell(build_system("V", 1, w)).orbit_class is not OrbitClass.STABLE_FIXED_POINT:
            bad.append(f"N_z=1 wc={w}")
        if classify_cell(build_system("V", 2, w)).orbit_class is not OrbitClass.PERIODIC:
            bad.append(f"N_z=2 wc={w}")
    report(3, "Hamming N_z=1 fixed and N_z=2 periodic for every cutoff", not bad,
           f"{2 * wc.size} cells" if not bad else "mismatch: " + ", ".join(bad))


def test_04_lower_fixed_point_unstable():
    rng = np.random.default_rng(4)
    worst = math.inf
    for _ in range(200):
        nz = int(rng.integers(1, 21))
        g = float(rng.uniform(0.05, 1.4))
        c = expand_zeros(FilterSpec(ZeroSet(uniform_unit_circle_zeros(rng, nz)), g))
        sys = FilteredHenonSystem(c)
        rho = spectral_radius(jacobian_at(sys, fixed_points(sys).p_minus)).spectral_radius
        worst = min(worst, rho)
    report(4, "p- unstable for 200 random filters", worst > 1, f"smallest radius {worst:.4f}")


def test_05_fixed_point_correctness():
    rng = np.random.default_rng(5)
    max_res = 0.0
    max_gap = 0.0
    for _ in range(500):
        g = dyadic(float(rng.uniform(0.05, 1.5)) * (1 if rng.random() < 0.5 else -1))
        systems = [FilteredHenonSystem(random_taps_with_gain(rng, int(rng.integers(1, 21)), g))
                   for _ in range(2)]
        fps = [fixed_points(s) for s in systems]
        for s, fp in zip(systems, fps):
            for p in (fp.p_plus, fp.p_minus):
                max_res = max(max_res, float(np.max(np.abs(step(s, p) - p))))
        max_gap = max(max_gap, abs(fps[0].p1_plus - fps[1].p1_plus),
                      abs(fps[0].p1_minus - fps[1].p1_minus))
    report(5, "fixed-point residual and gain-only dependence", max_res < 1e-10 and max_gap < 1e-12,
           f"max residual {max_res:.2e}, max p1 gap {max_gap:.2e}")


def test_06_unfiltered_exponent():
    sys = FilteredHenonSystem([1.0, 0.0])
    x0 = [0.1, 0.1]
    est = lyapunov_largest(sys, x0, 100_000, 1000).lambda_max
    ref = benettin_lyapunov(sys, x0, 100_000, 1000)
    ok = abs(est - 0.419) <= 0.02 and abs(ref - 0.419) <= 0.02
    report(6, "classic map exponent", ok, f"tangent {est:.4f}, two-orbit {ref:.4f}")


def test_07_jacobians():
    rng = np.random.default_rng(7)
    worst = 0.0
    for D in (2, 3, 4, 8, 21):
        for _ in range(100):
            g = float(rng.uniform(0.2, 1.4))
            c = expand_zeros(FilterSpec(ZeroSet(random_unit_circle_zeros(rng, D - 1)), g))
            sys = FilteredHenonSystem(c)
            x = rng.uniform(-2, 2, D)
            J = jacobian_at(sys, x)
            worst = max(worst, float(np.max(np.abs(J - fd_jacobian(sys, x))) / np.max(np.abs(J))))
    same = True
    for D in (3, 4):
        for _ in range(100):
            c = expand_zeros(FilterSpec(ZeroSet(random_unit_circle_zeros(rng, D - 1)), 1.0))
            sys = FilteredHenonSystem(c)
            x = rng.uniform(-2, 2, D)
            same &= bool(np.array_equal(jacobian_at(sys, x), jacobian_general(sys, x)))
    report(7, "Jacobians vs finite differences and general form", worst < 1e-6 and same,
           f"max relative error {worst:.2e}, small-order forms equal general: {same}")


def _root_error(zeros, c):
    roots = list(np.roots(np.asarray(c) / c[0]))
    err = 0.0
    for z in zeros:
        k = int(np.argmin([abs(r - z) for r in roots]))
        err = max(err, abs(roots.pop(k) - z))
    return err


def test_08_filter_algebra():
    rng = np.random.default_rng(8)
    root_err = gain_err = 0.0
    for nz in range(1, 41):
        for _ in range(5):
            g = float(rng.uniform(0.05, 2.0))
            zeros = random_unit_circle_zeros(rng, nz)
            c = expand_zeros(FilterSpec(ZeroSet(zeros), g))
            root_err = max(root_err, _root_error(zeros, c))
            gain_err = max(gain_err, abs(gain_of(c) - g))
    null = max(abs(frequency_response(make_prototype(Notch(w, 1.0)), w)) for w in np.linspace(0.05, 1, 20) * math.pi)
    sym = 0.0
    for nz in range(1, 41):
        for wc in (0.1, 0.5, 0.9):
            h = make_prototype(HammingLowpass(nz, wc * math.pi)).coefficients
            sym = max(sym, float(np.max(np.abs(h - h[::-1]))))
    omega, db, _ = freqz(make_prototype(HammingLowpass(19, 0.5 * math.pi)))
    stop = float(np.max(db[omega >= (0.5 + 3.3 / 19) * math.pi]))
    ok = root_err < 1e-8 and gain_err < 1e-12 and null < 1e-12 and sym < 1e-12 and stop <= -49
    report(8, "filter algebra", ok,
           f"root error {root_err:.1e}, gain error {gain_err:.1e}, notch null {null:.1e}, "
           f"Hamming asymmetry {sym:.1e}, stopband {stop:.1f} dB")


def test_09_bifurcation_structure():
    pts = bifurcation_diagram(Notch(math.pi / 2), [0.4, 0.65, 1.0])
    n = [count_clusters(p.samples) for p in pts]
    dev = float(np.max(np.abs(pts[0].samples - 1.49152)))
    ok = n[0] == 1 and dev <= 1e-4 and n[1] == 2 and n[2] > 50
    report(9, "bifurcation clusters at pi/2", ok,
           f"clusters {n[0]}/{n[1]}/{n[2]}, fixed-point deviation {dev:.1e}")


def test_10_sweep_determinism(tmp_path):
    # reduced grid: the default 96 x 301 grid takes about 7 minutes per run on one core
    argv = ["sweep", "--experiment", "II", "--seed", "42", "--w0-min", "0.3", "--w0-max", "0.7",
            "--w0-step", "0.2", "--g-step", "0.02"]
    codes = [
        cli_main([*argv, "--workers", "1", "--out", str(tmp_path / "a")]),
        cli_main([*argv, "--workers", "1", "--out", str(tmp_path / "b")]),
        cli_main([*argv, "--workers", "2", "--out", str(tmp_path / "c")]),
    ]
    blobs = [(tmp_path / d / "sweep.csv").read_bytes() for d in "abc"]
    ok = codes == [0, 0, 0] and blobs[0] == blobs[1] == blobs[2]
    cells = len(blobs[0].splitlines()) - 3
    report(10, "sweep CSV byte-identical across runs and worker counts", ok,
           f"{cells} cells, exit codes {codes}")
