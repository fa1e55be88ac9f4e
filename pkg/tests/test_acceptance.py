"""End-to-end acceptance suite.

One test per criterion; each prints a single PASS/FAIL line (visible with
``pytest -s`` or on failure) and asserts at the pinned tolerance.
"""

import time

import numpy as np
import pytest

import loewnerlab.experiments as ex
from loewnerlab.loewner import (
    SubordinationChain, chain_maps, g_prime0,
)
from loewnerlab.measures import (
    DrivingMeasure, MeasureS1, dirac_path_measure, project_Pn, coarsen,
    uniform_driving,
)
from loewnerlab.paths import min_steps, sample_circle_bm
from loewnerlab.rate import dirichlet_rate, energy, tuple_rate, variational_rate

from conftest import random_positive_trig_density
from test_rate import cosine_rate_exact, cosine_rate_quadrature


def report(num, name, passed, detail):
    print(f"CRITERION {num:2d} [{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"criterion {num} ({name}): {detail}"


def test_criterion_01_uniform_driving_exact():
    t0 = time.time()
    radii = np.linspace(0.05, 0.5, 6)
    angles = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    zs = np.concatenate([[0.0 + 0j],
                         (radii[:, None] * np.exp(1j * angles)).ravel()])
    times = np.linspace(0.0, 1.0, 11)
    f = chain_maps(uniform_driving(1024), zs, times)
    expected = np.exp(-times)[:, None] * zs[None, :]
    err = float(np.max(np.abs(f - expected)))
    dt = time.time() - t0
    report(1, "uniform driving is exact radial decay",
           err < 1e-7 and dt < 10, f"max error {err:.2e}, {dt:.1f}s")


def test_criterion_02_conformal_radius_identity(rng):
    t0 = time.time()
    times = [0.25, 0.5, 1.0]
    drivings = []
    for k in range(10):
        n_slabs = [1, 2, 4, 8][k % 4]
        drivings.append(DrivingMeasure(
            slabs=[random_positive_trig_density(rng, 128)
                   for _ in range(n_slabs)]))
    for k, kappa in enumerate([4, 8, 16, 32, 64, 96, 128, 160, 224, 256]):
        path = sample_circle_bm(kappa, min_steps(kappa), seed=100 + k)
        drivings.append(dirac_path_measure(path))
    worst = 0.0
    for rho in drivings:
        gp = g_prime0(rho, times)
        worst = max(worst, max(abs(g - np.exp(t)) / np.exp(t)
                               for g, t in zip(gp, times)))
    dt = time.time() - t0
    report(2, "finite-difference g'(0) equals exp(t)",
           worst < 1e-6 and dt < 120,
           f"worst relative error {worst:.2e} over 20 drivings, {dt:.0f}s")


def test_criterion_03_rate_function_values():
    t0 = time.time()
    r0 = dirichlet_rate(MeasureS1.uniform(1024))
    ok = not r0.infinite and abs(r0.value) < 1e-12
    worst = 0.0
    for a in (0.1, 0.5, 0.9):
        exact = cosine_rate_exact(a)
        assert exact == pytest.approx(cosine_rate_quadrature(a), rel=1e-10)
        r = dirichlet_rate(MeasureS1.cosine(a))
        worst = max(worst, abs(r.value - exact) / exact)
    dt = time.time() - t0
    report(3, "closed-form rate values",
           ok and worst < 1e-6 and dt < 1,
           f"uniform {r0.value:.1e}, worst cosine rel {worst:.2e}, {dt:.2f}s")


def test_criterion_04_variational_equality(rng):
    t0 = time.time()
    mus = [MeasureS1.cosine(a) for a in (0.1, 0.5, 0.9)]
    mus += [random_positive_trig_density(rng, 256) for _ in range(2)]
    worst = 0.0
    for mu in mus:
        i_val = dirichlet_rate(mu).value
        v = variational_rate(mu, degree=16)
        worst = max(worst, abs(v.value - i_val) / i_val)
    dt = time.time() - t0
    report(4, "variational equals Dirichlet at degree 16",
           worst < 0.01 and dt < 60,
           f"worst relative gap {worst:.2e} over 5 measures, {dt:.1f}s")


def test_criterion_05_projection_lattice(rng):
    t0 = time.time()
    coh_worst = 0.0
    for _ in range(100):
        k = int(rng.choice([1, 2, 3, 4, 6, 8, 16]))
        rho = DrivingMeasure(slabs=[random_positive_trig_density(rng, 64)
                                    for _ in range(k)])
        n = int(rng.integers(0, 8))
        fine = project_Pn(rho, n + 1, m_bins=64)
        direct = project_Pn(rho, n, m_bins=64)
        via = coarsen(fine)
        # bin-wise equality up to a few ULPs: non-dyadic overlap weights
        # such as 1/3 round differently in the two summation orders
        for a, b in zip(direct.entries, via.entries):
            coh_worst = max(coh_worst, float(np.max(np.abs(
                a.as_density(64) - b.as_density(64)))))
    # Jensen monotonicity and energy convergence on dyadic slab layouts
    rho = DrivingMeasure(slabs=[random_positive_trig_density(rng, 64)
                                for _ in range(8)])
    vals = [tuple_rate(project_Pn(rho, n, m_bins=64)).value for n in range(9)]
    jensen_ok = all(lo <= hi + 1e-12 for lo, hi in zip(vals, vals[1:]))
    e_gap = abs(vals[-1] - energy(rho).value)
    dt = time.time() - t0
    report(5, "projection coherence, Jensen monotonicity, energy limit",
           coh_worst < 1e-15 and jensen_ok and e_gap < 1e-9 and dt < 60,
           f"coherence {coh_worst:.1e}, jensen {jensen_ok}, "
           f"energy gap {e_gap:.1e}, {dt:.0f}s")


def test_criterion_06_lln_trend():
    t0 = time.time()
    spec = ex.ExperimentSpec(kind="lln", kappas=[10.0, 100.0, 1000.0, 10000.0],
                             replicas=100, base_seed=6, m_bins=256, depth=4)
    result = ex.run_lln(spec)
    means = [result.summary["per_kappa"][str(k)]["w1_mean"]
             for k in spec.kappas]
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    dt = time.time() - t0
    report(6, "occupation-to-uniform distance shrinks with variance",
           decreasing and means[-1] < 0.05 and dt < 300,
           f"means {[f'{m:.4f}' for m in means]}, {dt:.0f}s")


def test_criterion_07_chain_convergence_trend():
    t0 = time.time()
    spec = ex.ExperimentSpec(kind="chain_convergence",
                             kappas=[16.0, 64.0, 256.0, 1024.0],
                             replicas=30, base_seed=7)
    result = ex.run_chain_convergence(spec)
    means = [result.summary["per_kappa"][str(k)]["distance_mean"]
             for k in spec.kappas]
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    dt = time.time() - t0
    report(7, "chain distance to concentric-disk chain shrinks",
           decreasing and dt < 1800,
           f"means {[f'{m:.4f}' for m in means]}, {dt:.0f}s")


def test_criterion_08_ldp_slope():
    t0 = time.time()
    spec = ex.ExperimentSpec(kind="ldp_slope", kappas=[4.0, 8.0, 16.0, 32.0],
                             replicas=100_000, base_seed=8, m_bins=256,
                             epsilon=0.08)
    result = ex.run_ldp_slope(spec, MeasureS1.cosine(0.5))
    target_rate = cosine_rate_exact(0.5)
    fit = result.summary["fit"]
    slope = None if fit is None else fit["slope"]
    ok = (slope is not None
          and target_rate / 2 <= slope <= target_rate * 2)
    dt = time.time() - t0
    per_k = {k: (v["p"] if not v["censored"] else "censored")
             for k, v in result.summary["per_kappa"].items()}
    report(8, "rare-event slope matches the rate of the target",
           ok and dt < 1800,
           f"slope {slope}, target {target_rate:.4f}, p {per_k}, {dt:.0f}s")


def test_criterion_09_fluctuation_covariance():
    t0 = time.time()
    spec = ex.ExperimentSpec(kind="fluctuations", replicas=10_000, base_seed=9,
                             t_final=200.0, theta_points=8)
    result = ex.run_fluctuations(spec, oracle_samples=2_000_000)
    err = result.summary["max_rel_covariance_error"]
    oracle = result.summary["oracle_check"]
    dt = time.time() - t0
    report(9, "local-time fluctuation covariance matches the limit law",
           err < 0.10 and oracle["simulation_rel_err"] < 0.005 and dt < 1200,
           f"max relative error {err:.3f}, oracle sim check "
           f"{oracle['simulation_rel_err']:.4f}, {dt:.0f}s")


def test_criterion_10_determinism():
    t0 = time.time()
    specs = [
        ex.ExperimentSpec(kind="lln", kappas=[10.0, 100.0], replicas=5,
                          base_seed=10, depth=3),
        ex.ExperimentSpec(kind="chain_convergence", kappas=[16.0], replicas=2,
                          base_seed=10),
        ex.ExperimentSpec(kind="ldp_slope", kappas=[4.0, 8.0], replicas=500,
                          base_seed=10),
        ex.ExperimentSpec(kind="fluctuations", replicas=100, base_seed=10,
                          t_final=20.0),
    ]
    runners = {
        "lln": ex.run_lln,
        "chain_convergence": ex.run_chain_convergence,
        "ldp_slope": lambda s: ex.run_ldp_slope(s, MeasureS1.cosine(0.5)),
        "fluctuations": lambda s: ex.run_fluctuations(
            s, oracle_samples=200_000),
    }
    all_ok = True
    for spec in specs:
        a = runners[spec.kind](spec)
        b = runners[spec.kind](spec)
        all_ok &= (a.summary == b.summary and a.records == b.records)
    dt = time.time() - t0
    report(10, "identical spec and seed reproduce identical output",
           all_ok and dt < 300, f"4 experiment kinds re-run, {dt:.0f}s")
