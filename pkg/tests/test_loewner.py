import numpy as np
import pytest

from loewnerlab.loewner import (
    SubordinationChain, caratheodory_distance, chain_maps, forward_flow,
    g_prime0, hull_grid, inverse_map, trace_point,
)
from loewnerlab.measures import (
    DrivingMeasure, MeasureS1, dirac_path_measure, uniform_driving,
)
from loewnerlab.paths import min_steps, sample_circle_bm

from conftest import random_positive_trig_density


def test_uniform_driving_forward_is_radial_growth():
    # [DERIVED] with uniform driving g_t(z) = e^t z exactly
    res = forward_flow(uniform_driving(256), 0.2 + 0.1j, t_max=1.0,
                       record_times=[0.5, 1.0])
    for g, t in zip(res.trajectory, [0.5, 1.0]):
        assert abs(g - np.exp(t) * (0.2 + 0.1j)) < 1e-9
    assert res.survived


def test_uniform_driving_survival_time():
    # z survives until e^t |z| reaches 1, i.e. T = -log|z|; the binned
    # density resolves the boundary approach only to a few bin widths
    res = forward_flow(uniform_driving(4096), 0.5 + 0j, t_max=2.0)
    assert res.survival_time == pytest.approx(np.log(2.0), abs=5e-3)


def test_constant_point_driving_survival():
    # [DERIVED] driving fixed at zeta=1: the real slit grows from 1; a point
    # on the positive real axis is swallowed in finite time, the antipode
    # survives much longer
    rho = DrivingMeasure(slabs=[MeasureS1.dirac(0.0)])
    near = forward_flow(rho, 0.5 + 0j, t_max=1.0)
    far = forward_flow(rho, -0.5 + 0j, t_max=1.0)
    assert near.blowup_flag and near.survival_time < 1.0
    assert far.survived


def test_forward_rejects_outside_points():
    with pytest.raises(ValueError):
        forward_flow(uniform_driving(16), 1.2 + 0j)


def test_chain_maps_uniform_exact():
    zs = [0.3 + 0.2j, -0.4j, 0.0]
    times = [0.0, 0.3, 1.0]
    f = chain_maps(uniform_driving(512), zs, times)
    for i, t in enumerate(times):
        for j, z in enumerate(zs):
            assert abs(f[i, j] - np.exp(-t) * z) < 1e-9


def test_inverse_then_forward_round_trip():
    # f_t followed by the forward flow to time t returns the start point
    path = sample_circle_bm(8.0, min_steps(8.0), seed=12)
    rho = dirac_path_measure(path)
    z, t = 0.3 - 0.2j, 0.7
    w = inverse_map(rho, z, t)
    res = forward_flow(rho, w, t_max=t, record_times=[t])
    assert abs(res.trajectory[0] - z) < 1e-6


def test_conformal_radius_identity_on_random_driving(rng):
    rho = DrivingMeasure(slabs=[random_positive_trig_density(rng, 64)
                                for _ in range(4)])
    gp = g_prime0(rho, [0.25, 1.0])
    for g, t in zip(gp, [0.25, 1.0]):
        assert abs(g - np.exp(t)) / np.exp(t) < 1e-6


def test_chain_conformal_radius_error():
    chain = SubordinationChain(driving=uniform_driving(256))
    assert chain.conformal_radius_error([0.25, 0.5, 1.0]) < 1e-6


def test_decay_chain_is_exact_reference():
    decay = SubordinationChain.decay_chain()
    out = decay.maps([0.5, 0.25j], [1.0])
    assert out[0, 0] == pytest.approx(0.5 * np.exp(-1.0))


def test_subordination_chain_validation():
    with pytest.raises(ValueError):
        SubordinationChain()
    with pytest.raises(ValueError):
        SubordinationChain(driving=uniform_driving(16),
                           exact=lambda z, t: z)


def test_caratheodory_distance_zero_on_matching_chains():
    a = SubordinationChain(driving=uniform_driving(256))
    b = SubordinationChain.decay_chain()
    assert caratheodory_distance(a, b) < 1e-9
    assert caratheodory_distance(b, b) == 0.0


def test_hull_grid_uniform_is_annulus():
    # [DERIVED] at time t the swallowed set is exactly {|z| >= e^{-t}}
    grid = hull_grid(uniform_driving(4096), 0.5, n_radii=12, n_angles=8)
    cutoff = np.exp(-0.5)
    for p, s in zip(grid.points, grid.status):
        if abs(p) > cutoff + 5e-3:
            assert s == "swallowed"
        elif abs(p) < cutoff - 5e-3:
            assert s == "alive"


def test_hull_grid_csv_shape():
    grid = hull_grid(uniform_driving(64), 0.2, n_radii=3, n_angles=4)
    lines = grid.to_csv().strip().split("\n")
    assert lines[0] == "re,im,survival_time,status"
    assert len(lines) == 1 + 12


def test_trace_point_stays_in_disk_and_gauge_shrinks():
    path = sample_circle_bm(4.0, min_steps(4.0), seed=3)
    est, gauge = trace_point(path, 0.5, refine=True)
    assert abs(est) < 1.0
    assert gauge < 0.05
    with pytest.raises(ValueError):
        trace_point(path, 0.5, r=0.5)


def test_maps_monotone_conformal_radius():
    # |f_t'(0)| = e^{-t} decreases: later maps shrink the probe image
    path = sample_circle_bm(16.0, min_steps(16.0), seed=7)
    chain = SubordinationChain(driving=dirac_path_measure(path))
    out = chain.maps([1e-3], [0.25, 0.5, 1.0])
    mags = np.abs(out[:, 0])
    assert mags[0] > mags[1] > mags[2]
