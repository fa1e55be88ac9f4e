"""Circular Brownian driving paths and their occupation statistics.

The driving process is a Brownian motion on the unit circle with variance
parameter ``kappa``: the unwrapped angle performs a linear Brownian motion
with Var(angle at t) = kappa * t, started at angle 0 (position 1).  Angles
are stored unwrapped so that the Gaussian increment structure survives;
wrapping happens only when binning.

Randomness comes from numpy's Philox counter-based generator keyed by
(seed, stream), so every path is bit-reproducible across platforms and
replicas get independent streams from the same base seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CirclePath:
    """A sampled circular Brownian trajectory on a uniform time grid."""

    kappa: float
    times: np.ndarray      # strictly increasing, times[0] == 0
    angles: np.ndarray     # unwrapped radians, angles[0] == 0
    seed: int

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def positions(self) -> np.ndarray:
        """Wrapped positions exp(i * angle) on the unit circle."""
        return np.exp(1j * self.angles)


@dataclass(frozen=True)
class OccupationMeasure:
    """Equal-width angular histogram of time spent in each cell."""

    total_mass: float      # elapsed capacity time
    bins: np.ndarray       # nonnegative, sums to total_mass

    @property
    def m(self) -> int:
        return len(self.bins)


def sample_circle_bm(
    kappa: float,
    n_steps: int,
    t_max: float = 1.0,
    seed: int = 0,
    stream: int = 0,
) -> CirclePath:
    """Sample a circular Brownian path with variance ``kappa`` on [0, t_max].

    The grid is uniform with step t_max / n_steps; increments are i.i.d.
    N(0, kappa * dt).  ``stream`` selects an independent replica stream
    under the same base seed.
    """
    if not np.isfinite(kappa) or kappa < 0:
        raise ValueError(f"kappa must be finite and nonnegative, got {kappa}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")

    dt = t_max / n_steps
    rng = path_rng(seed, stream)
    increments = rng.normal(0.0, np.sqrt(kappa * dt), size=n_steps)
    angles = np.concatenate([[0.0], np.cumsum(increments)])
    times = np.linspace(0.0, t_max, n_steps + 1)
    path = CirclePath(kappa=float(kappa), times=times, angles=angles, seed=seed)
    return path


def path_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream); documented and portable."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(stream & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def min_steps(kappa: float, t_max: float = 1.0) -> int:
    # keeps single-step angular moves below (pi/8) rms on average
    return max(1, int(np.ceil(64.0 * kappa * t_max)))


def windowed_occupation(
    path: CirclePath, t0: float, t1: float, m_bins: int
) -> np.ndarray:
    """Histogram of time spent per angular bin during [t0, t1].

    Piecewise-constant-in-time rule: the position over [s, s + dt) is the
    wrapped angle at the left endpoint s.  Partial overlap with the window
    contributes the overlap duration.  Returns bin masses summing to
    t1 - t0.
    """
    times, angles = path.times, path.angles
    durations = np.clip(np.minimum(times[1:], t1) - np.maximum(times[:-1], t0),
                        0.0, None)
    active = durations > 0
    wrapped = np.mod(angles[:-1][active], TWO_PI)
    idx = np.minimum((wrapped / (TWO_PI / m_bins)).astype(np.intp), m_bins - 1)
    bins = np.bincount(idx, weights=durations[active], minlength=m_bins)
    return bins


def occupation_measure(path: CirclePath, t: float, m_bins: int) -> OccupationMeasure:
    """Occupation measure of the path up to time ``t`` on ``m_bins`` cells."""
    if m_bins < 1:
        raise ValueError(f"m_bins must be >= 1, got {m_bins}")
    if t < 0 or t > path.t_max:
        raise ValueError(f"t={t} outside the path time range [0, {path.t_max}]")
    bins = windowed_occupation(path, 0.0, t, m_bins)
    return OccupationMeasure(total_mass=float(t), bins=bins)


def average_occupation(occ: OccupationMeasure):
    """Normalize an occupation measure to a probability measure on S^1."""
    from .measures import MeasureS1

    if occ.total_mass <= 0:
        raise ValueError("cannot normalize an occupation measure with zero mass")
    return MeasureS1.from_density(occ.bins / occ.total_mass)


def local_time_field(path: CirclePath, t: float, m_bins: int) -> np.ndarray:
    """Binned local-time density (occupation mass per unit arc length).

    Integrating the field over the circle (sum * 2*pi/m) recovers ``t``.
    """
    occ = occupation_measure(path, t, m_bins)
    return occ.bins / (TWO_PI / m_bins)
