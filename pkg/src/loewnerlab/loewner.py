"""Radial Loewner flows: point-driven and measure-driven.

The forward flow integrates, for z in the unit disk,

    dg/dt = -g * H(g, t),    H(g, t) = integral (g + zeta)/(g - zeta) rho_t(dzeta),

which for a Dirac driving measure is the classical single-point radial
Loewner ODE.  A point is swallowed (enters the hull) at the first time the
solution reaches the driving singularity or the unit circle; the supremum
definition of the survival time is made operational by configurable
proximity thresholds.

Inverse maps are computed by the reverse flow.  Evaluating f at many times
t1 < t2 < ... < tk costs a single backward sweep: starting from the largest
time, probe points are injected at each requested time and all active
points are advanced together through the remaining driving segments.

Integration uses an embedded Cash-Karp 4(5) pair on the complex ODE with
per-point step control; near the driving singularity the step is capped
proportionally to the squared distance, which is the natural stiffness
scale of the vector field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .measures import DrivingMeasure, MeasureS1, bin_centers
from .paths import CirclePath

# Cash-Karp 4(5) tableau
_CK_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_B5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)
_CK_B4 = (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)

_STEP_SAFETY = 0.9
_STEP_MIN = 1e-14
_SING_CAP = 0.1        # step <= cap * dist^2 near the singularity


@dataclass(frozen=True)
class _Segment:
    """One interval of constant driving data."""

    t0: float
    t1: float
    zetas: np.ndarray    # singularity locations (atoms) or bin centers
    weights: np.ndarray | None   # None marks pure point driving (single atom)
    smooth: bool = False         # density-backed: field stays bounded at S^1


def _segments(driving: DrivingMeasure, t_max: float) -> list[_Segment]:
    if driving.path is not None:
        path = driving.path
        zs = np.exp(1j * path.angles[:-1])
        segs = []
        for k in range(path.n_steps):
            t0, t1 = float(path.times[k]), float(path.times[k + 1])
            if t0 >= t_max:
                break
            segs.append(_Segment(t0, min(t1, t_max), np.array([zs[k]]), None))
        return segs
    segs = []
    k = driving.n_slabs
    for j in range(k):
        t0, t1 = j / k, (j + 1) / k
        if t0 >= t_max:
            break
        mu = driving.slabs[j]
        if mu.atoms is not None:
            zetas = np.exp(1j * np.array([a for a, _ in mu.atoms]))
            w = np.array([wt for _, wt in mu.atoms])
            smooth = False
        else:
            m = mu.m
            zetas = np.exp(1j * bin_centers(m))
            w = mu.density / mu.total
            smooth = True
        if len(zetas) == 1 and abs(w[0] - 1.0) < 1e-12:
            segs.append(_Segment(t0, min(t1, t_max), zetas, None))
        else:
            segs.append(_Segment(t0, min(t1, t_max), zetas, w, smooth))
    return segs


def _split_segments(segs: list[_Segment], cuts: Sequence[float]) -> list[_Segment]:
    """Insert extra boundaries so each cut lands exactly on a segment edge."""
    out = []
    for seg in segs:
        inner = sorted(c for c in cuts if seg.t0 + 1e-15 < c < seg.t1 - 1e-15)
        lo = seg.t0
        for c in inner:
            out.append(_Segment(lo, c, seg.zetas, seg.weights, seg.smooth))
            lo = c
        out.append(_Segment(lo, seg.t1, seg.zetas, seg.weights, seg.smooth))
    return out


def _herglotz(g: np.ndarray, seg: _Segment) -> np.ndarray:
    if seg.weights is None:
        z = seg.zetas[0]
        return (g + z) / (g - z)
    return ((g[:, None] + seg.zetas[None, :])
            / (g[:, None] - seg.zetas[None, :])) @ seg.weights


def _sing_dist(g: np.ndarray, seg: _Segment) -> np.ndarray:
    if seg.weights is None:
        return np.abs(g - seg.zetas[0])
    return 1.0 - np.abs(g)


def _rk_step(fun, y: np.ndarray, h: np.ndarray):
    """Vectorized Cash-Karp step with per-point step sizes."""
    ks = [fun(y)]
    for row in _CK_A[1:]:
        incr = sum(c * k for c, k in zip(row, ks))
        ks.append(fun(y + h * incr))
    y5 = y + h * sum(b * k for b, k in zip(_CK_B5, ks))
    y4 = y + h * sum(b * k for b, k in zip(_CK_B4, ks))
    err = np.abs(y5 - y4)
    return y5, err


@dataclass
class FlowResult:
    """Outcome of the forward flow for one starting point."""

    survival_time: float            # inf means survived past t_max
    trajectory: np.ndarray          # g at the requested times (nan once dead)
    blowup_flag: bool
    undetermined: bool = False

    @property
    def survived(self) -> bool:
        return np.isinf(self.survival_time)


def _forward_many(
    driving: DrivingMeasure,
    zs: np.ndarray,
    t_max: float,
    tol: float = 1e-10,
    tol_singularity: float = 1e-5,
    tol_boundary: float = 1e-6,
    record_times: Sequence[float] = (),
):
    """Forward flow for a batch of points.

    Returns (survival_times, trajectories, undetermined) where
    trajectories has shape (len(record_times), len(zs)).
    """
    zs = np.asarray(zs, dtype=complex)
    n = len(zs)
    g = zs.copy()
    alive = np.ones(n, dtype=bool)
    undet = np.zeros(n, dtype=bool)
    T = np.full(n, np.inf)
    rec = sorted(float(t) for t in record_times)
    traj = np.full((len(rec), n), np.nan + 0j)
    rec_i = 0

    def record_up_to(t: float) -> None:
        nonlocal rec_i
        while rec_i < len(rec) and rec[rec_i] <= t + 1e-15:
            traj[rec_i, alive] = g[alive]
            rec_i += 1

    record_up_to(0.0)
    segs = _split_segments(_segments(driving, t_max), rec)
    for seg in segs:
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        y = g[idx]
        tau = np.full(len(idx), seg.t0)
        h = np.full(len(idx), seg.t1 - seg.t0)
        live = np.ones(len(idx), dtype=bool)   # still integrating this segment
        fun = lambda x: -x * _herglotz(x, seg)
        while live.any():
            d = _sing_dist(y, seg)
            dead = live & ((d < tol_singularity) | (np.abs(y) > 1 - tol_boundary))
            if dead.any():
                T[idx[dead]] = tau[dead]
                alive[idx[dead]] = False
                live &= ~dead
                if not live.any():
                    break
            # near an atom the field blows up like 1/d so the step must
            # shrink like d^2; a bounded density field only needs d
            local = d if seg.smooth else d * d
            cap = np.minimum(_SING_CAP * local + _STEP_MIN, seg.t1 - tau)
            h = np.minimum(h, cap)
            stuck = live & (h < _STEP_MIN) & (seg.t1 - tau > 10 * _STEP_MIN)
            if stuck.any():
                undet[idx[stuck]] = True
                alive[idx[stuck]] = False
                live &= ~stuck
                if not live.any():
                    break
            a = np.flatnonzero(live)
            with np.errstate(all="ignore"):
                y5, err = _rk_step(fun, y[a], h[a])
            scale = tol * np.maximum(1.0, np.abs(y[a]))
            bad = ~np.isfinite(err) | (err > scale)
            ok = ~bad
            if ok.any():
                acc = a[ok]
                y[acc] = y5[ok]
                tau[acc] += h[acc]
                grow = _STEP_SAFETY * (scale[ok] / np.maximum(err[ok], 1e-300)) ** 0.2
                h[acc] *= np.clip(grow, 0.2, 5.0)
            if bad.any():
                h[a[bad]] *= 0.5
            done = live & (tau >= seg.t1 - 1e-15)
            live &= ~done
        g[idx] = y
        record_up_to(seg.t1)
    record_up_to(t_max)
    return T, traj, undet


def forward_flow(
    driving: DrivingMeasure,
    z: complex,
    t_max: float = 1.0,
    tol: float = 1e-10,
    tol_singularity: float = 1e-5,
    tol_boundary: float = 1e-6,
    record_times: Sequence[float] = (),
) -> FlowResult:
    """Integrate the forward Loewner flow from a single point.

    Declares blow-up when the solution comes within ``tol_singularity`` of
    the driving singularity or within ``tol_boundary`` of the unit circle.
    """
    if abs(z) >= 1:
        raise ValueError(f"starting point must be inside the unit disk, |z|={abs(z)}")
    T, traj, undet = _forward_many(
        driving, np.array([z]), t_max, tol=tol,
        tol_singularity=tol_singularity, tol_boundary=tol_boundary,
        record_times=record_times)
    return FlowResult(
        survival_time=float(T[0]),
        trajectory=traj[:, 0],
        blowup_flag=bool(np.isfinite(T[0])),
        undetermined=bool(undet[0]))


# ---------------------------------------------------------------------------
# reverse flow / inverse maps
# ---------------------------------------------------------------------------

def chain_maps(
    driving: DrivingMeasure,
    zs: Sequence[complex],
    times: Sequence[float],
    tol: float = 1e-10,
) -> np.ndarray:
    """Evaluate f(z, t) for every z in ``zs`` and t in ``times``.

    Single backward sweep: at each requested time the probe points are
    injected and from then on advanced together through the earlier driving
    segments; a point injected at time t has been flowed for duration t
    when the sweep reaches 0, which is exactly f_t(z).
    Returns an array of shape (len(times), len(zs)).
    """
    zs = np.asarray(zs, dtype=complex)
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise ValueError("times must be nonnegative")
    if np.any(np.abs(zs) >= 1):
        raise ValueError("all probe points must be inside the unit disk")
    out = np.empty((len(times), len(zs)), dtype=complex)
    order = np.argsort(times)[::-1]
    t_top = max(times) if times else 0.0

    segs = _segments(driving, t_top) if t_top > 0 else []
    # checkpoints: all segment boundaries and injection times, descending
    marks = sorted({s.t0 for s in segs} | {s.t1 for s in segs} | set(times),
                   reverse=True)

    active = np.empty(0, dtype=complex)
    groups: list[tuple[int, int]] = []    # (times-index, offset into active)
    pending = list(order)

    # walk checkpoints from t_top down to 0
    u = t_top
    # inject any point requested at t_top (or at 0 when t_top == 0)
    def inject(t: float) -> None:
        nonlocal active
        while pending and abs(times[pending[0]] - t) <= 1e-15:
            ti = pending.pop(0)
            groups.append((ti, len(active)))
            active = np.concatenate([active, zs])

    inject(u)
    seg_idx = len(segs) - 1
    for mark in marks:
        if mark >= u:
            inject(mark)
            continue
        # integrate active points from u down to mark (single segment span)
        while seg_idx >= 0 and segs[seg_idx].t0 >= u:
            seg_idx -= 1
        seg = segs[seg_idx] if seg_idx >= 0 else None
        if len(active) and seg is not None:
            active = _integrate_reverse(active, seg, u, mark, tol)
        u = mark
        inject(u)
    for ti, off in groups:
        out[ti] = active[off:off + len(zs)]
    for ti in pending:     # t == 0 entries never integrated
        out[ti] = zs
    return out


def _integrate_reverse(y, seg, u_hi, u_lo, tol):
    """Advance dh/du = -h * H(h) from u_hi down to u_lo (constant driving)."""
    u = u_hi
    h = u_hi - u_lo
    fun = lambda x: -x * _herglotz(x, seg)
    while u > u_lo + 1e-15:
        h = min(h, u - u_lo)
        d = float(np.min(_sing_dist(y, seg)))
        h = min(h, _SING_CAP * (d if seg.smooth else d * d) + _STEP_MIN)
        if h < _STEP_MIN:
            raise RuntimeError("reverse-flow step size underflow")
        with np.errstate(all="ignore"):
            y5, err = _rk_step(fun, y, -h)
        scale = tol * np.maximum(1.0, np.abs(y))
        worst = np.max(err / scale) if len(err) else 0.0
        if not np.isfinite(worst) or worst > 1.0:
            h *= 0.5
            continue
        y = y5
        u -= h
        h *= float(np.clip(_STEP_SAFETY * worst ** -0.2 if worst > 0 else 5.0,
                           0.2, 5.0))
    return y


def inverse_map(
    driving: DrivingMeasure, z: complex, t: float, tol: float = 1e-10
) -> complex:
    """f_t(z): the normalized map of the disk onto the time-t domain."""
    if abs(z) >= 1:
        raise ValueError(f"|z| must be < 1, got {abs(z)}")
    return complex(chain_maps(driving, [z], [t], tol=tol)[0, 0])


# ---------------------------------------------------------------------------
# chains, hulls, traces, distances
# ---------------------------------------------------------------------------

@dataclass
class SubordinationChain:
    """An evaluable normalized chain f(z, t) on [0, t_max].

    Either backed by a driving measure (maps computed by the reverse flow)
    or by an explicit callable ``exact(z, t)`` for analytic reference
    chains.
    """

    driving: DrivingMeasure | None = None
    exact: Callable[[np.ndarray, float], np.ndarray] | None = None
    t_max: float = 1.0
    tol: float = 1e-10

    def __post_init__(self):
        if (self.driving is None) == (self.exact is None):
            raise ValueError("exactly one of driving/exact must be given")

    @staticmethod
    def decay_chain(t_max: float = 1.0) -> "SubordinationChain":
        """The chain f(z, t) = exp(-t) z of concentric-disk hulls."""
        return SubordinationChain(exact=lambda z, t: np.exp(-t) * np.asarray(z),
                                  t_max=t_max)

    def maps(self, zs: Sequence[complex], times: Sequence[float]) -> np.ndarray:
        if self.exact is not None:
            zs = np.asarray(zs, dtype=complex)
            return np.stack([self.exact(zs, t) for t in times])
        return chain_maps(self.driving, zs, times, tol=self.tol)

    def conformal_radius_error(self, times: Sequence[float],
                               r_probe: float = 1e-3) -> float:
        """Max relative error of the central-difference f'(0) against exp(-t)."""
        probes = np.array([r_probe, -r_probe, 1j * r_probe, -1j * r_probe])
        vals = self.maps(probes, times)
        worst = 0.0
        for row, t in zip(vals, times):
            d = ((row[0] - row[1]) / (2 * r_probe)
                 + (row[2] - row[3]) / (2j * r_probe)) / 2
            worst = max(worst, abs(d - np.exp(-t)) / np.exp(-t))
        return worst


def g_prime0(driving: DrivingMeasure, times: Sequence[float],
             r_probe: float = 1e-3, tol: float = 1e-10) -> np.ndarray:
    """Central-difference estimate of g_t'(0) at each requested time."""
    probes = np.array([r_probe, -r_probe, 1j * r_probe, -1j * r_probe])
    _, traj, _ = _forward_many(driving, probes, max(times), tol=tol,
                               record_times=times)
    return np.array([
        ((row[0] - row[1]) / (2 * r_probe) + (row[2] - row[3]) / (2j * r_probe)) / 2
        for row in traj])


@dataclass
class HullGrid:
    """Classification of a polar probe grid into swallowed / alive points."""

    points: np.ndarray          # complex probe locations
    survival_times: np.ndarray  # inf where alive past t
    status: list[str]           # "swallowed" | "alive" | "undetermined"
    t: float

    @property
    def swallowed(self) -> np.ndarray:
        return self.points[[s == "swallowed" for s in self.status]]

    @property
    def n_undetermined(self) -> int:
        return sum(s == "undetermined" for s in self.status)

    def to_csv(self) -> str:
        lines = ["re,im,survival_time,status"]
        for p, T, s in zip(self.points, self.survival_times, self.status):
            lines.append(f"{float(p.real)!r},{float(p.imag)!r},{float(T)!r},{s}")
        return "\n".join(lines) + "\n"


def hull_grid(
    driving: DrivingMeasure,
    t: float,
    n_radii: int = 24,
    n_angles: int = 48,
    tol: float = 1e-9,
) -> HullGrid:
    """Classify a polar grid of the disk by survival past time ``t``."""
    radii = (np.arange(n_radii) + 1) / (n_radii + 1)
    angles = np.arange(n_angles) * 2 * np.pi / n_angles
    pts = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
    T, _, undet = _forward_many(driving, pts, t, tol=tol)
    status = ["undetermined" if u else ("swallowed" if Tz <= t else "alive")
              for Tz, u in zip(T, undet)]
    return HullGrid(points=pts, survival_times=T, status=status, t=t)


def trace_point(
    path: CirclePath,
    t: float,
    r: float = 0.99,
    refine: bool = False,
    tol: float = 1e-10,
):
    """Boundary-limit trace estimate f_t(r * zeta_t) for a point-driven chain.

    With ``refine=True`` returns (estimate, gauge): a linear extrapolation
    in 1 - r from r in {0.99, 0.999} together with the two-radius gap as an
    error indicator.
    """
    if r < 0.9:
        raise ValueError("approach radius must be >= 0.9")
    from .measures import dirac_path_measure

    driving = dirac_path_measure(path)
    k = np.searchsorted(path.times, t, side="right") - 1
    k = min(max(k, 0), path.n_steps - 1)
    zeta = np.exp(1j * path.angles[k])
    if not refine:
        return inverse_map(driving, r * zeta, t, tol=tol)
    r0, r1 = 0.99, 0.999
    f0, f1 = chain_maps(driving, [r0 * zeta, r1 * zeta], [t], tol=tol)[0]
    gauge = abs(f1 - f0)
    est = f1 + (f1 - f0) * (1 - r1) / ((1 - r0) - (1 - r1))
    return complex(est), float(gauge)


def caratheodory_distance(
    chain_a: SubordinationChain,
    chain_b: SubordinationChain,
    r_compact: float = 0.5,
    time_grid: int = 8,
    n_radii: int = 4,
    n_angles: int = 8,
) -> float:
    """Sup distance of two chains over a compact polar grid and time grid."""
    if not 0 < r_compact < 1:
        raise ValueError("r_compact must be in (0, 1)")
    radii = r_compact * (np.arange(n_radii) + 1) / n_radii
    angles = np.arange(n_angles) * 2 * np.pi / n_angles
    zs = np.concatenate([[0.0 + 0j],
                         (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()])
    times = [(k + 1) / time_grid for k in range(time_grid)]
    fa = chain_a.maps(zs, times)
    fb = chain_b.maps(zs, times)
    return float(np.max(np.abs(fa - fb)))
