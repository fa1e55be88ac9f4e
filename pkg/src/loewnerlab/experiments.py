"""Seeded Monte Carlo experiments over the simulation and rate machinery.

Each experiment is driven by an ExperimentSpec and produces an
ExperimentResult holding per-replica records, per-configuration summaries,
and full provenance.  Replica r of configuration c draws from the Philox
stream keyed by (base_seed, c * 2^32 + r), so a spec plus base seed fully
determines every number produced, independent of execution order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, asdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__ as _pkg_version
from .measures import (
    DrivingMeasure, LevelTuple, MeasureS1, w1_circle, dirac_path_measure,
    uniform_driving, TWO_PI,
)
from .paths import CirclePath, min_steps, path_rng, sample_circle_bm, windowed_occupation
from .loewner import SubordinationChain, caratheodory_distance
from .rate import dirichlet_rate

RESULT_SCHEMA = 1

VARIANCE_SCALE = 1.0 / 3.0    # limit variance of the local-time fluctuation field


@dataclass
class ExperimentSpec:
    kind: str                       # lln | chain_convergence | ldp_slope | fluctuations
    kappas: list[float] = field(default_factory=list)
    replicas: int = 1
    base_seed: int = 0
    m_bins: int = 256
    depth: int = 6
    steps_per_unit: int = 64        # time steps per unit of kappa * t
    epsilon: float = 0.08           # ball radius for ldp_slope
    t_final: float = 200.0          # horizon for fluctuations
    theta_points: int = 8
    time_grid: int = 8
    r_compact: float = 0.5
    workers: int = 1

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if not 0 <= self.depth <= 12:
            raise ValueError("depth must be in [0, 12]")

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(obj: dict) -> "ExperimentSpec":
        return ExperimentSpec(**obj)


@dataclass
class ExperimentResult:
    spec: dict
    summary: dict
    records: list[dict]
    provenance: dict

    def to_json(self) -> dict:
        return {"schema": RESULT_SCHEMA, "spec": self.spec,
                "summary": self.summary, "provenance": self.provenance}


def _provenance() -> dict:
    return {"package_version": _pkg_version,
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}


def replica_stream(base_seed: int, config_index: int, replica: int) -> int:
    return (config_index << 32) | replica


def _sample(kappa: float, spec: ExperimentSpec, config: int, replica: int,
            t_max: float = 1.0) -> CirclePath:
    n = max(min_steps(kappa, t_max),
            int(math.ceil(spec.steps_per_unit * max(kappa, 1.0) * t_max)))
    return sample_circle_bm(kappa, n, t_max=t_max, seed=spec.base_seed,
                            stream=replica_stream(spec.base_seed, config, replica))


def _mean_se(xs: list[float]) -> tuple[float, float]:
    arr = np.asarray(xs, dtype=float)
    se = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return float(arr.mean()), se


def _run_replicas(fn, n: int, workers: int) -> list:
    if workers <= 1:
        return [fn(r) for r in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))   # merged in replica order


# ---------------------------------------------------------------------------
# law-of-large-numbers experiment
# ---------------------------------------------------------------------------

def _path_level_entries(path: CirclePath, depth: int, m_bins: int) -> np.ndarray:
    """Normalized windowed occupation measures at the finest level, one pass."""
    size = 2 ** depth
    times, angles = path.times, path.angles
    durations = np.diff(times)
    win = np.minimum((times[:-1] * size).astype(np.intp), size - 1)
    wrapped = np.mod(angles[:-1], TWO_PI)
    bin_idx = np.minimum((wrapped / (TWO_PI / m_bins)).astype(np.intp), m_bins - 1)
    flat = np.bincount(win * m_bins + bin_idx, weights=durations,
                       minlength=size * m_bins)
    entries = flat.reshape(size, m_bins) * size
    return entries


def path_uniform_dn_distance(path: CirclePath, depth: int, m_bins: int) -> float:
    """Projective distance of the Dirac path driving to uniform driving.

    Equivalent to ``dn_distance(dirac_path_measure(path), uniform, depth)``
    but computed from a single histogram pass plus dyadic coarsening.
    """
    entries = _path_level_entries(path, depth, m_bins)
    uniform = MeasureS1.uniform(m_bins)
    total = 0.0
    for n in range(depth, -1, -1):
        worst = max(
            w1_circle(MeasureS1.from_density(row), uniform) for row in entries)
        total += 2.0 ** (-n) * worst
        if n > 0:
            entries = 0.5 * (entries[0::2] + entries[1::2])
    return total


def run_lln(spec: ExperimentSpec) -> ExperimentResult:
    """Distance of average occupation (and of the driving measure) to uniform."""
    if spec.kind != "lln":
        raise ValueError(f"spec kind must be 'lln', got {spec.kind!r}")
    uniform = MeasureS1.uniform(spec.m_bins)
    records = []
    per_kappa = {}
    for c, kappa in enumerate(spec.kappas):
        def one(r, kappa=kappa, c=c):
            path = _sample(kappa, spec, c, r)
            occ = windowed_occupation(path, 0.0, 1.0, spec.m_bins)
            w1 = w1_circle(MeasureS1.from_density(occ), uniform)
            dn = path_uniform_dn_distance(path, spec.depth, spec.m_bins)
            return {"kappa": kappa, "replica": r,
                    "seed": replica_stream(spec.base_seed, c, r),
                    "w1_to_uniform": w1, "dn_to_uniform": dn}
        rows = _run_replicas(one, spec.replicas, spec.workers)
        records.extend(rows)
        m1, s1 = _mean_se([x["w1_to_uniform"] for x in rows])
        m2, s2 = _mean_se([x["dn_to_uniform"] for x in rows])
        per_kappa[str(kappa)] = {"w1_mean": m1, "w1_se": s1,
                                 "dn_mean": m2, "dn_se": s2}
    return ExperimentResult(spec=spec.to_json(),
                            summary={"per_kappa": per_kappa},
                            records=records, provenance=_provenance())


# ---------------------------------------------------------------------------
# chain-convergence experiment
# ---------------------------------------------------------------------------

def run_chain_convergence(spec: ExperimentSpec) -> ExperimentResult:
    """Caratheodory distance of sampled chains to the concentric-disk chain."""
    if spec.kind != "chain_convergence":
        raise ValueError(f"spec kind must be 'chain_convergence', got {spec.kind!r}")
    decay = SubordinationChain.decay_chain()
    records = []
    per_kappa = {}
    for c, kappa in enumerate(spec.kappas):
        def one(r, kappa=kappa, c=c):
            path = _sample(kappa, spec, c, r)
            chain = SubordinationChain(driving=dirac_path_measure(path))
            d = caratheodory_distance(chain, decay, r_compact=spec.r_compact,
                                      time_grid=spec.time_grid)
            return {"kappa": kappa, "replica": r,
                    "seed": replica_stream(spec.base_seed, c, r),
                    "caratheodory_distance": d}
        rows = _run_replicas(one, spec.replicas, spec.workers)
        records.extend(rows)
        m, s = _mean_se([x["caratheodory_distance"] for x in rows])
        per_kappa[str(kappa)] = {"distance_mean": m, "distance_se": s}
    return ExperimentResult(spec=spec.to_json(),
                            summary={"per_kappa": per_kappa},
                            records=records, provenance=_provenance())


# ---------------------------------------------------------------------------
# large-deviation slope experiment
# ---------------------------------------------------------------------------

def run_ldp_slope(
    spec: ExperimentSpec,
    target: MeasureS1,
    epsilon: float | None = None,
) -> ExperimentResult:
    """Hit fraction of an epsilon-ball around a target occupation shape.

    For each variance value, estimates p = P[W1(average occupation, target)
    < epsilon] and reports -(1/kappa) log p next to the Dirichlet rate of
    the target (an upper bound for the infimum over the ball).  Zero-hit
    configurations are censored and excluded from the slope fit.
    """
    if spec.kind != "ldp_slope":
        raise ValueError(f"spec kind must be 'ldp_slope', got {spec.kind!r}")
    eps = spec.epsilon if epsilon is None else epsilon
    if eps < 4 * np.pi / spec.m_bins:
        raise ValueError(
            f"epsilon={eps} is below the metric discretization floor "
            f"{4 * np.pi / spec.m_bins} at {spec.m_bins} bins")
    tgt = target.as_density(spec.m_bins)
    tgt = tgt / tgt.sum()
    rate = dirichlet_rate(target)
    records = []
    per_kappa = {}
    fit_x, fit_y = [], []
    for c, kappa in enumerate(spec.kappas):
        n = max(min_steps(kappa, 1.0),
                int(math.ceil(spec.steps_per_unit * max(kappa, 1.0))))
        dt = 1.0 / n
        sigma = math.sqrt(kappa * dt)
        hits = 0
        for r in range(spec.replicas):
            rng = path_rng(spec.base_seed, replica_stream(spec.base_seed, c, r))
            inc = rng.normal(0.0, sigma, size=n)
            ang = np.concatenate([[0.0], np.cumsum(inc[:-1])])
            idx = np.minimum((np.mod(ang, TWO_PI) / (TWO_PI / spec.m_bins))
                             .astype(np.intp), spec.m_bins - 1)
            occ = np.bincount(idx, minlength=spec.m_bins) * dt
            cum = np.cumsum(occ - tgt)
            d = (TWO_PI / spec.m_bins) * np.sum(np.abs(cum - np.median(cum)))
            hits += int(d < eps)
        p = hits / spec.replicas
        censored = hits == 0
        entry = {"kappa": kappa, "hits": hits, "replicas": spec.replicas,
                 "p": p, "censored": censored}
        if censored:
            entry["p_upper_bound"] = 1.0 / spec.replicas
        else:
            entry["neg_log_p_over_kappa"] = -math.log(p) / kappa
            fit_x.append(kappa)
            fit_y.append(-math.log(p))
        per_kappa[str(kappa)] = entry
        records.append({"kappa": kappa, "hits": hits,
                        "replicas": spec.replicas, "p": p,
                        "censored": int(censored)})
    summary = {"per_kappa": per_kappa, "epsilon": eps,
               "rate_of_target": rate.value_or_inf,
               "rate_caveat": "the infimum of the rate over the ball is "
                              "bounded above by the rate of the target"}
    if len(fit_x) >= 2:
        slope, intercept = np.polyfit(fit_x, fit_y, 1)
        summary["fit"] = {"slope": float(slope), "intercept": float(intercept),
                          "points": len(fit_x)}
    else:
        summary["fit"] = None
    return ExperimentResult(spec=spec.to_json(), summary=summary,
                            records=records, provenance=_provenance())


# ---------------------------------------------------------------------------
# fluctuation experiment
# ---------------------------------------------------------------------------

def fluctuation_covariance(d: np.ndarray | float) -> np.ndarray | float:
    """Limit covariance of the local-time fluctuation field at angular lag d.

    Closed form 1/3 - d/pi + d^2/(2 pi^2) on [0, 2 pi]; stationary
    (depends on the lag only) with variance 1/3 at every angle.
    """
    d = np.abs(np.asarray(d, dtype=float)) % TWO_PI
    return 1.0 / 3.0 - d / np.pi + d * d / (2 * np.pi ** 2)


def fluctuation_covariance_quadrature(theta: float, theta2: float,
                                      n_quad: int = 4096) -> float:
    """Independent oracle: covariance of the centered-bridge functional
    computed by numerical integration of the Brownian-bridge covariance."""
    c = lambda s, u: np.minimum(s, u) - s * u / TWO_PI
    tau = (np.arange(n_quad) + 0.5) * TWO_PI / n_quad
    w = TWO_PI / n_quad
    int_t = np.sum(c(theta, tau)) * w
    int_t2 = np.sum(c(theta2, tau)) * w
    int_tt = np.sum(c(tau[:, None], tau[None, :])) * w * w
    cov_y = (4 * c(theta, theta2) - (2 / np.pi) * (int_t + int_t2)
             + int_tt / np.pi ** 2)
    return float(cov_y / TWO_PI)


def simulate_bridge_functional(
    grid: np.ndarray, n_samples: int, seed: int, n_grid: int = 512
) -> np.ndarray:
    """Monte Carlo samples of the scaled centered-bridge field on ``grid``.

    Samples 2 b(theta) - (1/pi) integral b, scaled by (2 pi)^(-1/2), from
    discretized standard Brownian bridges on [0, 2 pi].
    """
    tau = np.linspace(0.0, TWO_PI, n_grid + 1)
    rng = path_rng(seed, stream=0x62726964)   # ascii 'brid'
    out = np.empty((n_samples, len(grid)))
    idx = np.searchsorted(tau, grid)
    done = 0
    while done < n_samples:
        b = min(4096, n_samples - done)
        inc = rng.normal(0.0, math.sqrt(TWO_PI / n_grid), size=(b, n_grid))
        w = np.concatenate([np.zeros((b, 1)), np.cumsum(inc, axis=1)], axis=1)
        bridge = w - np.outer(w[:, -1], tau / TWO_PI)
        integral = np.trapezoid(bridge, tau, axis=1)
        out[done:done + b] = (2 * bridge[:, idx]
                              - integral[:, None] / np.pi) / math.sqrt(TWO_PI)
        done += b
    return out


def validate_fluctuation_oracle(
    grid: np.ndarray, n_samples: int = 10 ** 6, seed: int = 0,
    rtol: float | None = None,
) -> dict:
    """Cross-check the closed-form limit covariance two independent ways.

    Compares it against numerical integration of the bridge covariance and
    against direct simulation of the bridge functional; raises if either
    disagrees beyond ``rtol`` relative to the variance scale.  The default
    tolerance is 0.5%, widened for small sample counts whose Monte Carlo
    noise exceeds that.
    """
    if rtol is None:
        rtol = max(0.005, 5.0 * math.sqrt(2.0 / n_samples))
    lags = np.abs(grid[:, None] - grid[None, :])
    analytic = fluctuation_covariance(lags)
    quad = np.array([[fluctuation_covariance_quadrature(a, b)
                      for b in grid] for a in grid])
    quad_err = float(np.max(np.abs(quad - analytic)) / VARIANCE_SCALE)
    sims = simulate_bridge_functional(grid, n_samples, seed)
    emp = np.cov(sims.T)
    sim_err = float(np.max(np.abs(emp - analytic)) / VARIANCE_SCALE)
    report = {"quadrature_rel_err": quad_err, "simulation_rel_err": sim_err,
              "n_samples": n_samples}
    if quad_err > rtol or sim_err > rtol:
        raise RuntimeError(f"fluctuation oracle cross-check failed: {report}")
    return report


def run_fluctuations(
    spec: ExperimentSpec,
    theta_grid: np.ndarray | None = None,
    m_bins: int = 64,
    oracle_samples: int = 10 ** 6,
) -> ExperimentResult:
    """Empirical covariance of the local-time fluctuation field.

    Uses variance-1 paths run to a long horizon; the field is
    sqrt(t) * (local time / t - 1/(2 pi)) evaluated on binned local time.
    The analytic limit covariance is cross-checked against the bridge
    simulation oracle before the main run.  Relative errors are reported
    against the variance scale 1/3 (the covariance has zeros, so pointwise
    relative error is not meaningful there).
    """
    if spec.kind != "fluctuations":
        raise ValueError(f"spec kind must be 'fluctuations', got {spec.kind!r}")
    centers = (np.arange(m_bins) + 0.5) * TWO_PI / m_bins
    if theta_grid is None:
        sel = np.arange(0, m_bins, max(1, m_bins // spec.theta_points))
    else:
        sel = np.array([int(np.argmin(np.abs(centers - g))) for g in theta_grid])
    grid = centers[sel]
    oracle = validate_fluctuation_oracle(grid, n_samples=oracle_samples,
                                         seed=spec.base_seed)

    t = spec.t_final
    n = int(math.ceil(spec.steps_per_unit * t))
    dt = t / n
    w = TWO_PI / m_bins
    fields = np.empty((spec.replicas, m_bins))
    for r in range(spec.replicas):
        rng = path_rng(spec.base_seed, replica_stream(spec.base_seed, 0, r))
        inc = rng.normal(0.0, math.sqrt(dt), size=n)
        ang = np.concatenate([[0.0], np.cumsum(inc[:-1])])
        idx = np.minimum((np.mod(ang, TWO_PI) / w).astype(np.intp), m_bins - 1)
        occ = np.bincount(idx, minlength=m_bins) * dt
        fields[r] = math.sqrt(t) * ((occ / w) / t - 1.0 / TWO_PI)

    emp = np.cov(fields[:, sel].T)
    lags = np.abs(grid[:, None] - grid[None, :])
    analytic = fluctuation_covariance(lags)
    err = np.abs(emp - analytic) / VARIANCE_SCALE
    records = [{"replica": r, "seed": replica_stream(spec.base_seed, 0, r),
                **{f"x_{i}": float(fields[r, s]) for i, s in enumerate(sel)}}
               for r in range(spec.replicas)]
    summary = {
        "theta_grid": grid.tolist(),
        "empirical_covariance": emp.tolist(),
        "analytic_covariance": analytic.tolist(),
        "max_rel_covariance_error": float(err.max()),
        "variance_scale": VARIANCE_SCALE,
        "oracle_check": oracle,
        "t_final": t, "n_steps": n, "m_bins": m_bins,
    }
    return ExperimentResult(spec=spec.to_json(), summary=summary,
                            records=records, provenance=_provenance())


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def persist(result: ExperimentResult, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.json`` (summary + provenance) and ``<path>.csv``
    (per-replica records).  Returns the two paths written."""
    base = Path(path)
    json_path = base.with_suffix(".json")
    csv_path = base.with_suffix(".csv")
    try:
        base.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(json.dumps(result.to_json(), indent=2,
                                        sort_keys=True) + "\n")
        buf = io.StringIO()
        if result.records:
            fields_ = list(result.records[0].keys())
            writer = csv.DictWriter(buf, fieldnames=fields_)
            writer.writeheader()
            for rec in result.records:
                writer.writerow({k: repr(v) if isinstance(v, float) else v
                                 for k, v in rec.items()})
        csv_path.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"failed to persist experiment result at {base}: {exc}") from exc
    return json_path, csv_path


def load(path: str | Path) -> ExperimentResult:
    base = Path(path)
    obj = json.loads(base.with_suffix(".json").read_text())
    if obj.get("schema") != RESULT_SCHEMA:
        raise ValueError(f"unsupported result schema {obj.get('schema')!r}")
    records = []
    csv_path = base.with_suffix(".csv")
    if csv_path.exists() and csv_path.stat().st_size:
        with csv_path.open() as fh:
            for row in csv.DictReader(fh):
                records.append({k: _parse_cell(v) for k, v in row.items()})
    return ExperimentResult(spec=obj["spec"], summary=obj["summary"],
                            records=records, provenance=obj["provenance"])


def _parse_cell(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text
