"""Measures on the circle, time-indexed driving measures, and the dyadic
time-averaging lattice.

A driving measure assigns one probability measure on S^1 to each instant of
[0,1]; here it is represented either by equal-width time slabs (each slab
holding one circle measure) or backed directly by a sampled circle path
(conceptually a Dirac mass at the current position).  Level-n projections
average the driving measure over dyadic time windows; embedding a level-n
tuple back produces the piecewise-constant-in-time driving measure.

Weak convergence of circle measures is metrized by the exact circular
1-Wasserstein distance on a common bin grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .paths import CirclePath, TWO_PI, windowed_occupation

SCHEMA_VERSION = 1
DEFAULT_ATOM_BINS = 4096    # grid used when an atomic measure must be binned
DEFAULT_PATH_BINS = 256     # grid for projections of path-backed driving
MAX_LEVEL = 12

MASS_RTOL = 1e-12


@dataclass(frozen=True)
class MeasureS1:
    """A finite measure on the circle: weighted atoms or a binned density.

    ``density`` holds bin *masses* on equal-width cells covering [0, 2*pi);
    ``atoms`` holds (angle, weight) pairs with angles in [0, 2*pi).
    Exactly one representation is present.
    """

    atoms: tuple[tuple[float, float], ...] | None
    density: np.ndarray | None
    total: float

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_atoms(pairs: Sequence[tuple[float, float]]) -> "MeasureS1":
        norm = tuple((float(a) % TWO_PI, float(w)) for a, w in pairs)
        if any(w <= 0 for _, w in norm):
            raise ValueError("atom weights must be positive")
        total = sum(w for _, w in norm)
        return MeasureS1(atoms=norm, density=None, total=total)

    @staticmethod
    def from_density(bins: np.ndarray) -> "MeasureS1":
        bins = np.asarray(bins, dtype=float)
        if bins.ndim != 1 or len(bins) < 1:
            raise ValueError("density must be a 1-d array of bin masses")
        if np.any(bins < 0):
            raise ValueError("density bins must be nonnegative")
        return MeasureS1(atoms=None, density=bins, total=float(bins.sum()))

    @staticmethod
    def dirac(angle: float) -> "MeasureS1":
        return MeasureS1.from_atoms([(angle, 1.0)])

    @staticmethod
    def uniform(m_bins: int = DEFAULT_ATOM_BINS) -> "MeasureS1":
        return MeasureS1.from_density(np.full(m_bins, 1.0 / m_bins))

    @staticmethod
    def cosine(a: float, m_bins: int = 1024) -> "MeasureS1":
        """Probability density proportional to 1 + a*cos(theta), |a| < 1."""
        if not -1 < a < 1:
            raise ValueError(f"cosine amplitude must satisfy |a| < 1, got {a}")
        theta = bin_centers(m_bins)
        bins = (1.0 + a * np.cos(theta))
        return MeasureS1.from_density(bins / bins.sum())

    # -- queries -------------------------------------------------------

    @property
    def is_probability(self) -> bool:
        return abs(self.total - 1.0) <= MASS_RTOL

    @property
    def m(self) -> int | None:
        return None if self.density is None else len(self.density)

    def as_density(self, m_bins: int) -> np.ndarray:
        """Bin masses on ``m_bins`` equal cells, conserving mass exactly.

        Rebinning a density splits mass proportionally to cell overlap
        (piecewise-constant density assumption); atoms land in the cell
        containing their angle.
        """
        if self.atoms is not None:
            bins = np.zeros(m_bins)
            for angle, w in self.atoms:
                idx = min(int(angle / (TWO_PI / m_bins)), m_bins - 1)
                bins[idx] += w
            return bins
        src = self.density
        m0 = len(src)
        if m0 == m_bins:
            return src.copy()
        # cumulative-mass interpolation: exact proportional-overlap rebin
        src_edges = np.linspace(0.0, TWO_PI, m0 + 1)
        cum = np.concatenate([[0.0], np.cumsum(src)])
        tgt_edges = np.linspace(0.0, TWO_PI, m_bins + 1)
        return np.diff(np.interp(tgt_edges, src_edges, cum))

    # -- arithmetic ----------------------------------------------------

    @staticmethod
    def mixture(parts: Sequence["MeasureS1"], weights: Sequence[float]) -> "MeasureS1":
        """Weighted mixture; keeps atoms atomic and densities binned."""
        parts = list(parts)
        weights = [float(w) for w in weights]
        if len(parts) == 1 and abs(weights[0] - 1.0) < 1e-15:
            return parts[0]
        if all(p.atoms is not None for p in parts):
            pairs: list[tuple[float, float]] = []
            for p, w in zip(parts, weights):
                pairs.extend((a, wt * w) for a, wt in p.atoms)
            return MeasureS1.from_atoms(pairs)
        grids = [p.m for p in parts if p.m is not None]
        m = max(grids) if grids else DEFAULT_ATOM_BINS
        bins = np.zeros(m)
        for p, w in zip(parts, weights):
            bins += w * p.as_density(m)
        return MeasureS1.from_density(bins)

    def rotated(self, alpha: float) -> "MeasureS1":
        if self.atoms is not None:
            return MeasureS1.from_atoms([(a + alpha, w) for a, w in self.atoms])
        m = len(self.density)
        shift = alpha / (TWO_PI / m)
        if abs(shift - round(shift)) > 1e-9:
            raise ValueError("density rotation must be grid-aligned")
        return MeasureS1.from_density(np.roll(self.density, int(round(shift))))

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        out: dict = {"schema": SCHEMA_VERSION, "kind": "measure_s1",
                     "total": self.total}
        if self.atoms is not None:
            out["atoms"] = [[a, w] for a, w in self.atoms]
        else:
            out["density"] = self.density.tolist()
        return out

    @staticmethod
    def from_json(obj: dict) -> "MeasureS1":
        _check_schema(obj, "measure_s1")
        if "atoms" in obj:
            return MeasureS1.from_atoms([(a, w) for a, w in obj["atoms"]])
        return MeasureS1.from_density(np.array(obj["density"]))


def bin_centers(m_bins: int) -> np.ndarray:
    return (np.arange(m_bins) + 0.5) * TWO_PI / m_bins


def _check_schema(obj: dict, kind: str) -> None:
    if obj.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {obj.get('schema')!r}")
    if obj.get("kind") != kind:
        raise ValueError(f"expected kind {kind!r}, got {obj.get('kind')!r}")


# ---------------------------------------------------------------------------
# circular Wasserstein-1 distance
# ---------------------------------------------------------------------------

def w1_circle(mu: MeasureS1, nu: MeasureS1, m_bins: int | None = None) -> float:
    """Exact 1-Wasserstein distance (arc-length ground metric) on a common grid.

    Both measures are rendered on the finest of their native grids (atoms
    binned to the default grid); the optimal circular transport cost is the
    L1 distance of the cumulative mass difference to its median, the exact
    minimizer over rotations of the transport plan.
    """
    for x in (mu, nu):
        if not x.is_probability:
            raise ValueError("w1_circle requires probability measures")
    if m_bins is None:
        grids = [x.m for x in (mu, nu) if x.m is not None]
        m_bins = max(grids) if grids else DEFAULT_ATOM_BINS
    p = mu.as_density(m_bins)
    q = nu.as_density(m_bins)
    cum = np.cumsum(p - q)
    return float((TWO_PI / m_bins) * np.sum(np.abs(cum - np.median(cum))))


# ---------------------------------------------------------------------------
# driving measures and the dyadic lattice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DrivingMeasure:
    """A time-indexed family of circle probability measures over [0,1].

    Slab-backed: ``slabs`` holds one probability measure per equal time
    interval.  Path-backed: ``path`` holds a sampled circle trajectory and
    the instantaneous measure is the Dirac mass at the current position.
    The marginal on any slab-aligned time interval I has mass |I|.
    """

    slabs: tuple[MeasureS1, ...] | None = None
    path: CirclePath | None = None

    def __post_init__(self):
        if (self.slabs is None) == (self.path is None):
            raise ValueError("exactly one of slabs/path must be given")
        if self.slabs is not None:
            object.__setattr__(self, "slabs", tuple(self.slabs))
            for s in self.slabs:
                if not s.is_probability:
                    raise ValueError("every slab measure must be a probability measure")
        if self.path is not None and self.path.t_max < 1.0:
            raise ValueError("path-backed driving must cover [0, 1]")

    @property
    def n_slabs(self) -> int | None:
        return None if self.slabs is None else len(self.slabs)

    def slab_at(self, t: float) -> MeasureS1:
        idx = min(int(t * self.n_slabs), self.n_slabs - 1)
        return self.slabs[idx]

    def to_json(self) -> dict:
        if self.slabs is None:
            raise ValueError("only slab-backed driving measures serialize to JSON")
        return {"schema": SCHEMA_VERSION, "kind": "driving_measure",
                "slabs": [s.to_json() for s in self.slabs]}

    @staticmethod
    def from_json(obj: dict) -> "DrivingMeasure":
        _check_schema(obj, "driving_measure")
        return DrivingMeasure(
            slabs=tuple(MeasureS1.from_json(s) for s in obj["slabs"]),
            path=None)


@dataclass(frozen=True)
class LevelTuple:
    """2^n circle probability measures indexed by dyadic time windows."""

    n: int
    entries: tuple[MeasureS1, ...]

    def __post_init__(self):
        if len(self.entries) != 2 ** self.n:
            raise ValueError(f"level {self.n} tuple needs {2**self.n} entries")
        for e in self.entries:
            if not e.is_probability:
                raise ValueError("every tuple entry must be a probability measure")

    def to_json(self) -> dict:
        return {"schema": SCHEMA_VERSION, "kind": "level_tuple", "n": self.n,
                "entries": [e.to_json() for e in self.entries]}

    @staticmethod
    def from_json(obj: dict) -> "LevelTuple":
        _check_schema(obj, "level_tuple")
        return LevelTuple(n=obj["n"], entries=tuple(
            MeasureS1.from_json(e) for e in obj["entries"]))


def uniform_driving(m_bins: int = DEFAULT_ATOM_BINS, n_slabs: int = 1) -> DrivingMeasure:
    return DrivingMeasure(slabs=(MeasureS1.uniform(m_bins),) * n_slabs, path=None)


def dirac_path_measure(path: CirclePath) -> DrivingMeasure:
    """Driving measure that is a Dirac mass at the path position at each time."""
    return DrivingMeasure(slabs=None, path=path)


def project_Pn(
    rho: DrivingMeasure,
    n: int,
    m_bins: int = DEFAULT_PATH_BINS,
    refine: bool = True,
) -> LevelTuple:
    """Average the driving measure over each dyadic window [i/2^n, (i+1)/2^n].

    For slab-backed measures the entry is the overlap-weighted mixture of
    the slab measures, scaled by 2^n.  For path-backed measures it is the
    normalized occupation measure of the path over the window on ``m_bins``
    cells.  With ``refine=False``, slab layouts whose boundaries do not nest
    with the dyadic windows are rejected.
    """
    if not 0 <= n <= MAX_LEVEL:
        raise ValueError(f"level must be in [0, {MAX_LEVEL}], got {n}")
    size = 2 ** n
    if rho.path is not None:
        entries = []
        for i in range(size):
            t0, t1 = i / size, (i + 1) / size
            bins = windowed_occupation(rho.path, t0, t1, m_bins)
            entries.append(MeasureS1.from_density(bins * size))
        return LevelTuple(n=n, entries=tuple(entries))

    k = rho.n_slabs
    if not refine and (size % k != 0 and k % size != 0):
        raise ValueError(
            f"slab count {k} does not nest with 2^{n} dyadic windows; "
            "pass refine=True to average across slab boundaries")
    entries = []
    for i in range(size):
        t0, t1 = i / size, (i + 1) / size
        parts, weights = [], []
        for j in range(k):
            s0, s1 = j / k, (j + 1) / k
            overlap = min(t1, s1) - max(t0, s0)
            if overlap > 1e-15:
                parts.append(rho.slabs[j])
                weights.append(overlap * size)
        entries.append(MeasureS1.mixture(parts, weights))
    return LevelTuple(n=n, entries=tuple(entries))


def embed_Fn(tup: LevelTuple) -> DrivingMeasure:
    """Piecewise-constant driving measure whose slab i is tuple entry i."""
    return DrivingMeasure(slabs=tup.entries, path=None)


def coarsen(tup: LevelTuple) -> LevelTuple:
    """One lattice step down: average adjacent pairs of entries."""
    if tup.n < 1:
        raise ValueError("cannot coarsen a level-0 tuple")
    entries = tuple(
        MeasureS1.mixture([tup.entries[2 * i], tup.entries[2 * i + 1]], [0.5, 0.5])
        for i in range(2 ** (tup.n - 1)))
    return LevelTuple(n=tup.n - 1, entries=entries)


def dn_distance(
    rho: DrivingMeasure,
    sigma: DrivingMeasure,
    depth: int,
    m_bins: int = DEFAULT_PATH_BINS,
) -> float:
    """Projective-lattice distance: sum over levels n <= depth of
    2^-n times the worst W1 distance between the level-n projections.

    Zero iff all projections up to ``depth`` agree; any summable level
    weighting metrizes the projective-limit topology, this one keeps the
    levels comparable.
    """
    if not 0 <= depth <= MAX_LEVEL:
        raise ValueError(f"depth must be in [0, {MAX_LEVEL}], got {depth}")
    total = 0.0
    for n in range(depth + 1):
        pa = project_Pn(rho, n, m_bins=m_bins)
        pb = project_Pn(sigma, n, m_bins=m_bins)
        worst = max(w1_circle(a, b) for a, b in zip(pa.entries, pb.entries))
        total += 2.0 ** (-n) * worst
    return total


def dumps(obj) -> str:
    """JSON text for any serializable value (17-digit float round trip)."""
    return json.dumps(obj.to_json() if hasattr(obj, "to_json") else obj)
