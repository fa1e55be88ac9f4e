"""Command-line front end.

Subcommands::

    simulate    sample a circular Brownian path; write path + occupation CSV
    chain       classify a polar grid by survival under a driving measure
    rate        Dirichlet and variational rate of a circle measure
    project     dyadic projection / embedding round-trip diagnostics
    lln         occupation-to-uniform distance experiment
    chain-conv  chain distance to the concentric-disk chain experiment
    ldp         rare-event slope experiment
    fluct       local-time fluctuation covariance experiment
    selftest    fast invariant suite; exits 0 on a healthy build

Driving measures and circle measures are given in a small spec language:
``uniform``, ``dirac:<angle>``, ``cosine:<a>``, ``slabs:[<spec>;<spec>;...]``
and (driving only) ``bm:<kappa>``.  Flags can be preloaded from a TOML file
with ``--config``; the default output directory comes from the
``LOEWNERLAB_OUT`` environment variable.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:        # Python < 3.11
    import tomli as tomllib

from .measures import (
    DrivingMeasure, MeasureS1, coarsen, dirac_path_measure, dn_distance,
    embed_Fn, project_Pn, uniform_driving, w1_circle, MAX_LEVEL, TWO_PI,
)
from .paths import min_steps, occupation_measure, sample_circle_bm
from .loewner import SubordinationChain, chain_maps, hull_grid
from .rate import MAX_DEGREE, dirichlet_rate, energy, variational_rate
from . import experiments as ex


class CliError(ValueError):
    """Validation failure with an actionable message."""


def parse_measure(spec: str) -> MeasureS1:
    if spec == "uniform":
        return MeasureS1.uniform()
    if spec.startswith("dirac:"):
        return MeasureS1.dirac(float(spec[6:]))
    if spec.startswith("cosine:"):
        a = float(spec[7:])
        if not -1.0 <= a <= 1.0:
            raise CliError(f"cosine amplitude must be in [-1, 1], got {a}")
        return MeasureS1.cosine(a)
    raise CliError(
        f"unknown measure spec {spec!r}; expected uniform, dirac:<angle> "
        "or cosine:<a>")


def parse_driving(spec: str, t_max: float = 1.0, seed: int = 0) -> DrivingMeasure:
    if spec == "uniform":
        return uniform_driving()
    if spec.startswith("bm:"):
        kappa = float(spec[3:])
        n = min_steps(kappa, t_max)
        return dirac_path_measure(
            sample_circle_bm(kappa, n, t_max=t_max, seed=seed))
    if spec.startswith("slabs:[") and spec.endswith("]"):
        parts = [p for p in spec[7:-1].split(";") if p]
        if not parts:
            raise CliError("slabs:[...] needs at least one measure spec")
        return DrivingMeasure(slabs=[parse_measure(p) for p in parts])
    # a bare measure spec means constant-in-time driving by that measure
    return DrivingMeasure(slabs=[parse_measure(spec)])


def _out_dir(args) -> Path:
    d = Path(args.out if args.out is not None
             else os.environ.get("LOEWNERLAB_OUT", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _print_written(*paths) -> None:
    for p in paths:
        print(f"wrote {p}")


def _kappas(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise CliError(f"--kappas must be comma-separated numbers: {exc}")
    if not vals or any(v <= 0 for v in vals):
        raise CliError("--kappas needs at least one positive value")
    return vals


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    floor = min_steps(args.kappa, args.t)
    n = args.steps if args.steps is not None else floor
    if n < floor:
        raise CliError(
            f"--steps {n} too coarse for kappa={args.kappa}, t={args.t}; "
            f"need at least {floor} (64 * kappa * t)")
    path = sample_circle_bm(args.kappa, n, t_max=args.t, seed=args.seed)
    occ = occupation_measure(path, args.t, args.bins)
    out = _out_dir(args)
    path_csv = out / "path.csv"
    with path_csv.open("w") as fh:
        fh.write("t,angle\n")
        for t, a in zip(path.times, path.angles):
            fh.write(f"{float(t)!r},{float(a)!r}\n")
    occ_csv = out / "occupation.csv"
    with occ_csv.open("w") as fh:
        fh.write("bin_center,mass\n")
        for c, m in zip((np.arange(args.bins) + 0.5) * TWO_PI / args.bins,
                        occ.bins):
            fh.write(f"{float(c)!r},{float(m)!r}\n")
    _print_written(path_csv, occ_csv)
    return 0


def cmd_chain(args) -> int:
    driving = parse_driving(args.driving, t_max=args.t, seed=args.seed)
    grid = hull_grid(driving, args.t, n_radii=args.probe,
                     n_angles=2 * args.probe)
    out = _out_dir(args)
    hull_csv = out / "hull.csv"
    hull_csv.write_text(grid.to_csv())
    print(f"swallowed {len(grid.swallowed)} of {len(grid.points)} probes "
          f"({grid.n_undetermined} undetermined) at t={args.t}")
    _print_written(hull_csv)
    return 0


def cmd_rate(args) -> int:
    if args.degree > MAX_DEGREE:
        raise CliError(f"--degree {args.degree} exceeds the cap {MAX_DEGREE}")
    if args.driving is not None:
        rho = parse_driving(args.driving, seed=args.seed)
        print(json.dumps({"energy": energy(rho).to_json()}, indent=2))
        return 0
    mu = parse_measure(args.measure)
    report = {"dirichlet": dirichlet_rate(mu).to_json(),
              "variational": variational_rate(mu, degree=args.degree).to_json()}
    print(json.dumps(report, indent=2))
    return 0


def cmd_project(args) -> int:
    if not 0 <= args.level <= MAX_LEVEL:
        raise CliError(f"--level must be in [0, {MAX_LEVEL}], got {args.level}")
    rho = parse_driving(args.driving, seed=args.seed)
    tup = project_Pn(rho, args.level, m_bins=args.bins)
    embedded = embed_Fn(tup)
    again = project_Pn(embedded, args.level, m_bins=args.bins)
    round_trip = max(
        w1_circle(a, b) for a, b in zip(tup.entries, again.entries))
    diag = {"level": args.level, "entries": len(tup.entries),
            "round_trip_max_w1": round_trip}
    if args.level >= 1:
        down = project_Pn(rho, args.level - 1, m_bins=args.bins)
        via = coarsen(tup)
        diag["coherence_max_w1"] = max(
            w1_circle(a, b) for a, b in zip(down.entries, via.entries))
    print(json.dumps(diag, indent=2))
    return 0


def _experiment_spec(args, kind: str) -> ex.ExperimentSpec:
    return ex.ExperimentSpec(
        kind=kind, kappas=_kappas(args.kappas) if hasattr(args, "kappas") else [],
        replicas=args.replicas, base_seed=args.seed, m_bins=args.bins,
        depth=getattr(args, "depth", 6), epsilon=getattr(args, "epsilon", 0.08),
        t_final=getattr(args, "t_final", 200.0),
        workers=args.workers)


def cmd_lln(args) -> int:
    result = ex.run_lln(_experiment_spec(args, "lln"))
    _print_written(*ex.persist(result, _out_dir(args) / "lln"))
    return 0


def cmd_chain_conv(args) -> int:
    result = ex.run_chain_convergence(_experiment_spec(args, "chain_convergence"))
    _print_written(*ex.persist(result, _out_dir(args) / "chain_conv"))
    return 0


def cmd_ldp(args) -> int:
    spec = _experiment_spec(args, "ldp_slope")
    if spec.epsilon < 4 * math.pi / spec.m_bins:
        raise CliError(
            f"--epsilon {spec.epsilon} is below the discretization floor "
            f"{4 * math.pi / spec.m_bins:.4g} at {spec.m_bins} bins")
    target = parse_measure(args.target)
    result = ex.run_ldp_slope(spec, target)
    _print_written(*ex.persist(result, _out_dir(args) / "ldp"))
    return 0


def cmd_fluct(args) -> int:
    result = ex.run_fluctuations(_experiment_spec(args, "fluctuations"),
                                 oracle_samples=args.oracle_samples)
    _print_written(*ex.persist(result, _out_dir(args) / "fluct"))
    return 0


def cmd_selftest(args) -> int:
    checks: list[tuple[str, bool, str]] = []

    f = chain_maps(uniform_driving(), [0.3 + 0.2j], [0.5, 1.0])
    err = max(abs(f[i][0] - math.exp(-t) * (0.3 + 0.2j))
              for i, t in enumerate([0.5, 1.0]))
    checks.append(("uniform driving is exact radial decay",
                   err < 1e-7, f"max error {err:.2e}"))

    r0 = dirichlet_rate(MeasureS1.uniform())
    checks.append(("rate of uniform is zero",
                   not r0.infinite and abs(r0.value) < 1e-12,
                   f"value {r0.value_or_inf:.2e}"))

    mu = MeasureS1.cosine(0.4)
    nu = mu.rotated(TWO_PI * 100 / 1024)
    sym = abs(w1_circle(mu, nu) - w1_circle(nu, mu))
    checks.append(("transport distance is symmetric",
                   w1_circle(mu, mu) == 0.0 and sym < 1e-15,
                   f"self-distance {w1_circle(mu, mu)}, asymmetry {sym:.1e}"))

    rho = DrivingMeasure(slabs=[MeasureS1.cosine(0.3), MeasureS1.cosine(-0.5)])
    p1, p2 = project_Pn(rho, 1), project_Pn(rho, 2)
    coh = max(w1_circle(a, b)
              for a, b in zip(p1.entries, coarsen(p2).entries))
    checks.append(("dyadic projections cohere", coh == 0.0, f"gap {coh:.1e}"))

    a = sample_circle_bm(4.0, 256, seed=11)
    b = sample_circle_bm(4.0, 256, seed=11)
    checks.append(("sampling is deterministic in the seed",
                   bool(np.array_equal(a.angles, b.angles)), ""))

    ok = True
    for name, passed, note in checks:
        print(f"[{'ok' if passed else 'FAIL'}] {name}" + (f" ({note})" if note else ""))
        ok &= passed
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base RNG seed")
    common.add_argument("--out", default=None,
                        help="output directory (default: $LOEWNERLAB_OUT or .)")
    common.add_argument("--workers", type=int, default=1,
                        help="worker count for experiment replicas")
    common.add_argument("--config", default=None,
                        help="TOML file supplying defaults for any flag")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="loewnerlab", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common],
                       help="sample a circular Brownian path")
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=None,
                   help="time steps (default and floor: ceil(64*kappa*t))")
    s.add_argument("--bins", type=int, default=256)
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("chain", parents=[common],
                       help="hull classification for a driving measure")
    s.add_argument("--driving", required=True)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--probe", type=int, default=24,
                   help="radial probe count (angular count is twice this)")
    s.set_defaults(fn=cmd_chain)

    s = sub.add_parser("rate", parents=[common],
                       help="rate functionals of a measure or driving spec")
    s.add_argument("--measure", default=None)
    s.add_argument("--driving", default=None,
                   help="report the chain energy of a driving spec instead")
    s.add_argument("--degree", type=int, default=16)
    s.set_defaults(fn=cmd_rate)

    s = sub.add_parser("project", parents=[common],
                       help="projection / embedding round-trip diagnostics")
    s.add_argument("--driving", required=True)
    s.add_argument("--level", type=int, default=3)
    s.add_argument("--bins", type=int, default=256)
    s.set_defaults(fn=cmd_project)

    s = sub.add_parser("lln", parents=[common],
                       help="occupation-to-uniform distance experiment")
    s.add_argument("--kappas", default="10,100,1000")
    s.add_argument("--replicas", type=int, default=100)
    s.add_argument("--bins", type=int, default=256)
    s.add_argument("--depth", type=int, default=6)
    s.set_defaults(fn=cmd_lln)

    s = sub.add_parser("chain-conv", parents=[common],
                       help="chain distance to the concentric-disk chain")
    s.add_argument("--kappas", default="16,64,256,1024")
    s.add_argument("--replicas", type=int, default=30)
    s.add_argument("--bins", type=int, default=256)
    s.set_defaults(fn=cmd_chain_conv)

    s = sub.add_parser("ldp", parents=[common],
                       help="rare-event slope experiment")
    s.add_argument("--kappas", default="4,8,16,32")
    s.add_argument("--replicas", type=int, default=100000)
    s.add_argument("--bins", type=int, default=256)
    s.add_argument("--epsilon", type=float, default=0.08)
    s.add_argument("--target", default="cosine:0.5")
    s.set_defaults(fn=cmd_ldp)

    s = sub.add_parser("fluct", parents=[common],
                       help="local-time fluctuation covariance experiment")
    s.add_argument("--replicas", type=int, default=10000)
    s.add_argument("--bins", type=int, default=64)
    s.add_argument("--t-final", dest="t_final", type=float, default=200.0)
    s.add_argument("--oracle-samples", type=int, default=10 ** 6)
    s.set_defaults(fn=cmd_fluct)

    s = sub.add_parser("selftest", parents=[common],
                       help="run the fast invariant suite")
    s.set_defaults(fn=cmd_selftest)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load --config TOML (if present) and fold it in as parser defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise CliError("--config needs a file path")
    cfg_path = Path(argv[idx + 1])
    try:
        cfg = tomllib.loads(cfg_path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise CliError(f"cannot read config {cfg_path}: {exc}")
    for action in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest for a in action._actions}
        action.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()
                               if k.replace("-", "_") in known})
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.command == "rate" and args.measure is None and args.driving is None:
            raise CliError("rate needs --measure or --driving")
        return args.fn(args)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:      # argparse errors
        return 1 if exc.code not in (0, None) else 0
    except Exception as exc:       # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
