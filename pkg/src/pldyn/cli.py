"""Command-line interface.

Subcommands operate on a model JSON file and write deterministic artifacts
(JSON or CSV). Exit codes: 0 success, 1 usage error, 2 unreadable or invalid
input data, 3 numerical failure inside the analysis.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .cycles import find_cycles
from .errors import PldynError
from .fileio import (
    PACKAGE_VERSION,
    atomic_write,
    dumps_json17,
    load_model,
    model_sha256,
    provenance_footer,
    write_csv,
)
from .manifold import build_manifold, build_manifold_fallback
from .metrics import (
    AttractorRef,
    basin_grid,
    bifurcation_sweep,
    lyapunov_exponents,
    prediction_error_curve,
    simulate,
    state_space_divergence,
)
from .planar import Map2D, detect_homoclinic

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse hook; route to exit code 1
        raise _UsageError(message)


def _complex_pairs(values) -> list[list[float]]:
    return [[float(np.real(v)), float(np.imag(v))] for v in np.asarray(values)]


def _parse_sweep_spec(spec: str):
    parts = spec.split(":")
    if len(parts) != 4:
        raise _UsageError(
            f"--sweep expects 'param:lo:hi:count', got {spec!r}"
        )
    name = parts[0]
    try:
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise _UsageError(f"--sweep expects numeric lo:hi:count in {spec!r}")
    if count < 1:
        raise _UsageError("--sweep count must be >= 1")
    return name, np.linspace(lo, hi, count)


def _parse_grid_spec(spec: str):
    parts = spec.split(":")
    if len(parts) != 5:
        raise _UsageError(
            f"--grid expects 'x0:x1:y0:y1:res', got {spec!r}"
        )
    try:
        x0, x1, y0, y1 = (float(p) for p in parts[:4])
        res = int(parts[4])
    except ValueError:
        raise _UsageError(f"--grid expects numeric fields in {spec!r}")
    if res < 2:
        raise _UsageError("--grid res must be >= 2")
    return (x0, x1, y0, y1), res


def _parse_point(spec: str, dim: int) -> np.ndarray:
    try:
        vals = [float(p) for p in spec.split(",")]
    except ValueError:
        raise _UsageError(f"--z0 expects comma-separated floats, got {spec!r}")
    if len(vals) != dim:
        raise _UsageError(f"--z0 needs {dim} components, got {len(vals)}")
    return np.asarray(vals)


def _load_traj_csv(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read trajectory file {path}: {exc}") from exc
    rows: list[list[float]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(p) for p in line.split(",")])
        except ValueError:
            if rows:
                raise ValueError(f"non-numeric row in trajectory file {path}")
            continue  # header row
    if not rows:
        raise ValueError(f"trajectory file {path} contains no numeric rows")
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"trajectory file {path} is not rectangular")
    return arr


def build_parser() -> _Parser:
    parser = _Parser(prog="pldyn", description=__doc__)
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {PACKAGE_VERSION}"
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p: _Parser) -> None:
        p.add_argument("--model", required=True, help="model JSON file")
        p.add_argument("--out", required=True, help="output artifact path")
        p.add_argument("--seed", type=int, default=0, help="random seed")

    p_fp = sub.add_parser("fixed-points", help="fixed points and short cycles")
    common(p_fp)
    p_fp.add_argument("--max-period", type=int, default=1)
    p_fp.add_argument("--budget", type=int, default=20000,
                      help="cap on candidate linear solves")
    p_fp.add_argument("--include-virtual", action="store_true",
                      help="also report cycles that leave their regions")
    p_fp.add_argument("--tol-dedup", type=float, default=1e-6)

    p_man = sub.add_parser("manifold", help="stable/unstable manifold of a saddle")
    common(p_man)
    p_man.add_argument("--side", choices=["stable", "unstable"], required=True)
    p_man.add_argument("--max-period", type=int, default=1,
                       help="search period for the saddle cycle")
    p_man.add_argument("--cycle-index", type=int, default=0,
                       help="index among found saddles")
    p_man.add_argument("--max-iters", type=int, default=6)
    p_man.add_argument("--max-segments", type=int, default=600)
    p_man.add_argument("--fallback", action="store_true",
                       help="use the seed-cloud construction")
    p_man.add_argument("--tol-backtrack", type=float, default=1e-9)

    p_hom = sub.add_parser("homoclinic", help="three-stage planar chaos certificate")
    common(p_hom)
    p_hom.add_argument("--side", choices=["left", "right", "auto"], default="auto")
    p_hom.add_argument("--max-returns", type=int, default=50)

    p_sw = sub.add_parser("sweep", help="bifurcation sweep over one parameter")
    common(p_sw)
    p_sw.add_argument("--sweep", required=True, metavar="param:lo:hi:count")
    p_sw.add_argument("--steps", type=int, default=1000)
    p_sw.add_argument("--transient", type=int, default=500)
    p_sw.add_argument("--keep", type=int, default=100)
    p_sw.add_argument("--ic-policy", choices=["fixed", "follow", "random"],
                      default="follow")
    p_sw.add_argument("--threads", type=int, default=1)
    p_sw.add_argument("--z0", default=None, help="comma-separated start state")

    p_bas = sub.add_parser("basin", help="basins of attraction on a grid")
    common(p_bas)
    p_bas.add_argument("--grid", required=True, metavar="x0:x1:y0:y1:res")
    p_bas.add_argument("--max-period", type=int, default=6,
                       help="cycle search period for attractor references")
    p_bas.add_argument("--max-steps", type=int, default=2000)
    p_bas.add_argument("--check-every", type=int, default=10)
    p_bas.add_argument("--tol-attractor", type=float, default=1e-4)
    p_bas.add_argument("--probes", type=int, default=16,
                       help="random probe orbits used to find non-cycle attractors")

    p_met = sub.add_parser("metrics", help="Lyapunov spectrum and fit measures")
    common(p_met)
    p_met.add_argument("--steps", type=int, default=10000)
    p_met.add_argument("--transient", type=int, default=500)
    p_met.add_argument("--z0", default=None, help="comma-separated start state")
    p_met.add_argument("--traj", default=None,
                       help="reference trajectory CSV for comparison measures")
    p_met.add_argument("--pe-horizon", type=int, default=20)
    p_met.add_argument("--bins", type=int, default=30)

    return parser


# -- command handlers -------------------------------------------------------

def _cmd_fixed_points(args, model) -> int:
    rng = np.random.default_rng(args.seed)
    cycles = find_cycles(
        model,
        args.max_period,
        budget=args.budget,
        rng=rng,
        include_virtual=args.include_virtual,
        dedup_tol=args.tol_dedup,
    )
    doc = {
        "model_sha256": model_sha256(model),
        "seed": args.seed,
        "max_period": args.max_period,
        "cycles": [
            {
                "period": c.period,
                "kind": c.kind,
                "virtual": c.virtual,
                "regions": [str(r) for r in c.regions],
                "points": c.points.tolist(),
                "multipliers": _complex_pairs(c.multipliers),
            }
            for c in cycles
        ],
    }
    atomic_write(args.out, dumps_json17(doc))
    return 0


def _cmd_manifold(args, model) -> int:
    rng = np.random.default_rng(args.seed)
    cycles = find_cycles(model, args.max_period, rng=rng)
    saddles = [c for c in cycles if c.kind == "saddle"]
    if not saddles:
        raise PldynError("no saddle cycle found to grow a manifold from")
    if not 0 <= args.cycle_index < len(saddles):
        raise _UsageError(
            f"--cycle-index {args.cycle_index} out of range (found {len(saddles)})"
        )
    cyc = saddles[args.cycle_index]
    if args.fallback:
        man = build_manifold_fallback(model, cyc, args.side, seed=args.seed)
    else:
        man = build_manifold(
            model, cyc, args.side,
            max_iters=args.max_iters, max_segments=args.max_segments,
            rng=np.random.default_rng(args.seed),
        )
    header = ["segment", "depth", "kind", "region"] + [
        f"x{i}" for i in range(model.dim)
    ]
    rows = []
    for si, seg in enumerate(man.segments):
        for p in seg.points:
            rows.append([si, seg.depth, seg.kind, str(seg.region)] + list(p))
    write_csv(
        args.out, header, rows,
        footer=provenance_footer(
            model, args.seed,
            side=args.side, segments=len(man.segments),
            cycle_period=cyc.period,
        ),
    )
    return 0


def _cmd_homoclinic(args, model) -> int:
    if not isinstance(model, Map2D):
        raise ValueError("homoclinic analysis requires the general-2d variant")
    side = None if args.side == "auto" else args.side
    report = detect_homoclinic(
        model, side, max_returns=args.max_returns, run_all=True
    )
    doc: dict = {
        "model_sha256": model_sha256(model),
        "certified": report.certified,
        "stage": report.stage,
    }
    if report.saddle is not None:
        doc["saddle"] = {
            "side": report.saddle.side,
            "point": report.saddle.point.tolist(),
            "eigenvalues": _complex_pairs(report.saddle.eigenvalues),
            "admissible": report.saddle.admissible,
        }
    if report.case_i is not None:
        ci = report.case_i
        doc["first_fold"] = {
            "border_y": ci.y0,
            "image": ci.P1.tolist(),
            "second_image": ci.P2.tolist(),
            "product": ci.product,
            "crossed": ci.crossed,
            "beta": ci.beta,
            "point": None if ci.point is None else ci.point.tolist(),
            "side_product": ci.side_product,
            "certified": ci.certified,
        }
    if report.case_ii is not None:
        cii = report.case_ii
        doc["backward_fold"] = {
            "border_y": cii.y0_tilde,
            "preimage": cii.Pm1_tilde.tolist(),
            "product": cii.product,
            "crossed": cii.crossed,
            "beta": cii.beta,
            "point": None if cii.point is None else cii.point.tolist(),
            "side_product": cii.side_product,
            "certified": cii.certified,
        }
    if report.recursive is not None:
        rec = report.recursive
        doc["border_returns"] = {
            "certified": rec.certified,
            "n_return": rec.n_return,
            "entry_index": rec.entry_index,
            "return_point": None if rec.P_return is None else rec.P_return.tolist(),
            "next_point": None if rec.P_next is None else rec.P_next.tolist(),
            "product": rec.product,
            "n_checked": rec.n_checked,
        }
    atomic_write(args.out, dumps_json17(doc))
    return 0


def _cmd_sweep(args, model) -> int:
    name, values = _parse_sweep_spec(args.sweep)
    z0 = (
        _parse_point(args.z0, model.dim)
        if args.z0
        else np.random.default_rng(args.seed).standard_normal(model.dim) * 0.1
    )
    points = bifurcation_sweep(
        model, name, values, z0,
        T=args.steps, transient=args.transient, n_keep=args.keep,
        ic_policy=args.ic_policy, seed=args.seed, n_threads=args.threads,
    )
    header = [name, "sample"] + [f"x{i}" for i in range(model.dim)] + ["diverged"]
    rows = []
    for pt in points:
        if pt.diverged:
            rows.append([pt.value, -1] + [float("nan")] * model.dim + [True])
            continue
        for k, state in enumerate(pt.states):
            rows.append([pt.value, k] + list(state) + [False])
    write_csv(
        args.out, header, rows,
        footer=provenance_footer(
            model, args.seed, param=name, ic_policy=args.ic_policy,
        ),
    )
    return 0


def _cmd_basin(args, model) -> int:
    if model.dim != 2:
        raise ValueError("basin analysis requires a two-dimensional model")
    bounds, res = _parse_grid_spec(args.grid)
    rng = np.random.default_rng(args.seed)
    refs: list[AttractorRef] = []
    cycles = find_cycles(model, args.max_period, rng=rng)
    for c in cycles:
        if c.kind == "attractor":
            refs.append(AttractorRef.from_cycle(c, id=len(refs), tol=args.tol_attractor))
    # Probe orbits catch attractors that are not short cycles.
    lo = np.array([bounds[0], bounds[2]])
    hi = np.array([bounds[1], bounds[3]])
    for _ in range(args.probes):
        z = lo + rng.random(2) * (hi - lo)
        try:
            tail = simulate(model, z, 500, transient=2500)
        except (PldynError, ValueError):
            continue
        d_min = min(
            (float(np.min(np.linalg.norm(r.points[:, None, :] - tail[None, :, :], axis=2)))
             for r in refs),
            default=np.inf,
        )
        if d_min > 10 * args.tol_attractor:
            refs.append(AttractorRef.from_trajectory(tail, id=len(refs), tol=args.tol_attractor))
    if not refs:
        raise PldynError("no attractors found to label basins with")
    result = basin_grid(
        model, refs, bounds, res,
        max_steps=args.max_steps, check_every=args.check_every,
    )
    rows = []
    for ix in range(res):
        for iy in range(res):
            rows.append(
                [ix, iy, float(result.xs[ix]), float(result.ys[iy]),
                 int(result.labels[ix, iy])]
            )
    counts = result.counts()
    write_csv(
        args.out, ["ix", "iy", "x", "y", "label"], rows,
        footer=provenance_footer(
            model, args.seed,
            attractors=len(refs), n_steps=result.n_steps,
            counts=";".join(f"{k}={v}" for k, v in sorted(counts.items())),
        ),
    )
    return 0


def _cmd_metrics(args, model) -> int:
    z0 = (
        _parse_point(args.z0, model.dim)
        if args.z0
        else np.random.default_rng(args.seed).standard_normal(model.dim) * 0.1
    )
    lyap = lyapunov_exponents(model, z0, args.steps, transient=args.transient)
    doc: dict = {
        "model_sha256": model_sha256(model),
        "seed": args.seed,
        "lyapunov": {
            "exponents": lyap.exponents.tolist(),
            "largest": lyap.largest,
            "mean_log_abs_det": lyap.mean_log_abs_det,
            "n_steps": lyap.n_steps,
        },
    }
    if args.traj is not None:
        ref = _load_traj_csv(args.traj)
        if ref.shape[1] != model.dim:
            raise ValueError(
                f"trajectory has {ref.shape[1]} columns, model needs {model.dim}"
            )
        gen = simulate(model, ref[0], len(ref))
        doc["state_space_divergence"] = state_space_divergence(
            ref, gen, n_bins=args.bins
        )
        horizon = min(args.pe_horizon, len(ref) - 1)
        doc["prediction_error"] = prediction_error_curve(model, ref, horizon).tolist()
    atomic_write(args.out, dumps_json17(doc))
    return 0


_HANDLERS = {
    "fixed-points": _cmd_fixed_points,
    "manifold": _cmd_manifold,
    "homoclinic": _cmd_homoclinic,
    "sweep": _cmd_sweep,
    "basin": _cmd_basin,
    "metrics": _cmd_metrics,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        model = load_model(args.model)
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    try:
        return _HANDLERS[args.command](args, model)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except PldynError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
