"""Command-line front end.

Every subcommand writes one JSON report (to stdout or ``--out``) and exits
with 0 when all checks pass, 1 when a check fails and 2 on usage or input
errors.
"""

import argparse
import sys

import numpy as np

from . import __version__
from .atlas import check_atlas
from .collar import collar_check
from .diffeo import base_map_affine, base_map_external, lift, structure_conjugate, verify_equivariant_diffeo
from .errors import InputParseError, MomentAngleError, PolytopeError
from .gale import complement_matrix
from .geometry import combinatorial_type, load_polytope
from .manifold import jacobian_rank_check, membership_residual, rank_ratios, sample_points
from .report import Report, RunConfig

COMMANDS = ("info", "vertices", "quadrics", "check-manifold", "atlas-check", "collar-check",
            "lift", "verify-diffeo", "sample")


class UsageError(Exception):
    pass


def _cmd_info(P, cfg, rep):
    rep.result.update({
        "name": P.name, "dim": P.n, "facets": P.m, "vertices": len(P.vertices),
        "facet_degrees": list(P.facet_degrees()),
        "combinatorial_type": str(combinatorial_type(P)),
    })
    rep.check("valid_simple_polytope", True, 0.0)


def _cmd_vertices(P, cfg, rep):
    rep.result["vertices"] = [{"x": x.tolist(), "facets": list(om)}
                              for x, om in zip(P.vertices, P.incidence)]
    rep.check("valid_simple_polytope", True, 0.0)


def _cmd_quadrics(P, cfg, rep):
    QS = complement_matrix(P)
    rep.result.update(QS.to_dict())
    res = float(np.abs(QS.C @ P.A).max())
    rep.check("complement_annihilates_normals", res < 1e-12, res)


def _cmd_check_manifold(P, cfg, rep):
    QS = complement_matrix(P)
    U = sample_points(P, QS, cfg.samples, cfg.seed)
    res = membership_residual(QS, U)
    ratios = rank_ratios(QS, U)
    rep.result.update({"points": len(U), "max_residual": float(res.max()),
                       "min_rank_sigma": float(ratios.min())})
    rep.check("membership", bool(res.max() < cfg.tau_mem), float(res.max()))
    worst = int(np.argmin(ratios))
    rank = jacobian_rank_check(QS, U[worst], cfg.tau_rank, cfg.tau_mem, raise_on_failure=False)
    rep.check("submersion", rank.ok and bool(ratios.min() > cfg.tau_rank), float(ratios.min()))


def _cmd_atlas_check(P, cfg, rep):
    QS = complement_matrix(P)
    r = check_atlas(P, QS, probes=cfg.probes or 100, h=cfg.step, seed=cfg.seed, threads=cfg.threads)
    rep.result.update(r)
    for s in ("rzp", "base-linear", "base-quadratic"):
        rep.check(f"{s}_transitions", r[s]["ok"], max(r[s]["max_jacobian_residual"], r[s]["max_cocycle"]),
                  max_roundtrip=r[s]["max_roundtrip"])


def _cmd_collar_check(P, cfg, rep):
    r = collar_check(P, cfg.delta, probes=cfg.probes or 500, seed=cfg.seed)
    rep.result.update(r)
    rep.check("xi_round_trip", r["xi_round_trip"] < 1e-10, r["xi_round_trip"])
    rep.check("F_round_trip", r["F_round_trip"] < 1e-8, r["F_round_trip"])
    rep.check("F_face_preservation", r["F_face_preservation"] < 1e-8, r["F_face_preservation"])
    rep.check("F_c1", r["c1"]["ok"], r["c1"]["max_c1_residual"], min_abs_det=r["c1"]["min_abs_det"])


def _base_map(P, Q, args):
    if args.affine:
        return base_map_affine(P, Q)
    if args.structure:
        return structure_conjugate(P, Q)
    return base_map_external(P, Q, args.map, args.map_inverse)


def _cmd_lift(P, Q, cfg, args, rep):
    g = _base_map(P, Q, args)
    f = lift(g)
    U = sample_points(P, f.QS_P, cfg.samples, cfg.seed)
    out, res = f.evaluate(U)
    rep.result.update({"map": g.describe(), "points": [{"u": u, "f": v} for u, v in zip(U, out)]})
    rep.check("membership", bool(res.max() < f.tol), float(res.max()))


def _cmd_verify_diffeo(P, Q, cfg, args, rep):
    g = _base_map(P, Q, args)
    cert = verify_equivariant_diffeo(lift(g), probes=cfg.probes or 100, seed=cfg.seed, threads=cfg.threads)
    rep.result["map"] = cert["map"]
    rep.result["probes"] = cert["probes"]
    for c in cert["checks"]:
        extra = {k: v for k, v in c.items() if k not in ("name", "status", "residual")}
        rep.check(c["name"], c["status"] == "pass", c["residual"], **extra)


def _cmd_sample(P, cfg, rep):
    QS = complement_matrix(P)
    U = sample_points(P, QS, cfg.samples, cfg.seed)
    res = membership_residual(QS, U)
    rep.result["points"] = U
    rep.check("membership", bool(res.max() < cfg.tau_mem), float(res.max()))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--timings", action="store_true",
                        help="record per-check runtimes (makes the report run-dependent)")

    parser = argparse.ArgumentParser(prog="momentangle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"momentangle {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("info", "vertices", "quadrics"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("polytope")
    p = sub.add_parser("check-manifold", parents=[common])
    p.add_argument("polytope")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-9, help="membership tolerance")
    p = sub.add_parser("atlas-check", parents=[common])
    p.add_argument("polytope")
    p.add_argument("--probes", type=int, default=100)
    p.add_argument("--step", type=float, default=1e-5)
    p = sub.add_parser("collar-check", parents=[common])
    p.add_argument("polytope")
    p.add_argument("--delta", type=float)
    p.add_argument("--probes", type=int, default=500)
    for name in ("lift", "verify-diffeo"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("source")
        p.add_argument("target")
        how = p.add_mutually_exclusive_group(required=True)
        how.add_argument("--affine", action="store_true")
        how.add_argument("--structure", action="store_true")
        how.add_argument("--map", metavar="CMD", help="external evaluator of g")
        p.add_argument("--map-inverse", metavar="CMD", help="external evaluator of g^-1 (needed with --map)")
        if name == "lift":
            p.add_argument("--samples", type=int, default=20)
        else:
            p.add_argument("--probes", type=int, default=100)
    p = sub.add_parser("sample", parents=[common])
    p.add_argument("polytope")
    p.add_argument("--samples", type=int, default=100)
    return parser


def _config(args):
    return RunConfig(
        seed=args.seed,
        tau_mem=getattr(args, "tol", 1e-9),
        samples=getattr(args, "samples", 1000),
        probes=getattr(args, "probes", None),
        step=getattr(args, "step", 1e-5),
        delta=getattr(args, "delta", None),
        threads=args.threads,
        timings=args.timings,
        out=args.out,
    )


def run_subcommand(args):
    """Run one parsed command line and return its report."""
    try:
        cfg = _config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if getattr(args, "map", None) and not args.map_inverse:
        raise UsageError("--map needs --map-inverse")
    rep = Report(args.command, cfg)
    paths = [args.source, args.target] if args.command in ("lift", "verify-diffeo") else [args.polytope]
    try:
        polys = []
        for path in paths:
            rep.add_input(path)
            polys.append(load_polytope(path))
    except OSError as exc:
        rep.error = {"type": "InputParseError", "message": str(exc)}
        return rep
    except (InputParseError, PolytopeError) as exc:
        rep.error = {"type": type(exc).__name__, "message": str(exc)}
        return rep
    try:
        if args.command in ("lift", "verify-diffeo"):
            handler = _cmd_lift if args.command == "lift" else _cmd_verify_diffeo
            handler(*polys, cfg, args, rep)
        else:
            handler = globals()["_cmd_" + args.command.replace("-", "_")]
            handler(polys[0], cfg, rep)
    except MomentAngleError as exc:
        rep.check(args.command, False, getattr(exc, "residual", None),
                  error=type(exc).__name__, message=str(exc))
    return rep


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rep = run_subcommand(args)
    except UsageError as exc:
        parser.error(str(exc))
    text = rep.dumps()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
