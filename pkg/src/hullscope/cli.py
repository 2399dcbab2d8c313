"""Command line entry point: ``hullscope <subcommand> [flags]``.

Exit codes: 0 success, 2 usage or input error, 3 solver non-convergence
under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data.datasets import ImageSet, load_points, read_column, split_indices, to_grayscale_resize
from .data.formats import FormatError, atomic_write_text, write_image, write_matrix
from .features.selection import build_feature_matrix, laplacian_select, rrqr_select
from .hull.solver import batch_project
from .metrics import (
    APPROX_FACTOR,
    DEFAULT_BLOCK_SIZE,
    diameter_approx,
    diameter_exact,
    distance_report,
    projection_delta,
    rank_by_distance,
)
from .plots import histogram_svg
from .scope import generalization_report, ood_separation_report, split_by_hull
from .types import DimensionError, PointSet, SolverConfig

log = logging.getLogger("hullscope")

SCHEMA_VERSION = 1
FORMATS = ("json", "csv", "svg")


class UsageError(Exception):
    """Bad flags or unusable inputs; maps to exit code 2."""


class NotConverged(Exception):
    """Raised under --strict; maps to exit code 3."""


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("HULLSCOPE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"HULLSCOPE_THREADS must be an integer, got {env!r}")
    return 1


def _formats(value):
    fmts = [f.strip() for f in value.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if not fmts or bad:
        raise argparse.ArgumentTypeError(f"formats must be a comma list from {FORMATS}")
    return fmts


def _positive(value):
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _existing(path):
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p


def _solver_config(args, threads):
    return SolverConfig(gap_tolerance=args.gap_tol, max_iterations=args.max_iters, threads=threads)


def _load(path, args, limit=None):
    _existing(path)
    return load_points(path, normalize=args.normalize, limit=limit,
                       has_header=not args.no_header, label_column=args.label_column)


def _dump_json(path, payload):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _dump_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def _envelope(kind, args, extra=None):
    env = {
        "schema": f"hullscope.{kind}/{SCHEMA_VERSION}",
        "version": __version__,
        "normalize": args.normalize,
        "seed": args.seed,
    }
    if extra:
        env.update(extra)
    return env


def _check_strict(args, results):
    bad = [i for i, r in enumerate(results) if not r.converged]
    if bad:
        log.warning("%d projection(s) did not converge (first: query %d)", len(bad), bad[0])
        if args.strict:
            raise NotConverged(f"{len(bad)} projection(s) did not converge")


def _train_and_queries(args):
    train = _load(args.train, args, args.limit_train)
    if args.queries is not None:
        queries = _load(args.queries, args, args.limit_queries)
        return train, queries.data, queries
    if args.test_fraction is None:
        raise UsageError("give --queries, or --test-fraction to split --train")
    tr, te = split_indices(len(train.data), args.test_fraction, args.seed)
    qdata = train.data[te]
    if args.limit_queries is not None:
        qdata = qdata[:args.limit_queries]
    train.data = train.data[tr]
    return train, qdata, train


def _point_set(loaded, args):
    bounds = None
    if loaded.scale is not None:
        bounds = (0.0, 255.0 if loaded.scale == "raw" else 1.0)
    return PointSet(loaded.data, bounds=bounds)


def _image_shape(loaded, args):
    if args.image_shape:
        try:
            return tuple(int(x) for x in args.image_shape.lower().split("x"))
        except ValueError:
            raise UsageError(f"bad --image-shape {args.image_shape!r}, expected e.g. 28x28")
    return loaded.image_shape


# ---------------------------------------------------------------- subcommands

def cmd_project(args, out, threads):
    train, qdata, qsrc = _train_and_queries(args)
    points = _point_set(train, args)
    idx = args.index if args.index else list(range(len(qdata)))
    for i in idx:
        if not 0 <= i < len(qdata):
            raise UsageError(f"--index {i} out of range for {len(qdata)} queries")
    if not idx:
        raise UsageError("query file is empty")
    cfg = _solver_config(args, threads)
    log.info("projecting %d quer%s onto hull of %d points (d=%d)",
             len(idx), "y" if len(idx) == 1 else "ies", points.n_points, points.dim)
    results = batch_project(points, [qdata[i] for i in idx], cfg)
    deltas = [projection_delta(points, qdata[i], result=r) for i, r in zip(idx, results)]
    records = []
    for i, r in zip(idx, results):
        rec = {"index": i}
        rec.update(r.to_dict())
        records.append(rec)
    payload = _envelope("project", args, {"n_train": points.n_points, "dim": points.dim,
                                          "projections": records})
    if "json" in args.format:
        _dump_json(out / "project.json", payload)
    if "csv" in args.format:
        _dump_csv(out / "project.csv", ["index", "distance", "dual_gap", "iterations", "converged"],
                  [[rec["index"], repr(rec["distance"]), repr(rec["dual_gap"]), rec["iterations"],
                    int(rec["converged"])] for rec in records])
    write_matrix(out / "on_hull.hsmx", np.array([d.on_hull for d in deltas]))
    write_matrix(out / "delta.hsmx", np.array([d.delta for d in deltas]))
    shape = _image_shape(qsrc, args)
    if shape is not None:
        top = 255.0 if args.normalize == "raw" else 1.0
        for i, d in zip(idx, deltas):
            write_image(out / f"query{i}_original.pgm", d.original.reshape(shape), 0.0, top)
            write_image(out / f"query{i}_on_hull.pgm", d.on_hull.reshape(shape), 0.0, top)
            span = float(np.abs(d.delta).max()) or 1.0
            write_image(out / f"query{i}_delta.pgm", d.delta.reshape(shape), -span, span)
    _check_strict(args, results)
    return payload


def cmd_distances(args, out, threads):
    train, qdata, _ = _train_and_queries(args)
    if len(qdata) == 0:
        raise UsageError("query set is empty")
    points = _point_set(train, args)
    cfg = _solver_config(args, threads)
    log.info("distances of %d queries to hull of %d points (d=%d)", len(qdata), points.n_points,
             points.dim)
    rep = distance_report(points, qdata, cfg, tol=args.tol, bins=args.bins,
                          approx_diameter=args.diameter_mode == "approx", sweeps=args.sweeps,
                          block_size=args.block_size)
    k = min(args.top_k, len(qdata))
    payload = _envelope("distances", args, rep.to_dict())
    payload["farthest"] = rank_by_distance(points, qdata, k=k, distances=rep.distances)
    if rep.diameter_method == "approx":
        payload["diameter_guaranteed_factor"] = APPROX_FACTOR
    if "json" in args.format:
        _dump_json(out / "distances.json", payload)
    if "csv" in args.format:
        _dump_csv(out / "distances.csv", ["index", "distance", "ratio", "outside"],
                  [[i, repr(float(d)), repr(float(r)), int(d > rep.tol)]
                   for i, (d, r) in enumerate(zip(rep.distances, rep.ratios))])
    if "svg" in args.format:
        atomic_write_text(out / "distances.svg", histogram_svg(
            rep.histogram["edges"], [rep.histogram["counts"]], ["queries"],
            title="distance to convex hull of training set"))
    if args.strict and rep.converged is not None and not rep.converged.all():
        raise NotConverged(f"{int((~rep.converged).sum())} projection(s) did not converge")
    return payload


def cmd_diameter(args, out, threads):
    train = _load(args.train, args, args.limit_train)
    points = _point_set(train, args)
    log.info("diameter (%s) of %d points (d=%d)", args.mode, points.n_points, points.dim)
    if points.n_points < 2:
        raise UsageError("diameter needs at least two training points")
    if args.mode == "exact":
        value = diameter_exact(points, args.block_size)
        extra = {"diameter": value, "method": "exact", "block_size": args.block_size}
    else:
        value = diameter_approx(points, args.sweeps)
        extra = {"diameter": value, "method": "approx", "sweeps": args.sweeps,
                 "guaranteed_factor": APPROX_FACTOR}
    extra["n_train"] = points.n_points
    payload = _envelope("diameter", args, extra)
    if "json" in args.format:
        _dump_json(out / "diameter.json", payload)
    if "csv" in args.format:
        _dump_csv(out / "diameter.csv", ["method", "diameter"], [[extra["method"], repr(value)]])
    return payload


def _match_shape(loaded, train_loaded):
    if loaded.image_shape is None or train_loaded.image_shape is None:
        return loaded.data
    if loaded.image_shape == train_loaded.image_shape:
        return loaded.data
    if len(train_loaded.image_shape) != 2:
        raise UsageError("--match-train-shape needs a grayscale training set")
    h, w = train_loaded.image_shape
    top = 255.0 if loaded.scale == "raw" else 1.0
    imgs = ImageSet(loaded.data.reshape((-1,) + loaded.image_shape), None, loaded.scale)
    if imgs.images.max() > top:
        raise UsageError("cannot convert images outside the declared scale")
    return to_grayscale_resize(imgs, h, w).flatten()


def cmd_ood(args, out, threads):
    train = _load(args.train, args, args.limit_train)
    ind = _load(args.in_dist, args, args.limit_queries)
    outd = _load(args.out_dist, args, args.limit_queries)
    in_data, out_data = ind.data, outd.data
    if args.match_train_shape:
        in_data, out_data = _match_shape(ind, train), _match_shape(outd, train)
    points = _point_set(train, args)
    cfg = _solver_config(args, threads)
    log.info("OOD separation: %d in-dist vs %d out-dist queries", len(in_data), len(out_data))
    try:
        rep = ood_separation_report(points, in_data, out_data, cfg, bins=args.bins)
    except DimensionError as exc:
        raise UsageError(f"{exc} (try --match-train-shape)")
    payload = _envelope("ood", args, rep.to_dict())
    if "json" in args.format:
        _dump_json(out / "ood.json", payload)
    if "csv" in args.format:
        rows = [["in", i, repr(float(d))] for i, d in enumerate(rep.in_dist_distances)]
        rows += [["out", i, repr(float(d))] for i, d in enumerate(rep.out_dist_distances)]
        _dump_csv(out / "ood.csv", ["population", "index", "distance"], rows)
    if "svg" in args.format:
        h = rep.histogram
        atomic_write_text(out / "ood.svg", histogram_svg(
            h["edges"], [h["in_counts"], h["out_counts"]], ["in-distribution", "out-of-distribution"],
            title="distance to convex hull of training set"))
    return payload


def _family_order(family):
    s = str(family).lower()
    if s.startswith("db"):
        s = s[2:]
    try:
        return int(s)
    except ValueError:
        raise UsageError(f"unsupported wavelet family {family!r}; use db1..db10")


def cmd_features(args, out, threads):
    src = _load(args.images, args, args.limit_train)
    shape = _image_shape(src, args)
    if shape is None or len(shape) != 2:
        raise UsageError("features need grayscale images; give --image-shape HxW for matrix input")
    images = src.data.reshape((-1,) + shape)
    order = _family_order(args.family)
    try:
        fm = build_feature_matrix(list(images), order, args.levels)
    except ValueError as exc:
        raise UsageError(str(exc))
    log.info("wavelet features: %d x %d (db%d, %d levels)", *fm.shape, order, args.levels)
    if args.selector != "none":
        if args.k is None:
            raise UsageError(f"--k is required for selector {args.selector}")
        if args.selector == "rrqr":
            idx = rrqr_select(fm, args.k)
            sel = {"kind": "rrqr", "k": args.k, "pivot_order": idx}
        else:
            idx = laplacian_select(fm, args.k, knn=args.knn, bandwidth=args.bandwidth)
            sel = {"kind": "laplacian", "k": args.k, "knn": args.knn, "bandwidth": args.bandwidth}
        fm = fm.select(idx, sel)
    write_matrix(out / "features.hsmx", fm.data)
    payload = _envelope("features", args, fm.provenance())
    _dump_json(out / "features.json", payload)
    return payload


def cmd_split(args, out, threads):
    train, qdata, _ = _train_and_queries(args)
    points = _point_set(train, args)
    preds = read_column(_existing(args.predictions))
    labels = read_column(_existing(args.labels))
    if len(preds) != len(qdata) or len(labels) != len(qdata):
        raise UsageError(f"{len(preds)} predictions and {len(labels)} labels for {len(qdata)} queries")
    cfg = _solver_config(args, threads)
    log.info("splitting %d queries by hull membership (tol=%g)", len(qdata), args.tol)
    part = split_by_hull(points, qdata, cfg, args.tol)
    rep = generalization_report(part, preds, labels)
    payload = _envelope("split", args, rep.to_dict())
    payload["tol"] = args.tol
    if "json" in args.format:
        _dump_json(out / "split.json", payload)
    if "csv" in args.format:
        inside = set(part.inside_indices.tolist())
        _dump_csv(out / "split.csv", ["index", "distance", "inside", "correct"],
                  [[i, repr(float(d)), int(i in inside), int(preds[i] == labels[i])]
                   for i, d in enumerate(part.distances)])
    return payload


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive, default=1e-3,
                        help="membership threshold on distance (default 1e-3)")
    common.add_argument("--gap-tol", type=_positive, default=None,
                        help="Frank-Wolfe gap tolerance (default 1e-6 * max(1, |q|^2))")
    common.add_argument("--max-iters", type=int, default=100_000)
    common.add_argument("--normalize", choices=("raw", "unit"), default="raw",
                        help="pixel scale for image inputs")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (fallback: HULLSCOPE_THREADS, then 1)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--format", type=_formats, default=list(FORMATS),
                        help="comma list of json,csv,svg")
    common.add_argument("--strict", action="store_true",
                        help="exit 3 if any projection misses its gap tolerance")
    common.add_argument("--limit-train", type=int, default=None, help="use the first N training rows")
    common.add_argument("--limit-queries", type=int, default=None, help="use the first N query rows")
    common.add_argument("--no-header", action="store_true", help="CSV inputs have no header row")
    common.add_argument("--label-column", default=None,
                        help="CSV column (index or name) to drop from the features")
    common.add_argument("--image-shape", default=None, help="e.g. 28x28, for matrix/CSV inputs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hullscope", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hullscope {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def queries(sp):
        sp.add_argument("--train", required=True)
        sp.add_argument("--queries", default=None)
        sp.add_argument("--test-fraction", type=float, default=None,
                        help="without --queries: hold out this fraction of --train (seeded)")

    sp = sub.add_parser("project", parents=[common], help="project queries onto the hull")
    queries(sp)
    sp.add_argument("--index", type=int, action="append", help="query row(s) to project")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("distances", parents=[common], help="distance report and histogram")
    queries(sp)
    sp.add_argument("--bins", type=int, default=50)
    sp.add_argument("--diameter-mode", choices=("exact", "approx"), default="exact")
    sp.add_argument("--sweeps", type=int, default=2)
    sp.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE)
    sp.add_argument("--top-k", type=int, default=10, help="farthest queries to list")
    sp.set_defaults(func=cmd_distances)

    sp = sub.add_parser("diameter", parents=[common], help="hull diameter")
    sp.add_argument("--train", required=True)
    sp.add_argument("--mode", choices=("exact", "approx"), default="exact")
    sp.add_argument("--sweeps", type=int, default=2)
    sp.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE)
    sp.set_defaults(func=cmd_diameter)

    sp = sub.add_parser("ood", parents=[common], help="distance-based OOD separation")
    sp.add_argument("--train", required=True)
    sp.add_argument("--in-dist", required=True)
    sp.add_argument("--out-dist", required=True)
    sp.add_argument("--bins", type=int, default=50)
    sp.add_argument("--match-train-shape", action="store_true",
                    help="grayscale + resize image queries to the training image shape")
    sp.set_defaults(func=cmd_ood)

    sp = sub.add_parser("features", parents=[common], help="wavelet features + selection")
    sp.add_argument("--images", required=True)
    sp.add_argument("--family", default="db4")
    sp.add_argument("--levels", type=int, default=2)
    sp.add_argument("--selector", choices=("none", "rrqr", "laplacian"), default="none")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--knn", type=int, default=5)
    sp.add_argument("--bandwidth", type=_positive, default=None)
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("split", parents=[common], help="interpolation/extrapolation accuracy split")
    queries(sp)
    sp.add_argument("--predictions", required=True)
    sp.add_argument("--labels", required=True)
    sp.set_defaults(func=cmd_split)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="hullscope: %(message)s", stream=sys.stderr)
    try:
        threads = _threads(args.threads)
        if threads < 1:
            raise UsageError("--threads must be >= 1")
        if args.max_iters < 1:
            raise UsageError("--max-iters must be >= 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        args.func(args, out, threads)
    except (UsageError, FormatError, DimensionError, FileNotFoundError) as exc:
        print(f"hullscope: error: {exc}", file=sys.stderr)
        return 2
    except NotConverged as exc:
        print(f"hullscope: error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"hullscope: error: {exc}", file=sys.stderr)
        return 2
    log.info("wrote %s", args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
