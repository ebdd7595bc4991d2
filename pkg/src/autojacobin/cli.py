"""Command-line surface: convert, train, encode, eval, gradcheck, toy, plot.

Every command writes a run manifest (resolved flags, seed, paths,
version) next to its primary output, so any artifact can be reproduced
from its manifest alone. Outputs are deterministic functions of
(inputs, flags, seed).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, hamming, matrix_io, synth, svgplot
from .checks import check_gradients
from .network import forward_batch
from .tangent import estimate_all_tangents, projector
from .trainer import TrainConfig, init_params, train, write_trace_csv
from .variants import VariantConfig, lsh_generate

GRADCHECK_TOLERANCE = 1e-5


def write_manifest(out_path, command: str, flags: dict) -> Path:
    path = Path(str(out_path) + ".manifest.json")
    doc = {
        "tool": "autojacobin",
        "version": __version__,
        "command": command,
        "flags": {k: (str(v) if isinstance(v, Path) else v)
                  for k, v in sorted(flags.items())},
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_matrix(path) -> np.ndarray:
    path = str(path)
    if path.endswith(".fvecs"):
        return matrix_io.read_fvecs(path)
    if path.endswith(".bvecs"):
        return matrix_io.read_bvecs(path)
    return matrix_io.read_txt(path)


def write_matrix(path, X: np.ndarray) -> None:
    path = str(path)
    if path.endswith(".fvecs"):
        matrix_io.write_fvecs(path, X)
    elif path.endswith(".bvecs"):
        matrix_io.write_bvecs(path, X)
    else:
        matrix_io.write_txt(path, X)


def _flags(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


def cmd_convert(args) -> int:
    X = read_matrix(args.input)
    write_matrix(args.output, X)
    write_manifest(args.output, "convert", _flags(args))
    print(f"converted {args.input} -> {args.output} ({X.shape[0]}x{X.shape[1]})")
    return 0


def _train_model(X_raw: np.ndarray, args):
    nz = matrix_io.fit_normalizer(X_raw)
    Xn = matrix_io.apply_normalizer(nz, X_raw)
    method = VariantConfig(kind=args.method, alpha=args.alpha,
                           corruption_t=args.corrupt_t, lambda_c=args.lambda_c,
                           seed=args.seed)
    if method.kind == "lsh":
        params = lsh_generate(Xn.shape[0], args.bits, args.seed, scale=nz.scale)
        return params, None
    tangents = None
    if method.needs_tangents:
        D, N = Xn.shape
        if N < D + args.bits:
            raise SystemExit(f"tangent estimation needs N >= D+d = {D + args.bits} "
                             f"points, got {N}")
        tangents = [projector(t) for t in estimate_all_tangents(Xn, args.bits)]
    cfg = TrainConfig(bits=args.bits, alpha=args.alpha, epsilon=args.epsilon,
                      epochs=args.epochs, batch_size=min(args.batch, Xn.shape[1]),
                      total_iterations=args.iterations, seed=args.seed,
                      method=method)
    params, report = train(Xn, tangents, cfg)
    params.scale = nz.scale
    return params, report


def cmd_train(args) -> int:
    X_raw = read_matrix(args.input)
    if X_raw.size == 0:
        raise SystemExit(f"empty input {args.input}")
    params, report = _train_model(X_raw, args)
    matrix_io.write_model(args.out, params)
    if report is not None and args.trace:
        write_trace_csv(args.trace, report)
    write_manifest(args.out, "train", _flags(args))
    if report is not None:
        first = report.cost_trace[0].total if report.cost_trace else float("nan")
        last = report.cost_trace[-1].total if report.cost_trace else float("nan")
        print(f"trained {args.method}: {len(report.cost_trace)} iterations, "
              f"batch cost {first:.6g} -> {last:.6g}, {report.wall_time:.1f}s")
    else:
        print(f"generated {args.method} projection model")
    return 0


def cmd_encode(args) -> int:
    params = matrix_io.read_model(args.model)
    X = read_matrix(args.input) * params.scale
    codes = hamming.encode(params, X, use_bias=args.use_bias)
    matrix_io.write_codes(args.out, codes)
    write_manifest(args.out, "encode", _flags(args))
    print(f"encoded {codes.count} points at {codes.bits} bits -> {args.out}")
    return 0


def _cached_groundtruth(base_path, base: np.ndarray, queries: np.ndarray,
                        k: int) -> np.ndarray:
    h = hashlib.sha256()
    h.update(base.tobytes())
    h.update(queries.tobytes())
    h.update(str(k).encode())
    cache = Path(str(base_path) + f".{h.hexdigest()[:12]}.k{k}.ajbg")
    if cache.exists():
        return matrix_io.read_groundtruth(cache)
    gt = hamming.build_groundtruth(base, queries, k)
    matrix_io.write_groundtruth(cache, gt)
    return gt


def cmd_eval(args) -> int:
    params = matrix_io.read_model(args.model)
    base_raw = read_matrix(args.base)
    query_raw = read_matrix(args.query)
    K = args.max_retrieve
    if K > base_raw.shape[1]:
        raise SystemExit(f"K={K} exceeds base size {base_raw.shape[1]}")
    base_codes = hamming.encode(params, base_raw * params.scale,
                                use_bias=args.use_bias)
    query_codes = hamming.encode(params, query_raw * params.scale,
                                 use_bias=args.use_bias)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ks = [int(v) for v in args.k.split(",")]
    summary_rows = []
    for k in ks:
        gt = _cached_groundtruth(args.base, base_raw, query_raw, k)
        curve = hamming.recall_curve(gt, base_codes, query_codes, K)
        out = out_dir / f"recall_k{k}.csv"
        with open(out, "w") as f:
            f.write("i,recall\n")
            for i, v in enumerate(curve.values, 1):
                f.write(f"{i},{float(v)!r}\n")
            f.write(f"m_recall,{float(curve.m_recall)!r}\n")
        summary_rows.append((k, curve.m_recall))
    summary = out_dir / "m_recall.csv"
    with open(summary, "w") as f:
        f.write("k,m_recall\n")
        for k, mr in summary_rows:
            f.write(f"{k},{float(mr)!r}\n")
    write_manifest(summary, "eval", _flags(args))
    for k, mr in summary_rows:
        print(f"k={k}: m-Recall {mr:.4f}")
    return 0


def cmd_gradcheck(args) -> int:
    worst = 0.0
    for term, err in check_gradients(args.method, D=args.dims, d=args.bits,
                                     n=args.points, seed=args.seed).items():
        status = "ok" if err < GRADCHECK_TOLERANCE else "FAIL"
        print(f"{args.method} {term:12s} max rel error {err:.3e}  {status}")
        worst = max(worst, err)
    return 0 if worst < GRADCHECK_TOLERANCE else 1


def cmd_toy(args) -> int:
    rng = np.random.default_rng(args.seed)
    X_raw = synth.simplex_points(args.points, rng)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    nz = matrix_io.fit_normalizer(X_raw)
    Xn = matrix_io.apply_normalizer(nz, X_raw)
    tangents = [projector(t) for t in estimate_all_tangents(Xn, 3)]
    cfg = TrainConfig(bits=3, alpha=args.alpha, epochs=args.epochs,
                      batch_size=min(args.batch, args.points), seed=args.seed,
                      method=VariantConfig(kind="auto-jacobin", alpha=args.alpha,
                                           seed=args.seed))
    p0 = init_params(Xn, 3, np.random.default_rng(args.seed))
    p0.scale = nz.scale
    params, report = train(Xn, tangents, cfg)
    params.scale = nz.scale

    rows = []
    for phase, p in (("init", p0), ("trained", params)):
        codes = hamming.encode(p, Xn)
        distinct = len({bytes(row) for row in codes.packed})
        Y, _ = forward_batch(p, Xn)
        rows.append((phase, distinct, float(np.mean(np.abs(Y)))))
    summary = out_dir / "toy_summary.csv"
    with open(summary, "w") as f:
        f.write("phase,distinct_codes,mean_abs_hidden\n")
        for phase, distinct, mean_abs in rows:
            f.write(f"{phase},{distinct},{float(mean_abs)!r}\n")
    matrix_io.write_model(out_dir / "toy.ajb", params)
    matrix_io.write_codes(out_dir / "toy.ajbc", hamming.encode(params, Xn))
    write_trace_csv(out_dir / "toy_trace.csv", report)
    write_manifest(summary, "toy", _flags(args))
    for phase, distinct, mean_abs in rows:
        print(f"{phase}: {distinct} distinct codes, mean |y| = {mean_abs:.3f}")
    return 0


def _load_series(path):
    """(label, xs, ys) from a recall or trace CSV; summary rows skipped."""
    xs, ys = [], []
    with open(path) as f:
        header = f.readline().strip()
        if not header:
            raise SystemExit(f"{path}: empty CSV")
        cols = header.split(",")
        ycol = 1
        for line in f:
            fields = line.strip().split(",")
            if not fields or not fields[0]:
                continue
            try:
                x = float(fields[0])
            except ValueError:
                continue  # trailing summary row such as m_recall
            xs.append(x)
            ys.append(float(fields[ycol]))
    if not xs:
        raise SystemExit(f"{path}: no data rows")
    return Path(path).stem, xs, ys


def cmd_plot(args) -> int:
    series = [_load_series(p) for p in args.inputs]
    svg = svgplot.render_chart(series, xlabel=args.xlabel, ylabel=args.ylabel,
                               title=args.title)
    Path(args.out).write_text(svg)
    write_manifest(args.out, "plot", _flags(args))
    print(f"wrote {args.out} ({len(series)} series)")
    return 0


def _coerce(value: str):
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def _iter_parsers(parser):
    yield parser
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                yield from _iter_parsers(sub)


def _apply_config(parser, argv):
    """Optional key=value config file; command-line flags override it."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    defaults = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            defaults[key.strip().replace("-", "_")] = _coerce(value.strip())
    for p in _iter_parsers(parser):
        known = {a.dest for a in p._actions}
        mine = {k: v for k, v in defaults.items() if k in known}
        if mine:
            p.set_defaults(**mine)
            for a in p._actions:
                if a.dest in mine:
                    a.required = False
    return argv[:i] + argv[i + 2:]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="autojacobin")
    ap.add_argument("--config", help="key=value config file; flags override")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert between fvecs/bvecs/txt")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", help="train a hashing model")
    p.add_argument("--input", required=True)
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--method", default="auto-jacobin",
                   choices=["auto-jacobin", "autobin", "dautobin", "cautobin", "lsh"])
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch", type=int, default=1000)
    p.add_argument("--iterations", type=int, default=None,
                   help="optional cap on total iterations")
    p.add_argument("--corrupt-t", type=float, default=0.1)
    p.add_argument("--lambda-c", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None, help="cost-trace CSV path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="encode vectors with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--use-bias", action="store_true")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("eval", help="recall curves against Euclidean ground truth")
    p.add_argument("--model", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", default="1,5,10,50,100")
    p.add_argument("--max-retrieve", type=int, default=10000)
    p.add_argument("--use-bias", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="validate analytic gradients")
    p.add_argument("--dims", type=int, default=8)
    p.add_argument("--bits", type=int, default=4)
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", default="auto-jacobin",
                   choices=["auto-jacobin", "autobin", "dautobin", "cautobin"])
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("toy", help="simplex warping experiment")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("plot", help="render CSV series as an SVG line chart")
    p.add_argument("--out", required=True)
    p.add_argument("--xlabel", default="i")
    p.add_argument("--ylabel", default="value")
    p.add_argument("--title", default="")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_plot)

    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    argv = _apply_config(ap, argv)
    args = ap.parse_args(argv)
    threads = os.environ.get("AJB_THREADS")
    if threads:
        os.environ.setdefault("OMP_NUM_THREADS", threads)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
