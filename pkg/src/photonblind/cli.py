"""``photonblind`` command-line interface.

Subcommands: ``simulate``, ``deblur``, ``grad-check``, ``evaluate``, ``bench``.
Exit codes: 0 success, 1 numerical failure, 2 usage or I/O error.
``PHOTONBLIND_THREADS`` sets how many benchmark cells run at once (default 1).
"""

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .blind import initialize, run
from .errors import BlindRunAborted, DegenerateInputError, DegenerateKernelError
from .fields import embed_kernel
from .gradcheck import gradient_check
from .metrics import evaluate_pair, psnr
from .poisson import estimate_photon_level, simulate
from .solver import SOLVERS, loss_value
from .synth import parse_kernel_spec, shapes_chart

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
THREADS_ENV = "PHOTONBLIND_THREADS"
NUM_FMT = ".10g"

log = logging.getLogger("photonblind")


class UsageError(Exception):
    pass


# --- helpers -------------------------------------------------------------------

def _num(v):
    return format(float(v), NUM_FMT)


def _load_latent(spec, seed=0):
    """Image path, or ``chart[:size]`` for the built-in synthetic chart."""
    if spec.startswith("chart"):
        parts = spec.split(":")
        return shapes_chart(int(parts[1]) if len(parts) > 1 else 128, seed)
    if not Path(spec).is_file():
        raise UsageError(f"input image not found: {spec}")
    return io.read_image(spec)


def _load_kernel(spec, size):
    if Path(spec).is_file():
        h = io.read_kernel(spec)
    else:
        try:
            h = parse_kernel_spec(spec, size)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if size is not None and h.shape[0] < size:
        h = embed_kernel(h, size)
    return h


def thread_count():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def _add_blind_flags(p):
    """One ``--name`` override per BlindConfig setting (dots become dashes)."""
    grp = p.add_argument_group("blind solver settings (override the config file)")
    for key, kind in io.blind_config_keys().items():
        flag = "--" + key.replace(".", "-").replace("_", "-")
        meta = "BOOL" if kind is bool else kind.__name__.upper()
        grp.add_argument(flag, dest="cfg__" + key, metavar=meta, default=None,
                         help=f"{key} ({meta.lower()})")
    grp.add_argument("--strict-alg1", action="store_true",
                     help="plain iteration: no backtracking line search")


def _blind_overrides(args):
    keys = io.blind_config_keys()
    out = {}
    for key, kind in keys.items():
        raw = getattr(args, "cfg__" + key)
        if raw is not None:
            try:
                out[key] = io.parse_value(raw, kind)
            except ValueError as exc:
                raise UsageError(f"--{key}: {exc}") from None
    if args.strict_alg1:
        out["backtracking"] = False
    return out


def _resolve_blind(args, base):
    try:
        return io.blind_from_flat(_blind_overrides(args), base)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad solver settings: {exc}") from None


def _load_experiment(path):
    if path is None:
        return io.ExperimentConfig()
    if not Path(path).is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        return io.ExperimentConfig.load(path)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def write_loss_csv(path, report):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "loss", "mu", "gamma", "psnr"])
        for r in report.per_iteration:
            w.writerow([r.k, _num(r.loss), _num(r.mu), _num(r.gamma),
                        "" if r.psnr is None else _num(r.psnr)])


# --- simulate ------------------------------------------------------------------

def cmd_simulate(args):
    x = _load_latent(args.image, args.seed)
    h = _load_kernel(args.kernel, args.kernel_size)
    y = simulate(x, h, args.alpha, args.seed, boundary=args.boundary)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "." + args.counts_format
    io.write_counts(out / f"y{ext}", y)
    if ext == ".txt":
        io.write_matrix(out / "x_true.txt", x)
    else:
        io.write_image(out / "x_true.png", x)
    io.write_kernel(out / "h_true.txt", h)
    meta = {"alpha": _num(args.alpha), "seed": args.seed, "kernel": args.kernel,
            "boundary": args.boundary, "image": args.image}
    (out / "meta.txt").write_text("".join(f"{k}={v}\n" for k, v in meta.items()),
                                  encoding="ascii")
    print(f"wrote {out / ('y' + ext)} ({y.shape[0]}x{y.shape[1]}, total counts {int(y.sum())})")
    return EXIT_OK


# --- deblur ----------------------------------------------------------------------

def cmd_deblur(args):
    if not Path(args.y).is_file():
        raise UsageError(f"observation not found: {args.y}")
    y = io.read_counts(args.y)
    exp = _load_experiment(args.config)
    cfg = _resolve_blind(args, exp.blind)
    reference = _load_latent(args.reference) if args.reference else None
    estimated = args.alpha is None
    alpha = estimate_photon_level(y, cfg.beta) if estimated else args.alpha
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    code = EXIT_OK
    try:
        report = run(y, alpha, cfg, reference=reference)
    except BlindRunAborted as exc:
        log.error("%s", exc)
        report, code = exc.report, EXIT_NUMERIC
    io.write_image(out / "x_hat.png", report.final_image)
    io.write_kernel(out / "h_hat.txt", report.final_kernel)
    write_loss_csv(out / "loss.csv", report)
    summary = {
        "alpha": _num(report.alpha_used),
        "alpha_estimated": "true" if estimated else "false",
        "iterations": len(report.per_iteration) - 1,
        "initial_loss": _num(report.losses[0]),
        "final_loss": _num(report.losses[-1]),
        "aborted": "true" if report.aborted else "false",
    }
    if reference is not None:
        summary["psnr"] = _num(psnr(report.final_image, reference))
    (out / "report.txt").write_text("".join(f"{k}={v}\n" for k, v in summary.items()),
                                    encoding="ascii")
    for k, v in summary.items():
        print(f"{k}={v}")
    return code


# --- grad-check ------------------------------------------------------------------

def cmd_grad_check(args):
    rep = gradient_check(n=args.n, image_size=args.size, kernel_size=args.kernel_size,
                         unroll_steps=args.steps, seed=args.seed, method=args.solver,
                         boundary=args.boundary)
    ok = rep.passed(args.tol)
    print(rep.summary() + f" tol={args.tol:g} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERIC


# --- evaluate --------------------------------------------------------------------

def cmd_evaluate(args):
    for p in (args.x_hat, args.x_true, args.h_hat, args.h_true):
        if p is not None and not Path(p).is_file():
            raise UsageError(f"file not found: {p}")
    if (args.h_hat is None) != (args.h_true is None):
        raise UsageError("give both --h-hat and --h-true, or neither")
    x_hat, x_true = io.read_image(args.x_hat), io.read_image(args.x_true)
    if x_hat.shape != x_true.shape:
        raise UsageError(f"image shapes differ: {x_hat.shape} vs {x_true.shape}")
    h_hat = h_true = None
    if args.h_hat:
        h_hat, h_true = io.read_kernel(args.h_hat), io.read_kernel(args.h_true)
        if h_hat.shape != h_true.shape:
            raise UsageError(f"kernel sizes differ: {h_hat.shape} vs {h_true.shape}")
    rep = evaluate_pair(x_hat, x_true, h_hat, h_true, align=not args.no_align).as_dict()
    if args.format == "json":
        print(json.dumps(rep, sort_keys=True))
    else:
        print(",".join(rep))
        print(",".join(str(v) if isinstance(v, int) else _num(v) for v in rep.values()))
    return EXIT_OK


# --- bench ------------------------------------------------------------------------

INIT_ONLY = "init_only"


def variant_overrides(name, base):
    """BlindConfig for a named ablation variant.

    ``full``, ``init_only``, ``no_denoiser``, ``no_l1``, ``strict``,
    ``gamma=<v>``, ``iters=<n>``, ``solver=<method>``.
    """
    if name == "full":
        return base
    if name == INIT_ONLY:
        return base
    if name == "no_denoiser":
        return replace(base, denoiser_enabled=False)
    if name == "no_l1":
        return replace(base, l1_enabled=False)
    if name == "strict":
        return replace(base, backtracking=False)
    key, _, value = name.partition("=")
    try:
        if key == "gamma":
            return replace(base, gamma0=float(value))
        if key == "iters":
            return replace(base, max_iterations=int(value))
        if key == "solver" and value in SOLVERS:
            return replace(base, solver=replace(base.solver, method=value))
    except ValueError:
        pass
    raise UsageError(f"unknown bench variant {name!r}")


def cell_seed(seed, i_img, i_alpha, i_kernel):
    return int(np.random.SeedSequence([seed, i_img, i_alpha, i_kernel]).generate_state(1)[0])


BENCH_COLUMNS = ["image", "alpha", "kernel", "variant", "seed", "psnr", "ssim",
                 "kernel_mae", "final_loss", "iterations"]


def _bench_row(img_name, alpha, kspec, variant, seed, x_est, x, h_est, h, loss, iters):
    m = evaluate_pair(x_est, x, h_est, h).as_dict()
    return [img_name, _num(alpha), kspec, variant, seed, _num(m["psnr"]), _num(m["ssim"]),
            _num(m["kernel_mae"]), _num(loss), iters]


def _bench_cell(exp, cell, out):
    (i_img, img_name), (i_a, alpha), (i_k, kspec), variants = cell
    seed = cell_seed(exp.seed, i_img, i_a, i_k)
    x = _load_latent(img_name, exp.seed + i_img)
    h = _load_kernel(kspec, exp.blind.kernel_size)
    y = simulate(x, h, alpha, seed)
    rows = []
    for variant in variants:
        cfg = variant_overrides(variant, exp.blind)
        if variant == INIT_ONLY:
            target, h_est, x_est, _ = initialize(y, alpha, cfg)
            loss = loss_value(y, target, h_est, alpha, cfg.solver)
            rows.append(_bench_row(img_name, alpha, kspec, variant, seed, x_est, x, h_est, h,
                                   loss, 0))
            continue
        try:
            rep = run(y, alpha, cfg, reference=x)
            h_est, x_est, loss, iters = (rep.final_kernel, rep.final_image,
                                         rep.losses[-1], len(rep.per_iteration) - 1)
        except BlindRunAborted as exc:
            rep = exc.report
            h_est, x_est, loss, iters = (rep.final_kernel, rep.final_image,
                                         np.nan, len(rep.per_iteration) - 1)
        rows.append(_bench_row(img_name, alpha, kspec, variant, seed, x_est, x, h_est, h,
                               loss, iters))
        tag = f"img{i_img}_a{_num(alpha)}_k{i_k}_{variant}".replace("=", "-").replace(":", "-")
        if exp.emit_images:
            io.write_image(out / f"{tag}_x.png", x_est)
        if exp.emit_kernels:
            io.write_kernel(out / f"{tag}_h.txt", h_est)
        if exp.emit_curves:
            write_loss_csv(out / f"{tag}_loss.csv", rep)
    return rows


def bench_table(exp, threads=1):
    """All benchmark rows, sorted by (image, alpha, kernel, variant).

    Every cell also gets an ``init_only`` row: the initial kernel and its
    non-blind estimate without any blind iteration.
    """
    variants = list(dict.fromkeys(list(exp.variants) + [INIT_ONLY]))
    for v in variants:
        variant_overrides(v, exp.blind)
    inputs = exp.inputs or ["chart"]
    out = Path(exp.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [((i, img), (j, float(a)), (k, ks), variants)
             for i, img in enumerate(inputs)
             for j, a in enumerate(exp.alphas)
             for k, ks in enumerate(exp.kernels)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _bench_cell(exp, c, out), cells))
    else:
        parts = [_bench_cell(exp, c, out) for c in cells]
    rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: (r[0], float(r[1]), r[2], r[3]))
    return rows


def cmd_bench(args):
    exp = _load_experiment(args.config)
    exp.blind = _resolve_blind(args, exp.blind)
    if args.inputs:
        exp.inputs = args.inputs
    if args.alphas:
        exp.alphas = args.alphas
    if args.kernels:
        exp.kernels = args.kernels
    if args.variants:
        exp.variants = args.variants
    if args.seed is not None:
        exp.seed = args.seed
    if args.out:
        exp.out_dir = args.out
    for img in exp.inputs:
        if not img.startswith("chart") and not Path(img).is_file():
            raise UsageError(f"input image not found: {img}")
    rows = bench_table(exp, thread_count())
    out = Path(exp.out_dir)
    exp.save(out / "experiment.txt")
    if exp.emit_csv:
        with open(out / "bench.csv", "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(BENCH_COLUMNS)
            w.writerows(rows)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    w.writerows(rows)
    return EXIT_OK


# --- parser ------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="photonblind",
                                description="Blind deconvolution of photon-limited images.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="blur and Poisson-sample a latent image")
    s.add_argument("--image", required=True,
                   help="latent image (.png/.pgm/.txt) or chart[:size]")
    s.add_argument("--kernel", required=True,
                   help="kernel file or spec: delta[:M], gauss:smaj,smin,deg, motion:len,deg")
    s.add_argument("--kernel-size", type=int, default=None)
    s.add_argument("--alpha", type=float, required=True, help="photon level")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--boundary", choices=("circular", "symmetric"), default="circular")
    s.add_argument("--counts-format", choices=("png", "pgm", "txt"), default="png",
                   help="container for the counts; png and pgm hold at most 65535")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("deblur", help="estimate kernel and image from counts")
    d.add_argument("--y", required=True, help="observed counts (.png/.pgm/.txt)")
    d.add_argument("--alpha", type=float, default=None,
                   help="photon level (estimated from the counts if omitted)")
    d.add_argument("--config", default=None, help="key=value experiment config")
    d.add_argument("--reference", default=None, help="ground truth for the PSNR column")
    d.add_argument("--out", required=True, help="output directory")
    _add_blind_flags(d)
    d.set_defaults(func=cmd_deblur)

    g = sub.add_parser("grad-check", help="finite-difference check of the kernel gradient")
    g.add_argument("--n", type=int, default=50, help="number of random instances")
    g.add_argument("--size", type=int, default=24, help="largest image side")
    g.add_argument("--kernel-size", type=int, default=7, help="largest kernel side")
    g.add_argument("--steps", type=int, default=4, help="largest unroll count K")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--solver", choices=sorted(SOLVERS), default="richardson_lucy")
    g.add_argument("--boundary", choices=("circular", "symmetric"), default="circular")
    g.add_argument("--tol", type=float, default=1e-4)
    g.set_defaults(func=cmd_grad_check)

    e = sub.add_parser("evaluate", help="PSNR, SSIM and kernel MAE")
    e.add_argument("--x-hat", required=True)
    e.add_argument("--x-true", required=True)
    e.add_argument("--h-hat", default=None)
    e.add_argument("--h-true", default=None)
    e.add_argument("--no-align", action="store_true", help="skip the shift alignment of the MAE")
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="sweep photon levels, kernels and ablation variants")
    b.add_argument("--config", default=None, help="key=value experiment config")
    b.add_argument("--inputs", nargs="+", default=None, help="images or chart[:size]")
    b.add_argument("--alphas", nargs="+", type=float, default=None)
    b.add_argument("--kernels", nargs="+", default=None)
    b.add_argument("--variants", nargs="+", default=None,
                   help="full, no_denoiser, no_l1, strict, gamma=V, iters=N, solver=NAME")
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--out", default=None, help="output directory")
    _add_blind_flags(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, io.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateKernelError, DegenerateInputError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
