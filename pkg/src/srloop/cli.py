"""Command-line entry points.

Subcommands:
  gen-lr         degrade a ground-truth directory at one scale
  run            open- vs closed-loop benchmark over scales, with table,
                 per-image rows, figures and optional difference images
  metrics        standalone PSNR/SSIM/difference of two images
  lab simulate   linear-plant error-norm simulation (CSV + figure)
  lab interval   admissible-gain interval of a random or explicit plant
  lab reason     per-stage prediction-success figures

Exit codes: 0 success, 1 hard failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, lab, plots
from .backend import BackendSpec
from .gain import exact_stats, solve_lambda_interval
from .image import ImageBuffer, read_image, write_image
from .loop import LoopConfig
from .metrics import diff_first, diff_second_logical, psnr, ssim


class ConfigError(Exception):
    pass


def _parse_scales(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"bad scale list {text!r}") from None


def _parse_lambda(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"lambda must be 'auto' or a number, got {text!r}") from None


def _read_config_file(path: str) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment; CLI flags win."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srloop")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-lr", help="degrade ground truth to LR inputs")
    p_gen.add_argument("--gt-dir", required=True)
    p_gen.add_argument("--scale", type=float, required=True)
    p_gen.add_argument("--out-dir", required=True)

    p_run = sub.add_parser("run", help="benchmark open vs closed loop")
    p_run.add_argument("--config", help="flat key=value file; CLI flags override")
    p_run.add_argument("--gt-dir")
    p_run.add_argument("--lr-dir")
    p_run.add_argument("--scales")
    p_run.add_argument("--backend",
                       help='bicubic|bilinear|nearest|lanczos3|external:"CMD"')
    p_run.add_argument("--iters", type=int)
    p_run.add_argument("--lambda", dest="lam")
    p_run.add_argument("--delta-t", type=float)
    p_run.add_argument("--probes", type=int)
    p_run.add_argument("--eps", type=float)
    p_run.add_argument("--init", choices=("lr", "zero"))
    p_run.add_argument("--clamp", choices=("auto", "on", "off"))
    p_run.add_argument("--emit-diffs", action="store_true")
    p_run.add_argument("--table", choices=("csv", "md"))
    p_run.add_argument("--out-dir")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--jobs", type=int)
    p_run.add_argument("--no-figures", action="store_true")

    p_met = sub.add_parser("metrics", help="PSNR/SSIM/diff of two images")
    p_met.add_argument("--a", required=True)
    p_met.add_argument("--b", required=True)
    p_met.add_argument("--diff-out", help="write |a-b| as a PNG")
    p_met.add_argument("--diff2-out", help="write the positive part of |a-gt|-|b-gt| "
                                           "style comparison of two diff images")

    p_lab = sub.add_parser("lab", help="linear stability testbed")
    lab_sub = p_lab.add_subparsers(dest="lab_command", required=True)

    p_sim = lab_sub.add_parser("simulate", help="error-norm sequence of a linear loop")
    p_sim.add_argument("--dim", type=int, default=8)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--lambda", dest="lam", default="auto")
    p_sim.add_argument("--delta-t", type=float, default=1.0)
    p_sim.add_argument("--steps", type=int, default=50)
    p_sim.add_argument("--out", help="CSV path for (step, norm)")
    p_sim.add_argument("--plot", help="figure path")

    p_int = lab_sub.add_parser("interval", help="admissible gain interval")
    p_int.add_argument("--dim", type=int, default=8)
    p_int.add_argument("--seed", type=int, default=0)
    p_int.add_argument("--delta-t", type=float, default=1.0)
    p_int.add_argument("--grid", type=int, default=512)

    p_rea = lab_sub.add_parser("reason", help="stage prediction-success figures")
    p_rea.add_argument("--d", type=int, required=True)
    p_rea.add_argument("--big-d", "--D", dest="big_d", type=int, required=True)
    p_rea.add_argument("--w", type=float, required=True)
    return parser


def _cmd_gen_lr(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = harness._discover_images(args.gt_dir)
    for stem, path in images:
        gt = read_image(path)
        lr, _ = harness.gen_lr(gt, args.scale)
        write_image(lr, out_dir / f"{stem}_x{args.scale:g}.png", "png8")
        print(f"{stem}: {gt.height}x{gt.width} -> {lr.height}x{lr.width}")
    return 0


def _run_config(args) -> harness.RunConfig:
    filecfg = _read_config_file(args.config) if args.config else {}

    def pick(flag_value, key, default):
        # precedence: CLI flag, then config file, then built-in default
        if flag_value is not None:
            return flag_value
        if key in filecfg:
            return filecfg[key]
        return default

    clamp_flag = str(pick(args.clamp, "clamp", "auto"))
    clamp = None if clamp_flag == "auto" else clamp_flag == "on"
    try:
        loop_cfg = LoopConfig(
            iterations=int(pick(args.iters, "iters", 10)),
            lambda_mode=_parse_lambda(str(pick(args.lam, "lambda", "auto"))),
            delta_t=float(pick(args.delta_t, "delta_t", 1.0)),
            probes=int(pick(args.probes, "probes", 8)),
            probe_step=float(pick(args.eps, "eps", 1e-3)),
            clamp_preposition=clamp,
            init_mode=str(pick(args.init, "init", "lr")),
        )
        return harness.RunConfig(
            gt_dir=pick(args.gt_dir, "gt_dir", None),
            lr_dir=pick(args.lr_dir, "lr_dir", None),
            out_dir=str(pick(args.out_dir, "out_dir", "srloop_out")),
            scales=_parse_scales(str(pick(args.scales, "scales", "2.0"))),
            backend=BackendSpec.parse(str(pick(args.backend, "backend", "bicubic"))),
            loop=loop_cfg,
            emit_diffs=bool(args.emit_diffs or filecfg.get("emit_diffs") == "true"),
            table_format=str(pick(args.table, "table", "csv")),
            parallelism=int(pick(args.jobs, "jobs", 1)),
            seed=int(pick(args.seed, "seed", 0)),
            figures=not args.no_figures,
        )
    except (harness.HarnessError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_run(args) -> int:
    cfg = _run_config(args)
    if cfg.gt_dir is None:
        raise ConfigError("run needs --gt-dir (metrics are computed against GT)")
    result = harness.run_benchmark(cfg)
    out_dir = Path(cfg.out_dir)
    ext = "csv" if cfg.table_format == "csv" else "md"
    table_path = out_dir / f"table.{ext}"
    harness.emit_table(result.table, cfg.table_format, table_path)
    harness.emit_rows_csv(result.rows, out_dir / "per_image.csv")
    harness.write_metadata(cfg, out_dir / "run_meta.txt")
    if cfg.figures:
        fig_dir = out_dir / "figures"
        fig_dir.mkdir(parents=True, exist_ok=True)
        plots.plot_increment_curves(result.table, fig_dir / "increments.png")
        plots.plot_quality_curves(result.table, fig_dir / "psnr_vs_scale.png")
        plots.plot_convergence(result.traces, fig_dir / "convergence.png")
    for line in harness.table_lines(result.table, cfg.table_format):
        print(line)
    for stem, f, err in result.failures:
        print(f"warning: {stem} at x{f:g} failed: {err}", file=sys.stderr)
    print(f"wrote {table_path}")
    return 0


def _cmd_metrics(args) -> int:
    a = read_image(args.a)
    b = read_image(args.b)
    print(f"psnr = {psnr(a, b):.4f}")
    try:
        print(f"ssim = {ssim(a, b):.4f}")
    except ValueError as exc:
        print(f"ssim = n/a ({exc})")
    if args.diff_out:
        write_image(diff_first(a, b), args.diff_out, "png8")
        print(f"wrote {args.diff_out}")
    if args.diff2_out:
        write_image(diff_second_logical(diff_first(a, b), diff_first(b, a)),
                    args.diff2_out, "png8")
        print(f"wrote {args.diff2_out}")
    return 0


def _random_plant(dim: int, seed: int) -> lab.LinearPlant:
    rng = np.random.default_rng(seed)
    gamma = np.eye(dim) + 0.3 * rng.standard_normal((dim, dim)) / np.sqrt(dim)
    return lab.LinearPlant(gamma)


def _cmd_lab(args) -> int:
    if args.lab_command == "simulate":
        plant = _random_plant(args.dim, args.seed)
        solution = solve_lambda_interval(exact_stats(plant.gamma), args.delta_t)
        lam = solution.lambda_star if args.lam == "auto" else float(args.lam)
        rng = np.random.default_rng(args.seed + 1)
        e0 = rng.standard_normal(args.dim)
        norms = lab.simulate_linear_loop(plant, lam, args.delta_t, args.steps, e0)
        print(f"lambda = {lam:.6f}  "
              f"iteration-matrix norm = {lab.iteration_norm(plant, lam, args.delta_t):.6f}")
        print(f"norms: {norms[0]:.6g} -> {norms[-1]:.6g} over {args.steps} steps")
        if args.out:
            lab.write_norm_csv(args.out, norms)
            print(f"wrote {args.out}")
        if args.plot:
            plots.plot_norm_sequences({f"dim={args.dim}": list(norms)}, args.plot)
            print(f"wrote {args.plot}")
        return 0
    if args.lab_command == "interval":
        plant = _random_plant(args.dim, args.seed)
        solved = solve_lambda_interval(exact_stats(plant.gamma), args.delta_t)
        oracle = lab.frobenius_interval_oracle(plant, args.delta_t, args.grid)
        if solved.guaranteed:
            print(f"solved  : ({solved.lambda_lo:.9f}, {solved.lambda_hi:.9f})  "
                  f"lambda* = {solved.lambda_star:.9f}")
        else:
            print(f"solved  : no guaranteed interval; best effort "
                  f"lambda* = {solved.lambda_star:.9f}")
        if oracle is None:
            print("oracle  : empty")
        else:
            print(f"oracle  : ({oracle[0]:.9f}, {oracle[1]:.9f})")
        return 0
    if args.lab_command == "reason":
        report = lab.reasonability_report(args.d, args.big_d, args.w)
        print(f"P(preposition|error)  = {report.p_preposition:.6g}")
        print(f"P(upscale|preposition) = {report.p_upscale:.6g}")
        print(f"P(degrade|upscale)     = {report.p_degrade:.6g}")
        print(f"ordering holds: {report.holds}")
        return 0 if report.holds else 1
    raise ConfigError(f"unknown lab command {args.lab_command!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen-lr":
            return _cmd_gen_lr(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "lab":
            return _cmd_lab(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
