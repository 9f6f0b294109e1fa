"""Dataset-level benchmark driver.

For every (image, scale) pair: synthesize the LR input by degrading the
ground truth (or load it from a prepared LR directory), run the
single-pass baseline and the feedback loop, score both against the
ground truth and aggregate per scale into a table with Mean and Max
summary rows. LR provenance is the leading cause of cross-benchmark
PSNR disagreement, so the degradation convention is written into the
run metadata.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .backend import BackendSpec, probe_backend
from .image import ImageBuffer, ScaleSpec, read_image, write_image
from .loop import LoopConfig, LoopTrace, open_loop, run_loop
from .metrics import Aggregate, MetricRow, aggregate, diff_first, diff_second_logical, psnr, ssim
from .resample import degrade

TABLE_COLUMNS = ("scale", "psnr_o", "psnr_c", "dpsnr_a", "dpsnr_m",
                 "ssim_o", "ssim_c", "dssim_a", "dssim_m")


class HarnessError(Exception):
    """Configuration problems or fully failed scales."""


@dataclass(frozen=True)
class RunConfig:
    gt_dir: Optional[str] = None
    lr_dir: Optional[str] = None
    out_dir: str = "srloop_out"
    scales: tuple[float, ...] = (2.0,)
    backend: BackendSpec = field(default_factory=BackendSpec.builtin)
    loop: LoopConfig = field(default_factory=LoopConfig)
    emit_diffs: bool = False
    table_format: str = "csv"
    parallelism: int = 1
    seed: int = 0
    figures: bool = True

    def __post_init__(self):
        if self.gt_dir is None and self.lr_dir is None:
            raise HarnessError("need at least one of gt_dir / lr_dir")
        if not self.scales:
            raise HarnessError("need at least one scale")
        if any(f <= 1.0 for f in self.scales):
            raise HarnessError(f"scales must be > 1, got {self.scales}")
        if self.table_format not in ("csv", "markdown", "md"):
            raise HarnessError(f"unknown table format {self.table_format!r}")
        if self.parallelism < 1:
            raise HarnessError(f"parallelism must be >= 1, got {self.parallelism}")


def gen_lr(gt: ImageBuffer, f: float) -> tuple[ImageBuffer, ScaleSpec]:
    """Degrade a ground-truth image by factor ``f``.

    LR dims are ``max(1, round(dim / f))`` with half-away-from-zero
    rounding; the returned target carries the exact GT dims so the
    upscaler is never asked to re-derive them from the factor.
    """
    if f <= 1.0:
        raise HarnessError(f"scale factor must be > 1, got {f}")
    m = max(1, int(math.floor(gt.height / f + 0.5)))
    n = max(1, int(math.floor(gt.width / f + 0.5)))
    lr = degrade(gt, m, n)
    return lr, ScaleSpec(f, gt.height, gt.width)


@dataclass(frozen=True)
class ScaleTableRow:
    scale: float
    agg: Aggregate


@dataclass
class BenchmarkResult:
    rows: list[MetricRow]
    table: list[ScaleTableRow]
    traces: dict[tuple[str, float], LoopTrace]
    failures: list[tuple[str, float, str]]


def _discover_images(gt_dir: str) -> list[tuple[str, Path]]:
    root = Path(gt_dir)
    if not root.is_dir():
        raise HarnessError(f"ground-truth directory not found: {root}")
    paths = sorted(p for p in root.iterdir()
                   if p.suffix.lower() in (".png", ".csr1"))
    if not paths:
        raise HarnessError(f"no .png/.csr1 images in {root}")
    return [(p.stem, p) for p in paths]


def _lr_path(lr_dir: str, stem: str, f: float) -> Optional[Path]:
    root = Path(lr_dir)
    for candidate in (root / f"{stem}_x{f:g}.png", root / f"{stem}.png",
                      root / f"{stem}_x{f:g}.csr1", root / f"{stem}.csr1"):
        if candidate.is_file():
            return candidate
    return None


def _task_seed(seed: int, stem: str, f: float) -> int:
    return seed + zlib.crc32(f"{stem}:{f:.6f}".encode())


def _run_pair(cfg: RunConfig, stem: str, gt: ImageBuffer, f: float):
    if cfg.lr_dir is not None:
        found = _lr_path(cfg.lr_dir, stem, f)
        if found is None:
            raise HarnessError(f"no LR file for {stem} at scale {f} in {cfg.lr_dir}")
        lr = read_image(found)
        target = ScaleSpec(f, gt.height, gt.width)
    else:
        lr, target = gen_lr(gt, f)
    loop_cfg = replace(cfg.loop, probe_seed=_task_seed(cfg.seed, stem, f))
    sr_open = open_loop(lr, target, cfg.backend)
    sr_closed, trace = run_loop(lr, target, cfg.backend, loop_cfg, gt=gt)
    row = MetricRow(
        image_id=stem,
        scale=f,
        psnr_o=psnr(sr_open, gt),
        psnr_c=psnr(sr_closed, gt),
        ssim_o=ssim(sr_open, gt),
        ssim_c=ssim(sr_closed, gt),
    )
    return row, trace, sr_open, sr_closed


def run_benchmark(cfg: RunConfig) -> BenchmarkResult:
    """Execute the full grid and build the per-scale table.

    Per-image failures are recorded and skipped; a scale with no
    surviving image aborts the run with a summary.
    """
    if cfg.gt_dir is None:
        raise HarnessError("run_benchmark needs gt_dir (metrics are GT-relative)")
    report = probe_backend(cfg.backend)
    if not report.ok:
        raise HarnessError(f"backend probe failed: {report.message}")

    images = _discover_images(cfg.gt_dir)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(stem, path, f) for f in cfg.scales for stem, path in images]

    def work(task):
        stem, path, f = task
        try:
            gt = read_image(path)
            row, trace, sr_open, sr_closed = _run_pair(cfg, stem, gt, f)
        except Exception as exc:
            return (stem, f, None, None, str(exc))
        if cfg.emit_diffs:
            _write_diffs(out_dir, stem, f, gt, sr_open, sr_closed)
        return (stem, f, row, trace, None)

    if cfg.parallelism > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            outcomes = list(pool.map(work, tasks))
    else:
        outcomes = [work(t) for t in tasks]

    rows: list[MetricRow] = []
    traces: dict[tuple[str, float], LoopTrace] = {}
    failures: list[tuple[str, float, str]] = []
    for stem, f, row, trace, err in sorted(outcomes, key=lambda o: (o[1], o[0])):
        if err is not None:
            failures.append((stem, f, err))
            continue
        rows.append(row)
        traces[(stem, f)] = trace

    table = []
    for f in cfg.scales:
        at_scale = [r for r in rows if r.scale == f]
        if not at_scale:
            failed = [(s, e) for s, sf, e in failures if sf == f]
            raise HarnessError(
                f"every image failed at scale {f}: {failed}")
        table.append(ScaleTableRow(scale=f, agg=aggregate(at_scale)))
    return BenchmarkResult(rows=rows, table=table, traces=traces, failures=failures)


def _write_diffs(out_dir: Path, stem: str, f: float, gt: ImageBuffer,
                 sr_open: ImageBuffer, sr_closed: ImageBuffer) -> None:
    diff_dir = out_dir / "diffs"
    diff_dir.mkdir(parents=True, exist_ok=True)
    d_open = diff_first(sr_open, gt)
    d_closed = diff_first(sr_closed, gt)
    # positive part of (open - closed): where the single pass errs more
    d_second = diff_second_logical(d_open, d_closed)
    base = f"{stem}_x{f:g}"
    write_image(d_open, diff_dir / f"{base}_diff_open.png", "png8")
    write_image(d_closed, diff_dir / f"{base}_diff_closed.png", "png8")
    write_image(d_second, diff_dir / f"{base}_diff2_open_minus_closed.png", "png8")


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.4f}"


def table_lines(table: list[ScaleTableRow], fmt: str) -> list[str]:
    """Render the per-scale table plus Mean and Max rows."""
    if not table:
        raise HarnessError("empty table")
    body = []
    for row in table:
        a = row.agg
        body.append([_fmt(row.scale), _fmt(a.psnr_o), _fmt(a.psnr_c),
                     _fmt(a.dpsnr_a), _fmt(a.dpsnr_m), _fmt(a.ssim_o),
                     _fmt(a.ssim_c), _fmt(a.dssim_a), _fmt(a.dssim_m)])
    columns = list(zip(*[[float(v) for v in line] for line in body]))
    mean = ["Mean"] + [_fmt(sum(col) / len(col)) for col in columns[1:]]
    peak = ["Max"] + [_fmt(max(col)) for col in columns[1:]]
    rows = [list(TABLE_COLUMNS)] + body + [mean, peak]
    if fmt == "csv":
        return [",".join(line) for line in rows]
    if fmt in ("markdown", "md"):
        out = ["| " + " | ".join(rows[0]) + " |",
               "|" + "|".join([" --- "] * len(rows[0])) + "|"]
        out += ["| " + " | ".join(line) + " |" for line in rows[1:]]
        return out
    raise HarnessError(f"unknown table format {fmt!r}")


def emit_table(table: list[ScaleTableRow], fmt: str, path) -> None:
    """Deterministic serialization, 4-decimal reals, 'inf' literal allowed."""
    Path(path).write_text("\n".join(table_lines(table, fmt)) + "\n")


def emit_rows_csv(rows: list[MetricRow], path) -> None:
    lines = ["image,scale,psnr_o,psnr_c,dpsnr,ssim_o,ssim_c,dssim"]
    for r in rows:
        lines.append(",".join([
            r.image_id, _fmt(r.scale), _fmt(r.psnr_o), _fmt(r.psnr_c),
            _fmt(r.dpsnr), _fmt(r.ssim_o), _fmt(r.ssim_c), _fmt(r.dssim)]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_metadata(cfg: RunConfig, path) -> None:
    lines = [
        f"backend = {cfg.backend.describe()}",
        "degradation = bicubic (Keys a=-0.5), anti-aliased, pixel-center aligned, "
        "replicate edges",
        "lr_rule = max(1, round_half_away(gt_dim / scale))",
        f"scales = {','.join(f'{f:g}' for f in cfg.scales)}",
        f"iterations = {cfg.loop.iterations}",
        f"lambda = {cfg.loop.lambda_mode}",
        f"delta_t = {cfg.loop.delta_t:g}",
        f"probes = {cfg.loop.probes}",
        f"probe_step = {cfg.loop.probe_step:g}",
        f"init = {cfg.loop.init_mode}",
        f"seed = {cfg.seed}",
        "metric_space = RGB float in [0,1], no quantization before measuring",
    ]
    Path(path).write_text("\n".join(lines) + "\n")
