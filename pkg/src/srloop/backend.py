"""Upscaler backends: built-in analytic kernels and external processes.

An external backend is any command that speaks the CSR1 file protocol:
the engine writes the input image as CSR1, substitutes ``{in}``,
``{out}``, ``{th}``, ``{tw}``, ``{scale}`` into the command template,
runs it, and expects a CSR1 image of exactly th x tw x C at ``{out}``
with exit status 0. Nonzero exit, timeout, malformed output or wrong
dims are all backend failures; exchange files are kept on failure for
debugging and removed on success.

Target dims are authoritative; the scale is advisory metadata (6
decimal digits), because round-tripping fractional factors through
rounding is lossy.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .image import ImageBuffer, ScaleSpec, read_csr1, write_image
from .resample import Kernel, resize

WORKDIR_ENV = "SRLOOP_WORKDIR"
DEFAULT_TIMEOUT = 300.0
PLACEHOLDERS = ("{in}", "{out}", "{th}", "{tw}", "{scale}")


class BackendError(Exception):
    """Any failure of an upscaler backend call."""


@dataclass
class BackendSpec:
    """One upscaler: a built-in kernel or an external command template."""

    kind: str  # "builtin" | "external"
    kernel: Kernel = Kernel.BICUBIC
    command: str = ""
    timeout: float = DEFAULT_TIMEOUT
    max_concurrent: int = 4
    workdir: Optional[str] = None
    _limiter: threading.Semaphore = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("builtin", "external"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.max_concurrent < 1:
            raise ValueError(f"max_concurrent must be >= 1, got {self.max_concurrent}")
        if self.kind == "external":
            missing = [p for p in PLACEHOLDERS if p not in self.command]
            if missing:
                raise ValueError(
                    f"external command template is missing placeholders: {missing}")
        self._limiter = threading.Semaphore(self.max_concurrent)

    @classmethod
    def builtin(cls, kernel: Kernel | str = Kernel.BICUBIC, **kw) -> "BackendSpec":
        kernel = kernel if isinstance(kernel, Kernel) else Kernel.parse(kernel)
        return cls(kind="builtin", kernel=kernel, **kw)

    @classmethod
    def external(cls, command: str, **kw) -> "BackendSpec":
        return cls(kind="external", command=command, **kw)

    @classmethod
    def parse(cls, text: str) -> "BackendSpec":
        """Parse a CLI backend token: a kernel name or ``external:CMD``."""
        if text.startswith("external:"):
            return cls.external(text[len("external:"):])
        return cls.builtin(Kernel.parse(text))

    def describe(self) -> str:
        return self.kernel.value if self.kind == "builtin" else f"external:{self.command}"


def _exchange_dir(spec: BackendSpec) -> Path:
    root = spec.workdir or os.environ.get(WORKDIR_ENV) or tempfile.gettempdir()
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def upscale(spec: BackendSpec, img: ImageBuffer, target: ScaleSpec) -> ImageBuffer:
    """Upscale ``img`` to exactly the target dims through the backend.

    Built-in kernels resample directly (no anti-alias widening; this is
    upscaling). External backends receive input clamped to [0, 1] and
    must honor the dims contract exactly.
    """
    if target.target_height < img.height or target.target_width < img.width:
        raise BackendError(
            f"target {target.target_height}x{target.target_width} is smaller than "
            f"input {img.height}x{img.width}")
    if spec.kind == "builtin":
        return resize(img, target.target_height, target.target_width,
                      spec.kernel, antialias=False)
    return _run_external(spec, img.clamped(), target)


def _run_external(spec: BackendSpec, img: ImageBuffer, target: ScaleSpec) -> ImageBuffer:
    exchange = _exchange_dir(spec)
    tag = uuid.uuid4().hex[:12]
    in_path = exchange / f"srloop_{tag}_in.csr1"
    out_path = exchange / f"srloop_{tag}_out.csr1"
    fields = {
        "in": str(in_path),
        "out": str(out_path),
        "th": str(target.target_height),
        "tw": str(target.target_width),
        "scale": f"{target.factor:.6f}",
    }
    # substitute per token so paths with spaces survive
    argv = [token.format_map(fields) for token in shlex.split(spec.command)]

    write_image(img, in_path, "csr1")
    with spec._limiter:
        try:
            proc = subprocess.run(
                argv, capture_output=True, timeout=spec.timeout, text=True)
        except FileNotFoundError as exc:
            raise BackendError(f"spawn error: {exc}") from exc
        except subprocess.TimeoutExpired as exc:
            raise BackendError(
                f"backend timed out after {spec.timeout}s: {argv[0]}") from exc
    if proc.returncode != 0:
        stderr = proc.stderr.strip()
        raise BackendError(
            f"backend exited with status {proc.returncode}"
            + (f": {stderr}" if stderr else ""))
    if not out_path.is_file():
        raise BackendError(f"backend produced no output file at {out_path}")
    try:
        result = read_csr1(out_path)
    except Exception as exc:
        raise BackendError(f"malformed CSR1 response: {exc}") from exc
    if (result.height, result.width) != (target.target_height, target.target_width):
        raise BackendError(
            f"dimension mismatch: requested {target.target_height}x"
            f"{target.target_width}, backend wrote {result.height}x{result.width}")
    if result.channels != img.channels:
        raise BackendError(
            f"channel mismatch: sent {img.channels}, backend wrote {result.channels}")
    in_path.unlink(missing_ok=True)
    out_path.unlink(missing_ok=True)
    return result


@dataclass(frozen=True)
class ProbeReport:
    """Start-up health check result for one backend."""

    ok: bool
    message: str
    latency_s: float
    out_height: int = 0
    out_width: int = 0
    out_min: float = 0.0
    out_max: float = 0.0


def probe_backend(spec: BackendSpec) -> ProbeReport:
    """Invoke the backend on a tiny 4x4 -> 8x8 fixture and report.

    Failures are captured into the report, not raised.
    """
    ramp = np.linspace(0.0, 1.0, 16).reshape(4, 4, 1)
    fixture = ImageBuffer(ramp)
    target = ScaleSpec(2.0, 8, 8)
    started = time.perf_counter()
    try:
        out = upscale(spec, fixture, target)
    except Exception as exc:
        return ProbeReport(ok=False, message=str(exc),
                           latency_s=time.perf_counter() - started)
    return ProbeReport(
        ok=True,
        message="ok",
        latency_s=time.perf_counter() - started,
        out_height=out.height,
        out_width=out.width,
        out_min=float(out.data.min()),
        out_max=float(out.data.max()),
    )
