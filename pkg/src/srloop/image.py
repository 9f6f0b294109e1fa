"""Image buffer type and file I/O.

Images are carried as unit-interval float64 rasters in HWC layout
(height x width x channels, row-major, channel-interleaved). Two on-disk
formats are supported:

* PNG, 8- or 16-bit, gray or RGB, via OpenCV. Values are mapped to [0, 1]
  on read (v/255 or v/65535) and quantized round-half-up on write.
* CSR1, a raw float exchange format used to move images across a process
  boundary without quantization loss. Layout (little-endian throughout):
  magic bytes ``CSR1``, three uint32 (height, width, channels), then
  height*width*channels IEEE-754 binary32 samples, row-major,
  channel-interleaved. No padding, no trailing data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

CSR1_MAGIC = b"CSR1"
_CSR1_HEADER = struct.Struct("<4sIII")

PNG_FORMATS = ("png8", "png16")
FORMATS = PNG_FORMATS + ("csr1",)


class ImageError(Exception):
    """Raised for malformed buffers or unreadable/unwritable image files."""


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """Immutable H x W x C raster of finite float64 samples.

    Error and pre-position buffers may carry values outside [0, 1];
    range is only enforced where files are quantized.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ImageError(f"expected HxW or HxWxC samples, got shape {arr.shape}")
        if arr.shape[2] not in (1, 3):
            raise ImageError(f"unsupported channel count {arr.shape[2]} (want 1 or 3)")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ImageError(f"degenerate image dims {arr.shape[:2]}")
        if not np.all(np.isfinite(arr)):
            raise ImageError("image samples must be finite")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def dim(self) -> int:
        """Flattened sample count (height * width * channels)."""
        return self.data.size

    def clamped(self) -> "ImageBuffer":
        """Copy with samples clipped to [0, 1]."""
        return ImageBuffer(np.clip(self.data, 0.0, 1.0))

    def allclose(self, other: "ImageBuffer", tol: float = 0.0) -> bool:
        return self.data.shape == other.data.shape and bool(
            np.all(np.abs(self.data - other.data) <= tol)
        )


@dataclass(frozen=True)
class ScaleSpec:
    """Upscale request: real factor > 1 plus the authoritative target dims."""

    factor: float
    target_height: int
    target_width: int

    def __post_init__(self):
        if self.target_height < 1 or self.target_width < 1:
            raise ImageError(f"target dims must be >= 1, got "
                             f"{self.target_height}x{self.target_width}")
        if not np.isfinite(self.factor) or self.factor <= 0:
            raise ImageError(f"scale factor must be positive, got {self.factor}")


def flatten_norm(img: ImageBuffer) -> float:
    """Euclidean (2-) norm of the flattened sample vector."""
    return float(np.linalg.norm(img.data.ravel()))


def _quantize(data: np.ndarray, levels: int) -> np.ndarray:
    # clamp, then round half up; deterministic and endpoint-exact
    clipped = np.clip(data, 0.0, 1.0)
    return np.floor(clipped * levels + 0.5)


def write_image(img: ImageBuffer, path, fmt: str = "png8") -> None:
    """Write ``img`` to ``path`` as png8, png16 or csr1.

    PNG samples are clamped to [0, 1] and quantized round-half-up; CSR1
    stores binary32 samples verbatim (lossless for binary32-representable
    values).
    """
    path = Path(path)
    if fmt == "csr1":
        payload = _CSR1_HEADER.pack(CSR1_MAGIC, img.height, img.width, img.channels)
        payload += img.data.astype("<f4").tobytes()
        path.write_bytes(payload)
        return
    if fmt not in PNG_FORMATS:
        raise ImageError(f"unknown image format {fmt!r} (want one of {FORMATS})")
    if fmt == "png8":
        raster = _quantize(img.data, 255).astype(np.uint8)
    else:
        raster = _quantize(img.data, 65535).astype(np.uint16)
    if img.channels == 1:
        raster = raster[:, :, 0]
    else:
        raster = raster[:, :, ::-1]  # OpenCV writes BGR
    if not cv2.imwrite(str(path), raster):
        raise ImageError(f"failed to write {path}")


def read_image(path) -> ImageBuffer:
    """Read a PNG (8/16-bit, gray or RGB) or CSR1 file into [0, 1] floats."""
    path = Path(path)
    if not path.is_file():
        raise ImageError(f"no such image file: {path}")
    with path.open("rb") as fh:
        head = fh.read(4)
    if head == CSR1_MAGIC:
        return read_csr1(path)
    raster = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raster is None:
        raise ImageError(f"unreadable image file: {path}")
    if raster.ndim == 3:
        if raster.shape[2] != 3:
            raise ImageError(
                f"unsupported channel count {raster.shape[2]} in {path} (want gray or RGB)")
        raster = raster[:, :, ::-1]  # BGR -> RGB
    if raster.dtype == np.uint8:
        data = raster.astype(np.float64) / 255.0
    elif raster.dtype == np.uint16:
        data = raster.astype(np.float64) / 65535.0
    else:
        raise ImageError(f"unsupported bit depth {raster.dtype} in {path}")
    return ImageBuffer(data)


def read_csr1(path) -> ImageBuffer:
    """Read a CSR1 raw image, validating header and exact payload length."""
    blob = Path(path).read_bytes()
    if len(blob) < _CSR1_HEADER.size:
        raise ImageError(f"truncated CSR1 header in {path}")
    magic, height, width, channels = _CSR1_HEADER.unpack_from(blob)
    if magic != CSR1_MAGIC:
        raise ImageError(f"bad CSR1 magic {magic!r} in {path}")
    if height < 1 or width < 1 or channels not in (1, 3):
        raise ImageError(
            f"bad CSR1 dims {height}x{width}x{channels} in {path}")
    count = height * width * channels
    expected = _CSR1_HEADER.size + 4 * count
    if len(blob) != expected:
        raise ImageError(
            f"CSR1 payload length mismatch in {path}: "
            f"expected {expected} bytes, found {len(blob)}")
    samples = np.frombuffer(blob, dtype="<f4", offset=_CSR1_HEADER.size, count=count)
    if not np.all(np.isfinite(samples)):
        raise ImageError(f"non-finite samples in CSR1 file {path}")
    data = samples.astype(np.float64).reshape(height, width, channels)
    return ImageBuffer(data)
