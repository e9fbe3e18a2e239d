"""Image I/O, synthetic data, metrics, and curve export."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError, ShapeError
from .penalty import Kind, PenaltySpec, mcp_convex_part, penalty_deriv, penalty_value
from .prox import prox

__all__ = [
    "ImageGrid",
    "MetricsReport",
    "read_pgm",
    "write_pgm",
    "read_image",
    "write_image",
    "add_noise",
    "metrics",
    "make_phantom",
    "export_curves",
    "curve_table",
]


@dataclass(frozen=True)
class ImageGrid:
    """Grayscale raster; ``samples`` has shape ``(height, width)``."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.ascontiguousarray(self.samples, dtype=float)
        if s.ndim != 2 or s.size == 0:
            raise ShapeError(f"image must be a non-empty 2-D array, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ParameterError("image samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def shape(self):
        return self.samples.shape

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)


def _samples(img):
    return img.samples if isinstance(img, ImageGrid) else np.asarray(img, dtype=float)


# --- PGM -------------------------------------------------------------------

_WS = b" \t\r\n\v\f"


def _header_tokens(data, count):
    """Return ``count`` header tokens and the offset of the raster."""
    pos, tokens = 0, []
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise FormatError("truncated header", pos)
        start = pos
        while pos < n and data[pos] not in _WS:
            pos += 1
        tokens.append((data[start:pos], start))
    if pos >= n:
        raise FormatError("missing raster", pos)
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_pgm(path) -> ImageGrid:
    """Read a binary (P5) PGM with 8- or 16-bit samples scaled to ``[0, 1]``."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise FormatError(f"bad magic {data[:2]!r}, expected b'P5'", 0)
    tokens, off = _header_tokens(data, 4)
    vals = []
    for tok, at in tokens[1:]:
        try:
            vals.append(int(tok))
        except ValueError:
            raise FormatError(f"bad header field {tok!r}", at) from None
    width, height, maxval = vals
    if width <= 0 or height <= 0:
        raise FormatError(f"bad dimensions {width}x{height}", tokens[1][1])
    if not 0 < maxval < 65536:
        raise FormatError(f"bad maxval {maxval}", tokens[3][1])
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    if len(data) - off < need:
        raise FormatError(f"truncated raster: need {need} bytes, have {len(data) - off}", len(data))
    raw = np.frombuffer(data, dtype=dtype, count=width * height, offset=off)
    if raw.max(initial=0) > maxval:
        bad = int(np.argmax(raw > maxval))
        raise FormatError(f"sample exceeds maxval {maxval}", off + bad * dtype.itemsize)
    return ImageGrid(raw.reshape(height, width).astype(float) / maxval)


def write_pgm(img, path, maxval: int = 65535):
    """Write a binary PGM (16-bit by default); samples are clipped to ``[0, 1]``."""
    s = _samples(img)
    if s.ndim != 2:
        raise ShapeError("write_pgm needs a 2-D image")
    if not 0 < maxval < 65536:
        raise ParameterError(f"maxval must be in [1, 65535], got {maxval}")
    q = np.rint(np.clip(s, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{s.shape[1]} {s.shape[0]}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(q.astype(dtype).tobytes())


def read_image(path) -> ImageGrid:
    """Read ``.npy`` (float64, exact) or PGM depending on the suffix."""
    if str(path).endswith(".npy"):
        return ImageGrid(np.load(path, allow_pickle=False))
    return read_pgm(path)


def write_image(img, path):
    """Write ``.npy`` (exact float64, any range) or 16-bit PGM."""
    if str(path).endswith(".npy"):
        np.save(path, np.asarray(_samples(img), dtype=float), allow_pickle=False)
    else:
        write_pgm(img, path)


# --- synthetic data ---------------------------------------------------------

def add_noise(img, sigma: float, seed: int) -> ImageGrid:
    """Add i.i.d. Gaussian noise of std ``sigma`` and clamp to ``[0, 1]``.

    The noise comes from ``numpy.random.default_rng(seed)`` (PCG64) via
    ``standard_normal``, so equal seeds give equal outputs.
    """
    if not 0 < sigma < 1:
        raise ParameterError(f"sigma must lie in (0, 1), got {sigma!r}")
    s = _samples(img)
    rng = np.random.default_rng(seed)
    return ImageGrid(np.clip(s + sigma * rng.standard_normal(s.shape), 0.0, 1.0))


def make_phantom(size: int = 128) -> ImageGrid:
    """Piecewise-constant blocks and a disc over a smooth horizontal ramp."""
    if size < 8:
        raise ParameterError("phantom size must be at least 8")
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = 0.2 + 0.3 * xx
    n = size
    img[int(0.15 * n):int(0.45 * n), int(0.12 * n):int(0.55 * n)] = 0.8
    img[int(0.55 * n):int(0.85 * n), int(0.30 * n):int(0.78 * n)] = 0.45
    img[(yy - 0.3) ** 2 + (xx - 0.75) ** 2 < 0.02] = 0.65
    img[int(0.62 * n):int(0.75 * n), int(0.05 * n):int(0.2 * n)] = 0.1
    return ImageGrid(np.clip(img, 0.0, 1.0))


# --- metrics ----------------------------------------------------------------

@dataclass(frozen=True)
class MetricsReport:
    mse: float
    psnr: float
    residual_energy: float

    def lines(self):
        return [f"mse={self.mse!r}", f"psnr={self.psnr!r}", f"residual_energy={self.residual_energy!r}"]


def metrics(ref, test) -> MetricsReport:
    """MSE, PSNR (peak 1.0; ``inf`` for identical images) and ``||ref - test||^2``."""
    a, b = _samples(ref), _samples(test)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    energy = float(np.vdot(d, d))
    mse = energy / d.size
    psnr = math.inf if mse == 0 else 10.0 * math.log10(1.0 / mse)
    return MetricsReport(mse, psnr, energy)


# --- curves -----------------------------------------------------------------

def curve_table(spec: PenaltySpec, x_min: float, x_max: float, n: int):
    """Columns of the penalty curves as ``(names, 2-D array)``."""
    if n < 2:
        raise ParameterError("need n >= 2 samples")
    if not x_min < x_max:
        raise ParameterError("need x_min < x_max")
    xs = np.linspace(x_min, x_max, n)
    cols = {
        "x": xs,
        "value": penalty_value(xs, spec),
        "deriv": penalty_deriv(xs, spec),
        "prox": prox(xs, spec),
    }
    if spec.kind is Kind.MCP:
        cols["convex_part"] = mcp_convex_part(xs, spec)
        cols["quadratic_part"] = xs * xs / (2.0 * spec.gamma)
    return list(cols), np.column_stack(list(cols.values()))


def export_curves(spec: PenaltySpec, x_range, n: int, path):
    """Write the curve table to CSV with a header row.

    Numbers are written with ``repr`` (shortest round-trip form), which does
    not depend on the locale.
    """
    names, table = curve_table(spec, float(x_range[0]), float(x_range[1]), n)
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in table:
            # + 0.0 folds -0.0 into 0.0
            w.writerow([repr(float(v) + 0.0) for v in row])
    return os.fspath(path)
