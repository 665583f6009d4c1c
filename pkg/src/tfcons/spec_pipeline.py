"""Magnitude -> log -> [-1, 1] -> Nyquist-trim chain, its inverse, and the SPEC1 file format."""
from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, SpecFormatError
from .signal_io import Waveform
from .tf_transform import ComplexSpectrogram, StftConfig, stft

SCALES = ("linear", "log", "normalized")
ABSOLUTE_FLOOR = 1e-10
DEFAULT_FLOOR_DB = -100.0


@dataclass(eq=False)
class MagnitudeSpectrogram:
    """Real ``K x T`` magnitude (frequency-major).

    ``norm_params`` holds the ``(min, max)`` mapped onto [-1, 1]; ``floor_db``
    is NaN when no log stage has been applied.
    """

    values: np.ndarray
    scale: str = "linear"
    norm_params: tuple[float, float] | None = None
    floor_db: float = math.nan

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionError(f"magnitude must be 2-D, got shape {self.values.shape}")
        if self.scale not in SCALES:
            raise ValueError(f"scale must be one of {SCALES}, got {self.scale!r}")
        if self.scale == "linear" and np.any(self.values < 0):
            raise ValueError("linear magnitudes must be nonnegative")
        if self.scale == "normalized":
            if self.norm_params is None:
                raise ValueError("normalized magnitudes need norm_params")
            if np.any(np.abs(self.values) > 1.0 + 1e-12):
                raise ValueError("normalized magnitudes must lie in [-1, 1]")

    @property
    def shape(self):
        return self.values.shape

    @property
    def degenerate(self) -> bool:
        """True if normalization saw a constant matrix."""
        return self.norm_params is not None and self.norm_params[0] == self.norm_params[1]

    @property
    def norm_slope(self) -> float:
        """d(normalized)/d(pre-normalization value); 1 for unnormalized data."""
        if self.scale != "normalized" or self.degenerate:
            return 1.0
        lo, hi = self.norm_params
        return 2.0 / (hi - lo)


def magnitude(s: ComplexSpectrogram) -> MagnitudeSpectrogram:
    return MagnitudeSpectrogram(np.abs(getattr(s, "values", s)), "linear")


def to_log(m: MagnitudeSpectrogram, floor_db: float = DEFAULT_FLOOR_DB) -> MagnitudeSpectrogram:
    """Natural log, floored at ``floor_db`` below the matrix maximum."""
    if m.scale != "linear":
        raise ValueError(f"to_log expects a linear magnitude, got {m.scale}")
    peak = m.values.max(initial=0.0)
    floor = 10.0 ** (floor_db / 20.0) * peak if peak > 0 else ABSOLUTE_FLOOR
    return MagnitudeSpectrogram(np.log(np.maximum(m.values, floor)), "log", floor_db=floor_db)


def from_log(m: MagnitudeSpectrogram) -> MagnitudeSpectrogram:
    if m.scale != "log":
        raise ValueError(f"from_log expects a log magnitude, got {m.scale}")
    return MagnitudeSpectrogram(np.exp(m.values), "linear")


def normalize(m: MagnitudeSpectrogram, params: tuple[float, float] | None = None) -> MagnitudeSpectrogram:
    """Affine map of ``[min, max]`` onto [-1, 1].

    ``params`` overrides the per-matrix min/max (e.g. corpus-wide statistics);
    values outside an overriding range are clipped. A constant matrix maps
    to zeros and records ``min == max``.
    """
    if m.scale not in ("log", "linear"):
        raise ValueError(f"normalize expects log or linear input, got {m.scale}")
    lo, hi = params if params is not None else (float(m.values.min()), float(m.values.max()))
    if hi == lo:
        out = np.zeros_like(m.values)
    else:
        out = np.clip(2.0 * (m.values - lo) / (hi - lo) - 1.0, -1.0, 1.0)
    return MagnitudeSpectrogram(out, "normalized", (lo, hi), m.floor_db)


def denormalize(m: MagnitudeSpectrogram) -> MagnitudeSpectrogram:
    if m.scale != "normalized":
        raise ValueError(f"denormalize expects normalized input, got {m.scale}")
    lo, hi = m.norm_params
    values = (m.values + 1.0) * 0.5 * (hi - lo) + lo
    # floor_db is NaN when the normalized data never went through to_log
    scale = "linear" if math.isnan(m.floor_db) else "log"
    return MagnitudeSpectrogram(values, scale, None, m.floor_db)


def trim_nyquist(m: MagnitudeSpectrogram, fft_size: int | None = None) -> MagnitudeSpectrogram:
    k = m.values.shape[0]
    expected = fft_size // 2 + 1 if fft_size is not None else None
    if (expected is not None and k != expected) or k % 2 == 0:
        raise DimensionError(f"trim_nyquist needs fft_size/2 + 1 rows, got {k}")
    return replace(m, values=m.values[:-1].copy())


def restore_nyquist(m: MagnitudeSpectrogram, policy: str = "copy", fft_size: int | None = None) -> MagnitudeSpectrogram:
    """Append a Nyquist row: ``copy`` of the last row, or ``floor`` (row minimum)."""
    k = m.values.shape[0]
    if (fft_size is not None and k != fft_size // 2) or (fft_size is None and k % 2 == 1):
        raise DimensionError(f"restore_nyquist needs fft_size/2 rows, got {k}")
    if policy == "copy":
        row = m.values[-1:]
    elif policy == "floor":
        row = np.full((1, m.values.shape[1]), m.values.min())
    else:
        raise ValueError(f"unknown restore policy {policy!r}")
    return replace(m, values=np.vstack([m.values, row]))


def preprocess(w: Waveform, cfg: StftConfig = StftConfig(), floor_db: float = DEFAULT_FLOOR_DB) -> MagnitudeSpectrogram:
    """Waveform -> normalized, Nyquist-trimmed log magnitude of shape ``(fft_size/2, T)``."""
    m = to_log(magnitude(stft(w, cfg)), floor_db)
    return trim_nyquist(normalize(m), cfg.fft_size)


def postprocess(m: MagnitudeSpectrogram, policy: str = "copy") -> MagnitudeSpectrogram:
    """Undo :func:`preprocess` up to a linear, full-height magnitude."""
    out = m
    if out.values.shape[0] % 2 == 0:
        out = restore_nyquist(out, policy)
    if out.scale == "normalized":
        out = denormalize(out)
    if out.scale == "log":
        out = from_log(out)
    return out


# SPEC1 container: magic, u32 K, u32 T, u8 scale, f64 min, f64 max, f64 floor_db, f32[K*T]
_MAGIC = b"SPEC1"
_HEADER = struct.Struct("<5sIIBddd")


def write_spec(m: MagnitudeSpectrogram, path) -> None:
    k, t = m.values.shape
    lo, hi = m.norm_params if m.norm_params is not None else (math.nan, math.nan)
    header = _HEADER.pack(_MAGIC, k, t, SCALES.index(m.scale), lo, hi, m.floor_db)
    payload = np.ascontiguousarray(m.values, dtype="<f4").tobytes()
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(suffix=".part", dir=os.path.dirname(os.path.abspath(path)))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header + payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_spec(path) -> MagnitudeSpectrogram:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:5] != _MAGIC:
        raise SpecFormatError(f"{path}: not a SPEC1 file")
    magic, k, t, tag, lo, hi, floor_db = _HEADER.unpack_from(raw)
    if tag >= len(SCALES):
        raise SpecFormatError(f"{path}: unknown scale tag {tag}")
    body = raw[_HEADER.size:]
    if len(body) != 4 * k * t:
        raise SpecFormatError(f"{path}: expected {k * t} values, found {len(body) // 4}")
    values = np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(k, t)
    scale = SCALES[tag]
    params = None if math.isnan(lo) else (lo, hi)
    if scale == "normalized":
        values = np.clip(values, -1.0, 1.0)
    return MagnitudeSpectrogram(values, scale, params, floor_db)
