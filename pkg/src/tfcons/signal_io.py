"""WAV input/output and fixed-length segmentation."""
from __future__ import annotations

import math
import os
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .errors import SampleRateError, UnsupportedFormatError, WavFormatError


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono audio. ``samples`` is float64 with nominal range [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"waveform must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains NaN or Inf")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path, expected_rate: int | None = None) -> Waveform:
    """Read a PCM16 or float32 WAV file and downmix to mono.

    Integer PCM is scaled by 1/32768 so that -32768 maps to exactly -1.0.
    If ``expected_rate`` is given, a file at any other rate is rejected
    instead of being resampled.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported bit depth" in msg or "not supported" in msg:
            raise UnsupportedFormatError(f"{path}: {msg}") from exc
        raise WavFormatError(f"{path}: {msg}") from exc
    except EOFError as exc:
        raise WavFormatError(f"{path}: truncated file") from exc

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormatError(f"{path}: sample type {data.dtype} (need PCM16 or float32)")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if expected_rate is not None and rate != expected_rate:
        raise SampleRateError(f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz (no resampling)")
    return Waveform(samples, rate)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.clip(np.round(clipped * 32768.0), -32768, 32767).astype(np.int16)


def write_wav(w: Waveform, path) -> None:
    """Write ``w`` as mono PCM16. Out-of-range samples are hard-clipped.

    The file is written under a temporary name and renamed into place, so a
    failed write never leaves a partial file at ``path``.
    """
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(suffix=".wav.part", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            wavfile.write(fh, w.sample_rate, to_pcm16(w.samples))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def segment(w: Waveform, seconds: float) -> list[Waveform]:
    """Split into consecutive, non-overlapping clips of ``seconds`` each.

    A trailing remainder shorter than one clip is dropped.
    """
    length = math.floor(seconds * w.sample_rate)
    if length < 1:
        raise ValueError(f"segment length {seconds}s is shorter than one sample")
    count = len(w.samples) // length
    return [Waveform(w.samples[i * length:(i + 1) * length], w.sample_rate) for i in range(count)]
