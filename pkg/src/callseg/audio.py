"""Single-channel PCM WAV input, normalized to float samples in [-1, 1].

Calls arrive as 8 kHz mono recordings; anything else (stereo, wrong rate,
compressed formats) is a caller error, not something we resample or downmix.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .errors import ChannelCountError, FormatError, NumericError, SampleRateError

DEFAULT_SAMPLE_RATE = 8000

# full-scale divisor per integer PCM dtype
_PCM_SCALE = {
    np.dtype(np.uint8): 128.0,
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


@dataclass
class AudioBuffer:
    """A mono signal: float64 samples in [-1, 1] plus its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ChannelCountError(f"expected mono signal, got ndim={self.samples.ndim}")
        if self.sample_rate <= 0:
            raise FormatError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise NumericError("audio samples contain non-finite values")

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def load_audio(path: str, expected_rate: int = DEFAULT_SAMPLE_RATE) -> AudioBuffer:
    """Read a mono PCM WAV file and normalize samples to [-1, 1].

    Accepts 8/16/32-bit integer and 32-bit float PCM. Raises
    ChannelCountError for multi-channel files, SampleRateError when the
    declared rate differs from ``expected_rate``, and FormatError for
    anything that is not a readable RIFF/WAV file.
    """
    if not os.path.isfile(path):
        raise FormatError(f"no such audio file: {path}")
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:  # scipy raises plain ValueError on bad headers
        raise FormatError(f"malformed WAV file {path}: {exc}") from exc

    if data.ndim != 1:
        raise ChannelCountError(
            f"{path}: expected 1 channel, got {data.shape[1] if data.ndim > 1 else data.ndim}"
        )
    if rate != expected_rate:
        raise SampleRateError(f"{path}: declared rate {rate} Hz, expected {expected_rate} Hz")

    if data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / _PCM_SCALE[data.dtype]
    elif data.dtype in _PCM_SCALE:
        samples = data.astype(np.float64) / _PCM_SCALE[data.dtype]
    elif data.dtype in (np.float32, np.float64):
        samples = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise FormatError(f"{path}: unsupported sample format {data.dtype}")

    return AudioBuffer(samples=samples, sample_rate=int(rate))


def save_wav(path: str, buffer: AudioBuffer) -> None:
    """Write an AudioBuffer as 16-bit PCM WAV (used by the synthetic pipeline)."""
    scaled = np.clip(buffer.samples, -1.0, 1.0) * 32767.0
    wavfile.write(path, buffer.sample_rate, scaled.astype(np.int16))
