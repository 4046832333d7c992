"""Log-amplitude mel-spectrogram front end.

A 10 s utterance at 8 kHz becomes a (96, 1000) float32 array: 96 mel bands,
one frame per 80-sample hop, 200-sample Hann window zero-padded to a
256-point FFT, power spectrum projected through triangular mel filters and
floored with log(power + 1e-10).

Framing convention: the signal is reflect-padded by window//2 on each side
and one frame is taken centered at every hop multiple that lies inside the
original signal, so an 80000-sample buffer yields exactly 1000 frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import ConfigError, FormatError, ShapeError, TooShortError

N_MELS = 96
WINDOW = 200
HOP = 80
LOG_FLOOR = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass
class MelFilterbank:
    """Triangular mel filters sampled at FFT bin frequencies.

    weights has shape (n_mels, n_fft//2 + 1). Filters are unit-peak
    triangles, equally spaced on the mel scale between fmin and fmax. A
    triangle too narrow to touch any bin (possible at the low end for large
    n_mels) contributes weight 1.0 at the bin nearest its center, so every
    row stays non-empty.
    """

    weights: np.ndarray
    fmin: float
    fmax: float

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


def mel_filterbank(
    n_mels: int = N_MELS, sample_rate: int = 8000, n_fft: int = 256
) -> MelFilterbank:
    """Build the (n_mels x n_fft//2+1) triangular filterbank, fmin=0, fmax=Nyquist."""
    if n_mels < 1:
        raise ConfigError(f"n_mels must be >= 1, got {n_mels}")
    if n_fft < 2 or (n_fft & (n_fft - 1)) != 0:
        raise ConfigError(f"n_fft must be a power of two >= 2, got {n_fft}")

    fmin, fmax = 0.0, sample_rate / 2.0
    n_bins = n_fft // 2 + 1
    bin_freqs = np.arange(n_bins) * sample_rate / n_fft

    mel_points = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    hz_points = mel_to_hz(mel_points)

    weights = np.zeros((n_mels, n_bins), dtype=np.float64)
    for m in range(n_mels):
        lo, center, hi = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        row = np.maximum(0.0, np.minimum(rising, falling))
        if not row.any():
            row[int(np.argmin(np.abs(bin_freqs - center)))] = 1.0
        weights[m] = row

    return MelFilterbank(weights=weights, fmin=fmin, fmax=fmax)


@dataclass
class MelSpectrogram:
    """Log-amplitude mel energies: values is (n_mels, n_frames) float32."""

    values: np.ndarray
    source_window: int = WINDOW
    source_hop: int = HOP

    @property
    def shape(self):
        return self.values.shape


def frame_count(n_samples: int, hop: int = HOP) -> int:
    """Number of analysis frames: one per hop multiple inside the signal."""
    return -(-n_samples // hop)


def _fft_size(window: int) -> int:
    n_fft = 1
    while n_fft < window:
        n_fft *= 2
    return n_fft


def log_mel_spectrogram(
    buffer: AudioBuffer,
    window: int = WINDOW,
    hop: int = HOP,
    n_mels: int = N_MELS,
    n_fft: int | None = None,
    filterbank: MelFilterbank | None = None,
) -> MelSpectrogram:
    """Compute the log-power mel-spectrogram of a mono buffer.

    Raises TooShortError when the buffer holds fewer samples than one
    analysis window.
    """
    signal = buffer.samples
    if len(signal) < window:
        raise TooShortError(f"buffer has {len(signal)} samples, window needs {window}")
    if n_fft is None:
        n_fft = _fft_size(window)
    elif n_fft < window:
        raise ConfigError(f"n_fft={n_fft} smaller than window={window}")

    if filterbank is None:
        filterbank = mel_filterbank(n_mels=n_mels, sample_rate=buffer.sample_rate, n_fft=n_fft)
    elif filterbank.weights.shape[1] != n_fft // 2 + 1:
        raise ShapeError("filterbank built for a different FFT size")

    pad = window // 2
    padded = np.pad(signal, pad, mode="reflect")
    n_frames = frame_count(len(signal), hop)

    offsets = np.arange(n_frames) * hop
    frames = padded[offsets[:, None] + np.arange(window)[None, :]]

    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(window) / window)
    spectrum = np.fft.rfft(frames * hann, n=n_fft, axis=1)
    power = spectrum.real**2 + spectrum.imag**2

    mel_energy = power @ filterbank.weights.T
    values = np.log(mel_energy + LOG_FLOOR).T.astype(np.float32)
    return MelSpectrogram(values=values, source_window=window, source_hop=hop)


def save_features(path: str, values: np.ndarray) -> None:
    """Write a feature array as a version-1.0 NPY file, float32 C-order."""
    arr = np.ascontiguousarray(np.asarray(values), dtype="<f4")
    with open(path, "wb") as fh:
        np.lib.format.write_array(fh, arr, version=(1, 0))


def load_features(path: str) -> np.ndarray:
    """Read a feature NPY file back as a 2-D float32 array."""
    try:
        arr = np.load(path)
    except Exception as exc:
        raise FormatError(f"unreadable feature file {path}: {exc}") from exc
    if arr.ndim != 2:
        raise ShapeError(f"{path}: expected a 2-D feature array, got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.float32)
