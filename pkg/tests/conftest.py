import numpy as np
import pytest

from callseg.audio import AudioBuffer, save_wav


def make_tone(seconds=10.0, freq=440.0, rate=8000, amplitude=0.5):
    t = np.arange(int(round(seconds * rate))) / rate
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq * t), rate)


def write_tone_wav(path, seconds=10.0, freq=440.0, rate=8000):
    buffer = make_tone(seconds=seconds, freq=freq, rate=rate)
    save_wav(str(path), buffer)
    return buffer


@pytest.fixture
def tone_wav(tmp_path):
    path = tmp_path / "tone.wav"
    write_tone_wav(path)
    return str(path)
