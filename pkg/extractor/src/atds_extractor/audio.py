"""WAV loading: mono float32 at 16 kHz, resampling when needed."""

from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

TARGET_SAMPLE_RATE = 16_000


class AudioError(Exception):
    pass


def load_wav_16k_mono(path: str | Path) -> np.ndarray:
    """float32 mono samples at 16 kHz; multi-channel audio is averaged."""
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise AudioError(f"cannot read audio {path}: {exc}")
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(np.float32) / np.iinfo(data.dtype).max
    else:
        data = data.astype(np.float32)
    if rate != TARGET_SAMPLE_RATE:
        from math import gcd

        g = gcd(TARGET_SAMPLE_RATE, rate)
        data = resample_poly(data, TARGET_SAMPLE_RATE // g, rate // g).astype(
            np.float32
        )
    return data
