"""Deterministic speech-like test signals.

Each utterance is a sequence of short segments.  Every segment draws a
formant filter (four resonances) and excites it with either a glottal-like
pulse train or white noise, mixed in a random proportion.
"""

import numpy as np
from scipy.signal import lfilter

from .lsp_pipeline import FRAME_LENGTH, SAMPLE_RATE

FORMANT_RANGES = ((300, 900), (900, 2300), (2000, 3000), (3000, 3800))
BANDWIDTH_RANGE = (60, 200)
SEGMENT_FRAMES = 3
CORPUS_SEED = 20170101


def _formant_filter(rng):
    poles = []
    for lo, hi in FORMANT_RANGES:
        f = rng.uniform(lo, hi)
        bw = rng.uniform(*BANDWIDTH_RANGE)
        r = np.exp(-np.pi * bw / SAMPLE_RATE)
        w = 2 * np.pi * f / SAMPLE_RATE
        poles += [r * np.exp(1j * w), r * np.exp(-1j * w)]
    return np.real(np.poly(poles))


def utterance(n_frames: int, seed: int, peak: float = 8000.0) -> np.ndarray:
    """``n_frames * 240`` int16 samples of speech-like signal."""
    rng = np.random.default_rng(seed)
    n = n_frames * FRAME_LENGTH
    seg_len = SEGMENT_FRAMES * FRAME_LENGTH
    out = np.zeros(n)
    zi = np.zeros(2 * len(FORMANT_RANGES))
    phase = 0
    for start in range(0, n, seg_len):
        length = min(seg_len, n - start)
        voiced = rng.uniform()
        period = int(rng.integers(40, 110))
        pulses = np.zeros(length)
        pulses[(np.arange(length) + phase) % period == 0] = 1.0
        phase = (phase + length) % period
        excitation = voiced * pulses * np.sqrt(period) + (1 - voiced) * rng.normal(size=length)
        excitation *= rng.uniform(0.3, 1.0)
        a = _formant_filter(rng)
        seg, zi = lfilter([1.0], a, excitation, zi=zi)
        out[start:start + length] = seg
    scale = peak / max(np.max(np.abs(out)), 1e-12)
    return np.clip(np.round(out * scale), -32768, 32767).astype(np.int16)


def corpus(n_utterances: int = 20, n_frames: int = 100, seed: int = CORPUS_SEED):
    """List of utterances, each of exactly ``n_frames`` frames."""
    seeds = np.random.SeedSequence(seed).generate_state(n_utterances)
    return [utterance(n_frames, int(s)) for s in seeds]
