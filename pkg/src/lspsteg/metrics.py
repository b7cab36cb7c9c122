"""Quality measurements for stego index streams.

Speech is rebuilt by passing each frame's LPC residual (computed with the
original, unquantized predictor) through a synthesis filter built from the
decoded LSP vector.  Comparing the rebuild from a stego stream with the
rebuild from the clean stream isolates the damage done by embedding.
"""

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from . import lsp_pipeline as lp
from .errors import CapacityError, DomainError
from .lsp_pipeline import Codebook, QuantConfig, SpeechFrame
from .magic_matrix import MagicMatrix
from .stego_engine import (SecretPayload, StreamResult, bits_per_frame, capacity_bps,
                           embed_symbols, cover_lsps, _symbols_from_bits)

SNR_CAP_DB = 300.0
HIST_BINS = 28
SCHEMES = ("none", "magic3d", "lsb2", "parity_qim")


def snr(reference, test) -> float:
    """10*log10(signal power / noise power), capped at 300 dB."""
    ref = np.asarray(reference, dtype=np.float64)
    tst = np.asarray(test, dtype=np.float64)
    if ref.shape != tst.shape:
        raise DomainError(f"length mismatch: {ref.shape} vs {tst.shape}")
    if ref.size == 0:
        raise DomainError("empty sequences")
    signal = np.sum(ref ** 2)
    if signal == 0:
        raise DomainError("reference has zero power")
    noise = np.sum((ref - tst) ** 2)
    if noise == 0:
        return SNR_CAP_DB
    return float(min(10.0 * np.log10(signal / noise), SNR_CAP_DB))


def _frame_samples(frames):
    out = []
    for f in frames:
        out.append(f.samples if isinstance(f, SpeechFrame) else np.asarray(f))
    return out


_M, _J = np.indices((lp.ORDER, lp.ORDER))
_HANKEL = np.where(_M + _J < lp.ORDER, _M + _J, lp.ORDER)


def _state(coeffs, past):
    """Transposed direct-form state of ``coeffs[1:]`` after ``past`` (oldest first).

    zi[m] = sum_j coeffs[m + 1 + j] * past[-1 - j], i.e. a Hankel product; this
    is what scipy.signal.lfiltic gives for a pure FIR or pure all-pole section.
    """
    return np.append(coeffs[1:], 0.0)[_HANKEL] @ past[::-1]


def lpc_residual(frames) -> List[np.ndarray]:
    """Prediction residual of every frame under its own unquantized predictor."""
    history = np.zeros(lp.ORDER)
    out = []
    for x in _frame_samples(frames):
        x = np.asarray(x, dtype=np.float64)
        b = np.concatenate(([1.0], -lp.lpc_analyze(x.astype(np.int16)).a))
        zi = _state(b, history)
        r, _ = lfilter(b, [1.0], x, zi=zi)
        out.append(r)
        history = np.concatenate([history, x])[-lp.ORDER:]
    return out


def synthesize(residuals, decoded_lsps) -> np.ndarray:
    if len(residuals) != len(decoded_lsps):
        raise DomainError("need one decoded LSP vector per frame")
    if not len(residuals):
        return np.zeros(0)
    coeffs, _ = lp.lsp_to_lpc_batch(np.asarray(decoded_lsps, dtype=np.float64))
    history = np.zeros(lp.ORDER)
    out = []
    for r, c in zip(residuals, coeffs):
        a = np.concatenate(([1.0], -c))
        y, _ = lfilter([1.0], a, r, zi=-_state(a, history))
        out.append(y)
        history = np.concatenate([history, y])[-lp.ORDER:]
    return np.concatenate(out)


def resynthesize(frames, decoded_lsps) -> np.ndarray:
    """Residual-excited rebuild of ``frames`` through the decoded LSP filters."""
    return synthesize(lpc_residual(frames), decoded_lsps)


@dataclass
class QualityReport:
    scheme: str
    snr_db: float
    mean_weighted_error_clean: float
    mean_weighted_error_stego: float
    relative_error_increase: float
    displacement_histogram: np.ndarray
    capacity_bps: float
    frames: int = 0
    embedded_frames: int = 0

    @property
    def mean_sq_distance(self) -> float:
        h = self.displacement_histogram
        total = h.sum()
        return float(h @ np.arange(len(h)) / total) if total else 0.0


def displacement_histogram(records) -> np.ndarray:
    d = [r.sq_distance for r in records]
    hist = np.zeros(max([HIST_BINS] + [v + 1 for v in d]), dtype=np.int64)
    for v in d:
        hist[v] += 1
    return hist


def _rate_mask(n, rate):
    if not 0.0 <= rate <= 1.0:
        raise DomainError("embedding rate must lie in [0, 1]")
    k = np.arange(n + 1)
    marks = np.floor(k * rate + 1e-9)
    return list(np.diff(marks) > 0)


@dataclass
class CompareConfig:
    matrix: MagicMatrix
    codebook: Codebook
    quant: QuantConfig = field(default_factory=QuantConfig)
    schemes: Sequence[str] = SCHEMES
    rate: float = 1.0


@dataclass
class UtteranceAnalysis:
    """Per-utterance inputs shared by all schemes."""

    lsps: list
    usable: list
    residuals: list
    clean: StreamResult
    clean_speech: np.ndarray


def analyse_utterance(frames, config: CompareConfig) -> UtteranceAnalysis:
    frames = _as_frames(frames)
    lsps, usable = cover_lsps(frames)
    clean = embed_symbols(lsps, [], "none", config.codebook, config=config.quant)
    residuals = lpc_residual(frames)
    return UtteranceAnalysis(lsps, usable, residuals, clean, synthesize(residuals, clean.decoded))


def _as_frames(cover):
    if isinstance(cover, np.ndarray) and cover.ndim == 1:
        n = len(cover) // lp.FRAME_LENGTH
        return [SpeechFrame(f) for f in cover[:n * lp.FRAME_LENGTH].reshape(n, lp.FRAME_LENGTH)]
    return [f if isinstance(f, SpeechFrame) else SpeechFrame(f) for f in cover]


def _scheme_symbols(payload_bits, width, n_slots):
    if width == 0 or n_slots == 0:
        return []
    need = width * n_slots
    reps = -(-need // len(payload_bits))
    return _symbols_from_bits(np.tile(payload_bits, reps)[:need], width)


def scheme_report(ua: UtteranceAnalysis, scheme: str, payload: SecretPayload,
                  config: CompareConfig, rate: Optional[float] = None) -> QualityReport:
    rate = config.rate if rate is None else rate
    width = bits_per_frame(scheme)
    mask = [u and r for u, r in zip(ua.usable, _rate_mask(len(ua.lsps), rate))]
    bits = payload.bits
    if width and not len(bits):
        raise DomainError("comparison needs a non-empty payload")
    symbols = _scheme_symbols(bits, width, sum(mask))
    if scheme == "none":
        run = ua.clean
    else:
        run = embed_symbols(ua.lsps, symbols, scheme, config.codebook, config.matrix,
                            config.quant, mask)
    clean_err = float(np.mean(ua.clean.weighted_errors))
    stego_err = float(np.mean(run.weighted_errors))
    speech = ua.clean_speech if scheme == "none" else synthesize(ua.residuals, run.decoded)
    return QualityReport(
        scheme=scheme,
        snr_db=snr(ua.clean_speech, speech) if np.any(ua.clean_speech) else SNR_CAP_DB,
        mean_weighted_error_clean=clean_err,
        mean_weighted_error_stego=stego_err,
        relative_error_increase=(stego_err - clean_err) / clean_err if clean_err else 0.0,
        displacement_histogram=displacement_histogram(run.records),
        capacity_bps=capacity_bps(scheme),
        frames=len(ua.lsps),
        embedded_frames=len(run.records),
    )


def compare_schemes(cover, payload, config: CompareConfig) -> List[Dict]:
    """Run every scheme over every utterance of ``cover``.

    ``cover`` is one utterance (int16 samples or frames) or a list of them.
    Each scheme embeds in every usable frame at its own capacity; the payload
    bits are repeated when the payload is shorter than that.  Returns one
    row per (utterance, scheme) with the QualityReport under ``"report"``.
    """
    if not isinstance(payload, SecretPayload):
        payload = SecretPayload(bytes(payload))
    utterances = [cover] if _is_single(cover) else list(cover)
    rows = []
    for u_no, utt in enumerate(utterances):
        frames = _as_frames(utt)
        usable = sum(not f.padded for f in frames)
        if usable == 0:
            raise CapacityError("cover holds no usable frame", required=1, available=0)
        ua = analyse_utterance(frames, config)
        for scheme in config.schemes:
            rows.append({"utterance": u_no, "scheme": scheme,
                         "report": scheme_report(ua, scheme, payload, config)})
    return rows


def _is_single(cover):
    # one utterance: a sample array, a (frames, 240) array or a list of SpeechFrames
    if isinstance(cover, np.ndarray):
        return True
    return len(cover) > 0 and isinstance(cover[0], SpeechFrame)


def summarize(rows) -> Dict[str, Dict[str, float]]:
    """Corpus means per scheme."""
    out = {}
    for scheme in dict.fromkeys(r["scheme"] for r in rows):
        reps = [r["report"] for r in rows if r["scheme"] == scheme]
        out[scheme] = {
            "capacity_bps": reps[0].capacity_bps,
            "snr_db": float(np.mean([q.snr_db for q in reps])),
            "relative_error_increase": float(np.mean([q.relative_error_increase for q in reps])),
            "mean_weighted_error_stego": float(np.mean([q.mean_weighted_error_stego for q in reps])),
            "mean_sq_distance": float(np.mean([q.mean_sq_distance for q in reps])),
        }
    return out


CSV_HEADER = ["utterance", "scheme", "capacity_bps", "frames", "embedded_frames", "snr_db",
              "mean_weighted_error_clean", "mean_weighted_error_stego",
              "relative_error_increase", "mean_sq_distance"]


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in rows:
            q = row["report"]
            w.writerow([row["utterance"], q.scheme, f"{q.capacity_bps:g}", q.frames,
                        q.embedded_frames, f"{q.snr_db:.6f}",
                        f"{q.mean_weighted_error_clean:.9g}", f"{q.mean_weighted_error_stego:.9g}",
                        f"{q.relative_error_increase:.9g}", f"{q.mean_sq_distance:.6f}"])


def write_histogram_data(rows, path) -> None:
    """Whitespace-separated columns: sq_distance, then counts per scheme."""
    schemes = [s for s in dict.fromkeys(r["scheme"] for r in rows) if s != "none"]
    hists = {}
    for s in schemes:
        hs = [r["report"].displacement_histogram for r in rows if r["scheme"] == s]
        size = max(len(h) for h in hs)
        hists[s] = sum(np.pad(h, (0, size - len(h))) for h in hs)
    size = max(len(h) for h in hists.values())
    with open(path, "w") as fh:
        fh.write("# sq_distance " + " ".join(schemes) + "\n")
        for d in range(size):
            counts = [int(hists[s][d]) if d < len(hists[s]) else 0 for s in schemes]
            fh.write(f"{d} " + " ".join(map(str, counts)) + "\n")


def snr_rate_curve(cover, payload, config: CompareConfig,
                   rates=(0.2, 0.4, 0.6, 0.8, 1.0), schemes=("magic3d", "lsb2", "parity_qim")):
    """Mean SNR per scheme as the fraction of embedding frames grows.

    Returns ``{scheme: [(embedding_bps, snr_db), ...]}``.
    """
    if not isinstance(payload, SecretPayload):
        payload = SecretPayload(bytes(payload))
    utterances = [cover] if _is_single(cover) else list(cover)
    analyses = [analyse_utterance(_as_frames(u), config) for u in utterances]
    curves = {}
    for s in schemes:
        pts = []
        for rate in rates:
            vals = [scheme_report(ua, s, payload, config, rate).snr_db for ua in analyses]
            pts.append((rate * capacity_bps(s), float(np.mean(vals))))
        curves[s] = pts
    return curves


def write_curve_data(curves, path) -> None:
    with open(path, "w") as fh:
        fh.write("# scheme embedding_bps snr_db\n")
        for s, pts in curves.items():
            for bps, val in pts:
                fh.write(f"{s} {bps:g} {val:.6f}\n")
            fh.write("\n\n")
