"""File formats: WAV cover speech, LSPI index streams, M3DM matrices,
LSPC codebooks and the quantizer config file.

Binary layouts (all integers little-endian)::

    M3DM  b"M3DMAGIC" | u8 version=1 | u64 seed | 512 x u8 cells (x, y, z order)
    LSPC  b"LSPCBK01" | 256x3 f64 | 256x3 f64 | 256x4 f64
    LSPI  b"LSPIDX01" | u32 frame count | count x (u8 ix, u8 iy, u8 iz)
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from .errors import (CodebookFormatError, ConfigurationError,
                     IndexStreamFormatError, MatrixFormatError, UnsupportedWavError,
                     WavParseError)
from .lsp_pipeline import (CODEBOOK_SIZE, FRAME_LENGTH, ORDER, SAMPLE_RATE, SPLIT,
                           Codebook, IndexTriple, QuantConfig, SpeechFrame, check_triple)
from .magic_matrix import MagicMatrix, validate

M3DM_MAGIC = b"M3DMAGIC"
M3DM_VERSION = 1
LSPC_MAGIC = b"LSPCBK01"
LSPI_MAGIC = b"LSPIDX01"

WAVE_FORMAT_PCM = 1


# ---------------------------------------------------------------------------
# WAV

@dataclass
class WavClip:
    sample_rate: int
    channels: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int16)


def _require(parameter, value, expected):
    if value != expected:
        raise UnsupportedWavError(parameter, value, expected)


def _check_clip(clip: WavClip):
    _require("sample rate", clip.sample_rate, SAMPLE_RATE)
    _require("channels", clip.channels, 1)


def parse_wav(data: bytes) -> WavClip:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavParseError("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    pcm = None
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        if body + size > len(data):
            raise WavParseError(f"chunk {cid!r} truncated: declares {size} bytes, "
                                f"{len(data) - body} present")
        if cid == b"fmt ":
            if size < 16:
                raise WavParseError("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", data, body)
        elif cid == b"data":
            pcm = data[body:body + size]
        pos = body + size + (size & 1)
    if fmt is None:
        raise WavParseError("missing fmt chunk")
    if pcm is None:
        raise WavParseError("missing data chunk")
    tag, channels, rate, _, block_align, bits = fmt
    _require("format tag", tag, WAVE_FORMAT_PCM)
    _require("sample rate", rate, SAMPLE_RATE)
    _require("channels", channels, 1)
    _require("bits per sample", bits, 16)
    if block_align != 2:
        raise WavParseError(f"block align {block_align} inconsistent with 16-bit mono")
    if len(pcm) % 2:
        raise WavParseError("data chunk holds a partial sample")
    return WavClip(rate, channels, np.frombuffer(pcm, dtype="<i2").astype(np.int16))


def read_wav(path) -> WavClip:
    """Read an 8 kHz / mono / 16-bit PCM WAV file."""
    return parse_wav(Path(path).read_bytes())


def wav_bytes(clip: WavClip) -> bytes:
    _check_clip(clip)
    pcm = clip.samples.astype("<i2").tobytes()
    fmt = struct.pack("<HHIIHH", WAVE_FORMAT_PCM, 1, clip.sample_rate,
                      clip.sample_rate * 2, 2, 16)
    return b"".join([
        b"RIFF", struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(pcm)), b"WAVE",
        b"fmt ", struct.pack("<I", len(fmt)), fmt,
        b"data", struct.pack("<I", len(pcm)), pcm,
    ])


def write_wav(clip: WavClip, path) -> None:
    Path(path).write_bytes(wav_bytes(clip))


def frame_split(clip) -> List[SpeechFrame]:
    """Non-overlapping 240-sample frames; a short tail is zero-padded and flagged."""
    if isinstance(clip, WavClip):
        _check_clip(clip)
        samples = clip.samples
    else:
        samples = np.asarray(clip, dtype=np.int16)
    frames = []
    for start in range(0, len(samples), FRAME_LENGTH):
        chunk = samples[start:start + FRAME_LENGTH]
        padded = len(chunk) < FRAME_LENGTH
        if padded:
            chunk = np.concatenate([chunk, np.zeros(FRAME_LENGTH - len(chunk), np.int16)])
        frames.append(SpeechFrame(chunk, padded))
    return frames


# ---------------------------------------------------------------------------
# M3DM

def matrix_bytes(m: MagicMatrix) -> bytes:
    return (M3DM_MAGIC + struct.pack("<BQ", M3DM_VERSION, m.seed)
            + m.cells.astype(np.uint8).tobytes(order="C"))


def parse_matrix(data: bytes, check: bool = True) -> MagicMatrix:
    if data[:8] != M3DM_MAGIC:
        raise MatrixFormatError("bad magic, not an M3DM matrix file")
    if len(data) != 8 + 1 + 8 + 512:
        raise MatrixFormatError(f"M3DM file has {len(data)} bytes, expected 529")
    version, seed = struct.unpack_from("<BQ", data, 8)
    if version != M3DM_VERSION:
        raise MatrixFormatError(f"unsupported M3DM version {version}")
    cells = np.frombuffer(data, dtype=np.uint8, offset=17).reshape(8, 8, 8)
    if cells.max() > 63:
        raise MatrixFormatError("cell value above 63")
    report = validate(cells)
    if check and not report.passed:
        raise MatrixFormatError("matrix fails validation: " + ", ".join(report.violations))
    return MagicMatrix(cells, seed)


def write_matrix(m: MagicMatrix, path) -> None:
    Path(path).write_bytes(matrix_bytes(m))


def read_matrix(path) -> MagicMatrix:
    return parse_matrix(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# LSPC

def codebook_bytes(cb: Codebook) -> bytes:
    return LSPC_MAGIC + b"".join(sub.astype("<f8").tobytes(order="C") for sub in cb.subs)


def parse_codebook(data: bytes) -> Codebook:
    if data[:8] != LSPC_MAGIC:
        raise CodebookFormatError("bad magic, not an LSPC codebook file")
    expected = 8 + 8 * CODEBOOK_SIZE * sum(SPLIT)
    if len(data) != expected:
        raise CodebookFormatError(f"LSPC file has {len(data)} bytes, expected {expected}")
    subs, offset = [], 8
    for dim in SPLIT:
        n = CODEBOOK_SIZE * dim
        subs.append(np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(-1, dim))
        offset += 8 * n
    if not all(np.all(np.isfinite(s)) for s in subs):
        raise CodebookFormatError("codebook holds non-finite entries")
    return Codebook(tuple(subs))


def write_codebook(cb: Codebook, path) -> None:
    Path(path).write_bytes(codebook_bytes(cb))


def read_codebook(path) -> Codebook:
    return parse_codebook(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# LSPI

def index_stream_bytes(indices) -> bytes:
    triples = [check_triple(t) for t in indices]
    body = bytes(v for t in triples for v in t)
    return LSPI_MAGIC + struct.pack("<I", len(triples)) + body


def parse_index_stream(data: bytes) -> List[IndexTriple]:
    if data[:8] != LSPI_MAGIC:
        raise IndexStreamFormatError("bad magic, not an LSPI index stream")
    if len(data) < 12:
        raise IndexStreamFormatError("LSPI header truncated")
    (count,) = struct.unpack_from("<I", data, 8)
    if len(data) != 12 + 3 * count:
        raise IndexStreamFormatError(
            f"LSPI declares {count} frames but carries {(len(data) - 12) / 3:g}")
    body = data[12:]
    return [IndexTriple(body[i], body[i + 1], body[i + 2]) for i in range(0, len(body), 3)]


def write_index_stream(indices, path) -> None:
    Path(path).write_bytes(index_stream_bytes(indices))


def read_index_stream(path) -> List[IndexTriple]:
    return parse_index_stream(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# quantizer config

def parse_config(text: str) -> QuantConfig:
    """``key = value`` lines; keys ``predictor`` and ``p_dc`` (10 comma-separated radians)."""
    values = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    unknown = set(values) - {"predictor", "p_dc"}
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    config = QuantConfig()
    try:
        if "predictor" in values:
            config.predictor = float(values["predictor"])
        if "p_dc" in values:
            dc = [float(v) for v in values["p_dc"].split(",")]
            if len(dc) != ORDER:
                raise ConfigurationError(f"p_dc needs {ORDER} values, got {len(dc)}")
            config = QuantConfig(np.array(dc), config.predictor)
    except ValueError as exc:
        raise ConfigurationError(f"bad number in config: {exc}") from None
    if not np.all(np.diff(config.dc) > 0) or config.dc[0] <= 0 or config.dc[-1] >= np.pi:
        raise ConfigurationError("p_dc must be strictly increasing inside (0, pi)")
    return config


def read_config(path) -> QuantConfig:
    return parse_config(Path(path).read_text())
