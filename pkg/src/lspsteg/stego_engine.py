"""Hiding bits in LSP index triples.

The proposed scheme (``magic3d``) replaces the best triple with the nearest
triple whose magic-cube value equals the 6-bit key.  Two reference schemes
are provided for comparison: ``lsb2`` overwrites the two low bits of every
index and ``parity_qim`` restricts each sub-vector search to indices of a
given parity.

Streams start with the payload length (32 bits) spread over as many frame
symbols as needed, then carry one symbol per frame.  The quantizer state
always follows the transmitted (stego) indices so that the decoder's
prediction stays in step with the encoder's.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from . import lsp_pipeline as lp
from .errors import CapacityError, DomainError, IntegrityError, TruncationError
from .lsp_pipeline import Codebook, IndexTriple, QuantConfig, QuantState, SpeechFrame
from .magic_matrix import MagicMatrix, magic_expand, search_patterns, sq_distance

KEY_BITS = 6
LENGTH_BITS = 32
BITS_PER_FRAME = {"none": 0, "magic3d": 6, "lsb2": 6, "parity_qim": 3}
STEGO_SCHEMES = ("magic3d", "lsb2", "parity_qim")


def capacity_bps(scheme: str) -> float:
    return bits_per_frame(scheme) / lp.FRAME_SECONDS


def bits_per_frame(scheme: str) -> int:
    try:
        return BITS_PER_FRAME[scheme]
    except KeyError:
        raise DomainError(f"unknown scheme {scheme!r}") from None


def header_symbols(scheme: str = "magic3d") -> int:
    return -(-LENGTH_BITS // bits_per_frame(scheme))


# ---------------------------------------------------------------------------
# bit handling

def bits_to_key(bits) -> int:
    """'001111' or [0, 0, 1, 1, 1, 1] -> 15 (MSB first)."""
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    value = 0
    for b in bits:
        if b not in (0, 1):
            raise DomainError(f"not a bit: {b!r}")
        value = (value << 1) | b
    return value


def key_to_bits(key: int, width: int = KEY_BITS) -> str:
    if not 0 <= key < 1 << width:
        raise DomainError(f"{key} does not fit in {width} bits")
    return format(key, f"0{width}b")


def _symbols_from_bits(bits: np.ndarray, width: int) -> List[int]:
    pad = (-len(bits)) % width
    bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)]).reshape(-1, width)
    weights = 1 << np.arange(width - 1, -1, -1)
    return [int(v) for v in bits @ weights]


def _bits_from_symbols(symbols, width: int) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.int64)
    return ((s[:, None] >> np.arange(width - 1, -1, -1)) & 1).astype(np.uint8).ravel()


@dataclass(frozen=True)
class SecretPayload:
    data: bytes = b""

    def __post_init__(self):
        if len(self.data) >= 1 << LENGTH_BITS:
            raise DomainError("payload longer than 2**32 - 1 bytes")

    @property
    def length_bytes(self) -> int:
        return len(self.data)

    @property
    def bits(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self.data, dtype=np.uint8))

    def keys(self, width: int = KEY_BITS) -> List[int]:
        """Payload split into ``width``-bit symbols, last one zero-padded."""
        return _symbols_from_bits(self.bits, width)

    def framed_symbols(self, width: int = KEY_BITS) -> List[int]:
        """Length header followed by the payload symbols."""
        n = -(-LENGTH_BITS // width)
        header_bits = _bits_from_symbols([self.length_bytes], n * width)
        return _symbols_from_bits(header_bits, width) + self.keys(width)


# ---------------------------------------------------------------------------
# single frames

@dataclass
class EmbedRecord:
    frame_no: int
    original: IndexTriple
    chosen: IndexTriple
    key: int
    pattern_id: Optional[int]
    sq_distance: int


def embed_frame(original, key: int, m: MagicMatrix, frame_no: int = 0) -> EmbedRecord:
    """Nearest triple (over the four search patterns) whose cube value is ``key``."""
    original = lp.check_triple(original)
    matches = search_patterns(m, original, key)
    # min() keeps the first of equal distances, i.e. the lowest pattern id
    best = min(matches, key=lambda pm: pm.sq_distance)
    return EmbedRecord(frame_no, original, IndexTriple(*best.coord), int(key),
                       best.pattern_id, best.sq_distance)


def extract_frame(t, m: MagicMatrix) -> int:
    return magic_expand(m, lp.check_triple(t))


def _as_symbol(bits, width):
    if isinstance(bits, (int, np.integer)):
        value = int(bits)
    else:
        if len(bits) != width:
            raise DomainError(f"expected {width} bits, got {len(bits)}")
        value = bits_to_key(bits)
    if not 0 <= value < 1 << width:
        raise DomainError(f"{value} does not fit in {width} bits")
    return value


def embed_lsb2_baseline(original, bits) -> IndexTriple:
    """Overwrite the two LSBs of each index; ``bits`` is 6 bits or an int < 64."""
    t = lp.check_triple(original)
    k = _as_symbol(bits, 6)
    return IndexTriple(*((i & ~3) | ((k >> s) & 3) for i, s in zip(t, (4, 2, 0))))


def extract_lsb2_baseline(t) -> int:
    ix, iy, iz = lp.check_triple(t)
    return ((ix & 3) << 4) | ((iy & 3) << 2) | (iz & 3)


def embed_parity_qim_baseline(residual, bits, cb: Codebook, w) -> IndexTriple:
    """Weighted-error argmin restricted to indices whose parity is the bit.

    ``residual`` is either the 10-dim residual or its three sub-vectors.
    """
    k = _as_symbol(bits, 3)
    if len(residual) == len(lp.SPLIT):
        residual = np.concatenate([np.asarray(r, dtype=np.float64) for r in residual])
    errs = lp.weighted_errors(residual, w, cb)
    return _parity_choice(errs, k)


def _parity_choice(errs, k):
    parity = np.arange(lp.CODEBOOK_SIZE) & 1
    out = []
    for err, s in zip(errs, (2, 1, 0)):
        masked = np.where(parity == (k >> s) & 1, err, np.inf)
        out.append(int(np.argmin(masked)))
    return IndexTriple(*out)


def extract_parity_qim_baseline(t) -> int:
    ix, iy, iz = lp.check_triple(t)
    return ((ix & 1) << 2) | ((iy & 1) << 1) | (iz & 1)


def extract_symbol(t, scheme: str, m: Optional[MagicMatrix] = None) -> int:
    if scheme == "magic3d":
        return extract_frame(t, m)
    if scheme == "lsb2":
        return extract_lsb2_baseline(t)
    if scheme == "parity_qim":
        return extract_parity_qim_baseline(t)
    raise DomainError(f"scheme {scheme!r} carries no data")


# ---------------------------------------------------------------------------
# streams

class StreamResult(NamedTuple):
    indices: List[IndexTriple]
    records: List[EmbedRecord]
    decoded: List[np.ndarray]
    weighted_errors: np.ndarray


def cover_lsps(cover_frames):
    """LSP vectors and a usable-for-embedding flag for every cover frame."""
    lsps, usable = [], []
    for f in cover_frames:
        if isinstance(f, SpeechFrame):
            lsps.append(lp.frame_lsp(f))
            usable.append(not f.padded)
        else:
            lsps.append(lp.check_lsp(f))
            usable.append(True)
    return lsps, usable


def embed_symbols(lsps, symbols, scheme: str, cb: Codebook, m: Optional[MagicMatrix] = None,
                  config: Optional[QuantConfig] = None, usable=None) -> StreamResult:
    """Quantize ``lsps`` closed-loop, carrying ``symbols`` in usable frames."""
    bits_per_frame(scheme)
    if scheme == "magic3d" and m is None:
        raise DomainError("magic3d needs a matrix")
    if usable is None:
        usable = [True] * len(lsps)
    state = QuantState.initial(config)
    pending = list(symbols)
    pending.reverse()
    indices, records, decoded, errors = [], [], [], []
    weights = lp.weight_matrix(np.asarray(lsps)) if len(lsps) else []
    for n, (p, w, ok) in enumerate(zip(lsps, weights, usable)):
        errs = lp.weighted_errors(lp.residual(p, state), w, cb)
        best = IndexTriple(*(int(np.argmin(e)) for e in errs))
        chosen = best
        if ok and pending and scheme != "none":
            key = pending.pop()
            if scheme == "magic3d":
                rec = embed_frame(best, key, m, frame_no=n)
            else:
                if scheme == "lsb2":
                    chosen = embed_lsb2_baseline(best, key)
                else:
                    chosen = _parity_choice(errs, key)
                rec = EmbedRecord(n, best, chosen, key, None, sq_distance(best, chosen))
            chosen = rec.chosen
            records.append(rec)
        indices.append(chosen)
        errors.append(sum(float(e[i]) for e, i in zip(errs, chosen)))
        decoded.append(lp.dequantize(chosen, state, cb))
    if pending:
        raise CapacityError(f"{len(pending)} symbols did not fit into the cover")
    return StreamResult(indices, records, decoded, np.array(errors))


def embed_stream(cover_frames, payload: SecretPayload, m: MagicMatrix, cb: Codebook,
                 scheme: str = "magic3d", config: Optional[QuantConfig] = None):
    """Embed a length-framed payload; returns ``(stego indices, records)``.

    ``cover_frames`` holds either SpeechFrames or LSP vectors.
    """
    if not isinstance(payload, SecretPayload):
        payload = SecretPayload(bytes(payload))
    width = bits_per_frame(scheme)
    if width == 0:
        raise DomainError("scheme 'none' cannot carry a payload")
    lsps, usable = cover_lsps(cover_frames)
    symbols = payload.framed_symbols(width)
    available = sum(usable)
    if len(symbols) > available:
        raise CapacityError(
            f"payload needs {len(symbols)} frames ({len(symbols) * width} bits incl. header), "
            f"cover has {available} usable frames ({available * width} bits)",
            required=len(symbols) * width, available=available * width)
    result = embed_symbols(lsps, symbols, scheme, cb, m, config, usable)
    return result.indices, result.records


def max_payload_bytes(n_frames: int, scheme: str = "magic3d") -> int:
    width = bits_per_frame(scheme)
    free = n_frames - header_symbols(scheme)
    return max(0, free * width // 8)


def extract_stream(indices: Sequence, m: Optional[MagicMatrix], scheme: str = "magic3d") -> SecretPayload:
    width = bits_per_frame(scheme)
    if width == 0:
        raise DomainError("scheme 'none' carries no payload")
    n_header = header_symbols(scheme)
    if len(indices) < n_header:
        raise TruncationError(f"stream of {len(indices)} frames is shorter than the "
                              f"{n_header}-frame length header")
    header = [extract_symbol(t, scheme, m) for t in indices[:n_header]]
    length = 0
    for s in header:
        length = (length << width) | s
    if length >= 1 << LENGTH_BITS:
        raise IntegrityError("length header overflows 32 bits (wrong key?)")
    n_syms = -(-8 * length // width)
    if n_header + n_syms > len(indices):
        raise TruncationError(
            f"header declares {length} bytes ({n_syms} frames) but only "
            f"{len(indices) - n_header} frames follow")
    syms = [extract_symbol(t, scheme, m) for t in indices[n_header:n_header + n_syms]]
    bits = _bits_from_symbols(syms, width)[:8 * length] if syms else np.zeros(0, np.uint8)
    return SecretPayload(np.packbits(bits).tobytes())


def decode_stream(indices, cb: Codebook, config: Optional[QuantConfig] = None) -> List[np.ndarray]:
    """Decoder-side LSP reconstruction from an index stream."""
    state = QuantState.initial(config)
    return [lp.dequantize(t, state, cb) for t in indices]
