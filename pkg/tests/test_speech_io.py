import io
import struct
import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lspsteg import speech_io as sio
from lspsteg.errors import (CodebookFormatError, ConfigurationError, FormatError,
                            IndexStreamFormatError, MatrixFormatError, UnsupportedWavError,
                            WavParseError)
from lspsteg.lsp_pipeline import IndexTriple, make_synthetic_codebook
from lspsteg.magic_matrix import generate


def stdlib_wav(samples, rate=8000, channels=1, width=2):
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(rate)
        w.writeframes(np.asarray(samples, dtype="<i2").tobytes())
    return buf.getvalue()


def test_reads_stdlib_wav():
    x = np.arange(-120, 120, dtype=np.int16) * 100
    clip = sio.parse_wav(stdlib_wav(x))
    assert clip.sample_rate == 8000 and clip.channels == 1
    assert len(clip.samples) == 240 and np.array_equal(clip.samples, x)


def test_written_wav_readable_by_stdlib(tmp_path):
    x = np.random.default_rng(0).integers(-32768, 32768, 1000).astype(np.int16)
    sio.write_wav(sio.WavClip(8000, 1, x), tmp_path / "a.wav")
    with wave.open(str(tmp_path / "a.wav")) as w:
        assert (w.getframerate(), w.getnchannels(), w.getsampwidth()) == (8000, 1, 2)
        assert np.array_equal(np.frombuffer(w.readframes(1000), "<i2"), x)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-32768, 32767), max_size=2000))
def test_wav_round_trip(values):
    clip = sio.WavClip(8000, 1, np.array(values, dtype=np.int16))
    back = sio.parse_wav(sio.wav_bytes(clip))
    assert np.array_equal(back.samples, clip.samples)


def test_wav_round_trip_large(tmp_path):
    x = np.random.default_rng(1).integers(-32768, 32768, 1_000_000).astype(np.int16)
    sio.write_wav(sio.WavClip(8000, 1, x), tmp_path / "big.wav")
    assert np.array_equal(sio.read_wav(tmp_path / "big.wav").samples, x)


def test_empty_clip():
    data = sio.wav_bytes(sio.WavClip(8000, 1, np.zeros(0, np.int16)))
    assert data[-8:] == b"data" + struct.pack("<I", 0)
    assert len(sio.parse_wav(data).samples) == 0


def test_unsupported_parameters_named():
    with pytest.raises(UnsupportedWavError) as err:
        sio.parse_wav(stdlib_wav(np.zeros(100), rate=44100, channels=2))
    assert err.value.parameter == "sample rate" and err.value.value == 44100
    with pytest.raises(UnsupportedWavError) as err:
        sio.parse_wav(stdlib_wav(np.zeros(100), channels=2))
    assert err.value.parameter == "channels"
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1), w.setsampwidth(1), w.setframerate(8000)
        w.writeframes(bytes(100))
    with pytest.raises(UnsupportedWavError) as err:
        sio.parse_wav(buf.getvalue())
    assert err.value.parameter == "bits per sample"


def test_malformed_wav():
    good = stdlib_wav(np.arange(240))
    with pytest.raises(WavParseError):
        sio.parse_wav(good[:-10])          # data chunk cut short
    with pytest.raises(WavParseError):
        sio.parse_wav(b"RIFX" + good[4:])
    with pytest.raises(WavParseError):
        sio.parse_wav(good[:36])           # no data chunk
    with pytest.raises(WavParseError):
        sio.parse_wav(b"")


def test_frame_split():
    clip = lambda n: sio.WavClip(8000, 1, np.arange(n) % 1000)
    assert len(sio.frame_split(clip(480))) == 2
    frames = sio.frame_split(clip(250))
    assert len(frames) == 2 and frames[1].padded and not frames[0].padded
    assert np.all(frames[1].samples[10:] == 0) and len(frames[1].samples[10:]) == 230
    assert sio.frame_split(clip(0)) == []
    with pytest.raises(UnsupportedWavError):
        sio.frame_split(sio.WavClip(16000, 1, np.zeros(480)))


def test_matrix_round_trip(tmp_path):
    m = generate(12345678901234567890)
    sio.write_matrix(m, tmp_path / "m.m3dm")
    raw = (tmp_path / "m.m3dm").read_bytes()
    back = sio.read_matrix(tmp_path / "m.m3dm")
    assert back == m and sio.matrix_bytes(back) == raw and len(raw) == 529


def test_matrix_rejects_invalid_cells():
    data = bytearray(sio.matrix_bytes(generate(0)))
    data[17], data[18] = data[18], data[17]
    with pytest.raises(MatrixFormatError):
        sio.parse_matrix(bytes(data))
    assert not sio.parse_matrix(bytes(data), check=False).is_valid
    data[17] = 200
    with pytest.raises(MatrixFormatError):
        sio.parse_matrix(bytes(data), check=False)


def test_codebook_round_trip(tmp_path):
    cb = make_synthetic_codebook(9)
    sio.write_codebook(cb, tmp_path / "c.lspc")
    back = sio.read_codebook(tmp_path / "c.lspc")
    assert all(np.array_equal(a, b) for a, b in zip(cb.subs, back.subs))
    assert sio.codebook_bytes(back) == (tmp_path / "c.lspc").read_bytes()
    with pytest.raises(CodebookFormatError):
        sio.parse_codebook(sio.codebook_bytes(cb)[:-8])


def test_index_stream_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    idx = [IndexTriple(*map(int, rng.integers(0, 256, 3))) for _ in range(300)]
    sio.write_index_stream(idx, tmp_path / "s.lspi")
    raw = (tmp_path / "s.lspi").read_bytes()
    assert raw[:8] == b"LSPIDX01" and struct.unpack("<I", raw[8:12])[0] == 300
    assert sio.read_index_stream(tmp_path / "s.lspi") == idx
    assert sio.parse_index_stream(sio.index_stream_bytes([])) == []
    with pytest.raises(IndexStreamFormatError):
        sio.parse_index_stream(raw[:-1])


@pytest.mark.parametrize("parse, data, error", [
    (sio.parse_wav, sio.wav_bytes(sio.WavClip(8000, 1, np.zeros(10))), WavParseError),
    (sio.parse_matrix, sio.matrix_bytes(generate(0)), MatrixFormatError),
    (sio.parse_codebook, sio.codebook_bytes(make_synthetic_codebook(0)), CodebookFormatError),
    (sio.parse_index_stream, sio.index_stream_bytes([(1, 2, 3)]), IndexStreamFormatError),
])
def test_bad_magic_rejected(parse, data, error):
    corrupted = b"XXXX" + data[4:]
    with pytest.raises(error) as err:
        parse(corrupted)
    # each container raises its own error class, never a sibling's
    others = {WavParseError, MatrixFormatError, CodebookFormatError, IndexStreamFormatError}
    assert not any(isinstance(err.value, o) for o in others - {error})
    assert isinstance(err.value, FormatError)


def test_config():
    cfg = sio.parse_config("predictor = 0.5\n# comment\np_dc = " +
                           ", ".join(str(0.25 * k) for k in range(1, 11)))
    assert cfg.predictor == 0.5 and np.allclose(cfg.dc, 0.25 * np.arange(1, 11))
    assert sio.parse_config("").predictor == 0.375
    for bad in ("predictor 0.5", "p_dc = 1, 2", "colour = blue", "predictor = x",
                "p_dc = " + ", ".join(["1"] * 10)):
        with pytest.raises(ConfigurationError):
            sio.parse_config(bad)
