import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lspsteg import metrics, synth
from lspsteg.errors import CapacityError, DomainError
from lspsteg.lsp_pipeline import SpeechFrame, make_synthetic_codebook
from lspsteg.magic_matrix import generate
from lspsteg.stego_engine import SecretPayload, cover_lsps


@pytest.fixture(scope="module")
def config():
    return metrics.CompareConfig(generate(0), make_synthetic_codebook(0))


@pytest.fixture(scope="module")
def utterance():
    return synth.utterance(100, 42)


@pytest.fixture(scope="module")
def rows(config, utterance):
    return metrics.compare_schemes(utterance, SecretPayload(b"compare me" * 20), config)


def test_snr_values():
    assert metrics.snr([2, 2, 2, 2], [2, 2, 2, 0]) == pytest.approx(10 * np.log10(4), abs=1e-3)
    assert metrics.snr([2, 2, 2, 2], [2, 2, 2, 0]) == pytest.approx(6.0206, abs=1e-3)
    assert metrics.snr([1, -3, 2], [1, -3, 2]) == 300.0
    rng = np.random.default_rng(0)
    ref = rng.normal(size=1000)
    noise = rng.normal(size=1000)
    noise *= np.sqrt(np.sum(ref ** 2) / np.sum(noise ** 2))
    assert abs(metrics.snr(ref, ref + noise)) < 1e-9


def test_snr_errors():
    with pytest.raises(DomainError):
        metrics.snr([1, 2], [1, 2, 3])
    with pytest.raises(DomainError):
        metrics.snr([], [])
    with pytest.raises(DomainError):
        metrics.snr([0, 0], [1, 1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50),
       st.floats(0.01, 100), st.booleans())
def test_snr_scale_invariant(vals, c, neg):
    ref = np.array(vals)
    if np.sum(ref ** 2) < 1e-6:
        return
    test = ref * 0.9 + 0.1
    c = -c if neg else c
    assert metrics.snr(c * ref, c * test) == pytest.approx(metrics.snr(ref, test), abs=1e-9)


def test_perfect_reconstruction(utterance):
    frames = metrics._as_frames(utterance)
    lsps, _ = cover_lsps(frames)
    out = metrics.resynthesize(frames, lsps)
    rms = np.sqrt(np.mean((out - utterance.astype(float)) ** 2))
    assert rms < 1e-6


def test_silence_in_silence_out():
    frames = [SpeechFrame(np.zeros(240, np.int16)) for _ in range(4)]
    lsps, _ = cover_lsps(frames)
    assert np.all(metrics.resynthesize(frames, lsps) == 0)


def test_resynthesize_checks_lengths_and_lsp(utterance):
    frames = metrics._as_frames(utterance)[:3]
    lsps, _ = cover_lsps(frames)
    with pytest.raises(DomainError):
        metrics.resynthesize(frames, lsps[:2])
    with pytest.raises(DomainError):
        metrics.resynthesize(frames, [lsps[0], lsps[1][::-1], lsps[2]])


def test_none_row_is_self_comparison(rows):
    none = next(r["report"] for r in rows if r["scheme"] == "none")
    assert none.relative_error_increase == 0
    assert none.snr_db == 300.0
    assert none.mean_weighted_error_clean == none.mean_weighted_error_stego
    assert none.displacement_histogram.sum() == 0


def test_capacity_column(rows):
    caps = {r["scheme"]: r["report"].capacity_bps for r in rows}
    assert caps == {"none": 0.0, "magic3d": 200.0, "lsb2": 200.0, "parity_qim": 100.0}


def test_histogram_mass(rows):
    for r in rows:
        q = r["report"]
        assert q.displacement_histogram.sum() == q.embedded_frames
    magic = next(r["report"] for r in rows if r["scheme"] == "magic3d")
    assert len(magic.displacement_histogram) == 28
    assert magic.embedded_frames == magic.frames == 100


def test_histogram_zero_bin_counts_free_frames():
    class Rec:
        def __init__(self, d):
            self.sq_distance = d
    h = metrics.displacement_histogram([Rec(0), Rec(0), Rec(5), Rec(27)])
    assert h[0] == 2 and h[5] == 1 and h[27] == 1 and h.sum() == 4


def test_stego_snr_finite_and_positive(rows):
    for r in rows:
        if r["scheme"] != "none":
            assert np.isfinite(r["report"].snr_db) and r["report"].snr_db > 0


def test_short_cover_is_capacity_error(config):
    with pytest.raises(CapacityError):
        metrics.compare_schemes(np.zeros(100, np.int16), SecretPayload(b"x"), config)


def test_csv_and_plot_files(tmp_path, rows, config, utterance):
    metrics.write_csv(rows, tmp_path / "r.csv")
    with open(tmp_path / "r.csv") as fh:
        table = list(csv.DictReader(fh))
    assert list(table[0]) == metrics.CSV_HEADER
    assert [t["scheme"] for t in table] == ["none", "magic3d", "lsb2", "parity_qim"]
    metrics.write_histogram_data(rows, tmp_path / "h.dat")
    lines = (tmp_path / "h.dat").read_text().splitlines()
    assert lines[0].split()[1:] == ["sq_distance", "magic3d", "lsb2", "parity_qim"]
    curves = metrics.snr_rate_curve(utterance, SecretPayload(b"abc"), config, rates=(0.5, 1.0))
    assert [bps for bps, _ in curves["parity_qim"]] == [50.0, 100.0]
    metrics.write_curve_data(curves, tmp_path / "c.dat")
    assert "magic3d 200" in (tmp_path / "c.dat").read_text()


def test_multi_utterance_rows(config):
    corpus = synth.corpus(3, 30)
    rows = metrics.compare_schemes(corpus, SecretPayload(b"hi"), config)
    assert len(rows) == 12
    assert {r["utterance"] for r in rows} == {0, 1, 2}
    s = metrics.summarize(rows)
    assert s["none"]["relative_error_increase"] == 0


def test_corpus_is_deterministic():
    a, b = synth.corpus(2, 10), synth.corpus(2, 10)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(len(x) == 2400 and x.dtype == np.int16 for x in a)
