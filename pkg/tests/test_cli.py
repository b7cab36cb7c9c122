import csv
import subprocess
import sys
import time

import numpy as np
import pytest

from lspsteg import speech_io, synth
from lspsteg.cli import main
from lspsteg.magic_matrix import generate, validate


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    speech_io.write_wav(speech_io.WavClip(8000, 1, synth.utterance(100, 1)), d / "cover.wav")
    speech_io.write_wav(speech_io.WavClip(8000, 1, synth.utterance(10, 1)), d / "short.wav")
    (d / "secret.bin").write_bytes(np.random.default_rng(0).bytes(64))
    (d / "empty.bin").write_bytes(b"")
    return d


def test_gen_and_validate(work, capsys):
    assert main(["gen-matrix", "--seed", "0", "--out", str(work / "a.m3dm")]) == 0
    assert main(["gen-matrix", "--seed", "0", "--out", str(work / "b.m3dm")]) == 0
    assert (work / "a.m3dm").read_bytes() == (work / "b.m3dm").read_bytes()
    assert validate(speech_io.read_matrix(work / "a.m3dm")).passed
    capsys.readouterr()
    assert main(["validate-matrix", str(work / "a.m3dm")]) == 0
    assert "32/32 constraints satisfied" in capsys.readouterr().out


def test_validate_reports_broken_matrix(work, capsys):
    data = bytearray(speech_io.matrix_bytes(generate(0)))
    data[17], data[18] = data[18], data[17]
    (work / "bad.m3dm").write_bytes(bytes(data))
    assert main(["validate-matrix", str(work / "bad.m3dm")]) == 1
    out = capsys.readouterr().out
    assert "30/32 constraints satisfied" in out and "plane z=0" in out


def test_embed_extract_round_trip(work, capsys):
    rc = main(["embed", "--cover", str(work / "cover.wav"), "--secret", str(work / "secret.bin"),
               "--seed", "5", "--out", str(work / "s.lspi"), "--wav-out", str(work / "s.wav")])
    assert rc == 0
    out = capsys.readouterr().out
    # 512 bits -> 86 payload frames + 6 header frames
    assert "carrying data: 92" in out and "SNR" in out
    assert len(speech_io.read_wav(work / "s.wav").samples) == 24000
    assert main(["extract", "--stego", str(work / "s.lspi"), "--seed", "5",
                 "--out", str(work / "r.bin")]) == 0
    assert (work / "r.bin").read_bytes() == (work / "secret.bin").read_bytes()


def test_matrix_file_as_key(work):
    main(["gen-matrix", "--seed", "77", "--out", str(work / "k.m3dm")])
    args = ["--matrix", str(work / "k.m3dm")]
    assert main(["embed", "--cover", str(work / "cover.wav"), "--secret",
                 str(work / "secret.bin"), "--out", str(work / "k.lspi")] + args) == 0
    assert main(["extract", "--stego", str(work / "k.lspi"), "--out",
                 str(work / "k.bin"), "--seed", "77"]) == 0
    assert (work / "k.bin").read_bytes() == (work / "secret.bin").read_bytes()


def test_capacity_error(work, capsys):
    rc = main(["embed", "--cover", str(work / "short.wav"), "--secret", str(work / "secret.bin"),
               "--seed", "5", "--out", str(work / "x.lspi")])
    assert rc == 3
    err = capsys.readouterr().err
    assert "552 bits" in err and "60 bits" in err


def test_empty_secret(work):
    assert main(["embed", "--cover", str(work / "cover.wav"), "--secret",
                 str(work / "empty.bin"), "--seed", "5", "--out", str(work / "e.lspi")]) == 0
    assert len(speech_io.read_index_stream(work / "e.lspi")) == 100
    assert main(["extract", "--stego", str(work / "e.lspi"), "--seed", "5",
                 "--out", str(work / "e.out")]) == 0
    assert (work / "e.out").read_bytes() == b""


def test_wrong_seed(work):
    main(["embed", "--cover", str(work / "cover.wav"), "--secret", str(work / "secret.bin"),
          "--seed", "5", "--out", str(work / "w.lspi")])
    for seed in range(6, 16):
        rc = main(["extract", "--stego", str(work / "w.lspi"), "--seed", str(seed),
                   "--out", str(work / "w.bin")])
        if rc == 0:
            assert (work / "w.bin").read_bytes() != (work / "secret.bin").read_bytes()
        else:
            assert rc == 4


def test_baseline_schemes(work):
    for scheme in ("lsb2", "parity_qim"):
        secret = work / "small.bin"
        secret.write_bytes(b"0123456789")
        assert main(["embed", "--cover", str(work / "cover.wav"), "--secret", str(secret),
                     "--scheme", scheme, "--out", str(work / f"{scheme}.lspi")]) == 0
        assert main(["extract", "--stego", str(work / f"{scheme}.lspi"), "--scheme", scheme,
                     "--out", str(work / f"{scheme}.out")]) == 0
        assert (work / f"{scheme}.out").read_bytes() == b"0123456789"


def test_usage_and_format_errors(work, capsys):
    assert main(["embed", "--cover", str(work / "cover.wav"), "--secret",
                 str(work / "secret.bin"), "--out", str(work / "x.lspi")]) == 2
    assert main(["extract", "--stego", str(work / "cover.wav"), "--seed", "1",
                 "--out", str(work / "x")]) == 5
    assert main(["embed", "--cover", str(work / "nope.wav"), "--secret",
                 str(work / "secret.bin"), "--seed", "1", "--out", str(work / "x")]) == 5
    with pytest.raises(SystemExit) as exc:
        main(["embed"])
    assert exc.value.code == 2


def test_capacity_command(work, capsys):
    assert main(["capacity", "--cover", str(work / "cover.wav")]) == 0
    out = capsys.readouterr().out
    assert "magic3d" in out and "200" in out and "100" in out
    assert " 70" in out  # (100 - 6) * 6 // 8


def test_analyze_synthetic_corpus(work, capsys):
    t0 = time.perf_counter()
    rc = main(["analyze", "--seed", "0", "--csv", str(work / "a.csv"),
               "--plot-dir", str(work / "plots")])
    elapsed = time.perf_counter() - t0
    assert rc == 0
    assert elapsed < 10.0, elapsed
    with open(work / "a.csv") as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 20 * 4
    caps = {t["scheme"]: t["capacity_bps"] for t in table}
    assert caps == {"none": "0", "magic3d": "200", "lsb2": "200", "parity_qim": "100"}
    assert all(float(t["relative_error_increase"]) == 0 for t in table if t["scheme"] == "none")
    assert (work / "plots" / "snr_vs_rate.dat").exists()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "lspsteg", "capacity"],
                         capture_output=True, text=True, check=True).stdout
    assert "parity_qim" in out
