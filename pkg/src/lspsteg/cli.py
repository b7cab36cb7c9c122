"""Command-line front end.

Exit status: 0 success, 1 matrix validation failure, 2 usage error,
3 capacity exceeded, 4 integrity error (wrong key or damaged stream),
5 unreadable or malformed input file.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import metrics, speech_io, synth
from .errors import CapacityError, FormatError, IntegrityError, StegoError
from .lsp_pipeline import FRAME_SECONDS, QuantConfig, make_synthetic_codebook
from .magic_matrix import generate, validate
from .stego_engine import (STEGO_SCHEMES, SecretPayload, bits_per_frame, capacity_bps,
                           cover_lsps, decode_stream, embed_symbols, embed_stream,
                           extract_stream,
                           header_symbols, max_payload_bytes)

EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_INTEGRITY = 4
EXIT_FORMAT = 5
DEFAULT_CODEBOOK_SEED = 0


class UsageError(Exception):
    pass


def _matrix(args, required=True):
    if args.matrix:
        return speech_io.read_matrix(args.matrix)
    if args.seed is None:
        if required:
            raise UsageError("--seed or --matrix is required")
        return generate(0)
    return generate(args.seed)


def _codebook(args):
    if args.codebook:
        return speech_io.read_codebook(args.codebook)
    return make_synthetic_codebook(DEFAULT_CODEBOOK_SEED)


def _config(args):
    return speech_io.read_config(args.config) if args.config else QuantConfig()


def cmd_gen_matrix(args):
    m = generate(args.seed)
    report = validate(m)
    print(report.summary())
    if not report.passed:
        for v in report.violations:
            print(f"  violated: {v}")
        return EXIT_INVALID
    speech_io.write_matrix(m, args.out)
    print(f"wrote {args.out} (seed {m.seed})")
    return 0


def cmd_validate_matrix(args):
    path = args.path or args.matrix
    if not path:
        raise UsageError("give a matrix file")
    cells = speech_io.parse_matrix(Path(path).read_bytes(), check=False).cells
    report = validate(cells)
    print(report.summary())
    for v in report.violations:
        print(f"  violated: {v}")
    return 0 if report.passed else EXIT_INVALID


def cmd_embed(args):
    m = _matrix(args) if args.scheme == "magic3d" else None
    cb = _codebook(args)
    config = _config(args)
    frames = speech_io.frame_split(speech_io.read_wav(args.cover))
    payload = SecretPayload(Path(args.secret).read_bytes())
    indices, records = embed_stream(frames, payload, m, cb, args.scheme, config)
    speech_io.write_index_stream(indices, args.out)

    width = bits_per_frame(args.scheme)
    usable = sum(not f.padded for f in frames)
    used = len(records)
    print(f"frames: {len(frames)} ({usable} usable), carrying data: {used} "
          f"({header_symbols(args.scheme)} header)")
    print(f"payload: {payload.length_bytes} bytes, {used * width} of {usable * width} bits used, "
          f"{capacity_bps(args.scheme):g} bit/s")
    if records:
        print(f"mean squared index displacement: "
              f"{np.mean([r.sq_distance for r in records]):.3f}")

    lsps, _ = cover_lsps(frames)
    residuals = metrics.lpc_residual(frames)
    clean = embed_symbols(lsps, [], "none", cb, config=config)
    # decoder-side reconstruction, as a receiver would see it
    stego_speech = metrics.synthesize(residuals, decode_stream(indices, cb, config))
    clean_speech = metrics.synthesize(residuals, clean.decoded)
    if np.any(clean_speech):
        print(f"SNR (stego vs clean resynthesis): {metrics.snr(clean_speech, stego_speech):.2f} dB")
    if args.wav_out:
        pcm = np.clip(np.round(stego_speech), -32768, 32767).astype(np.int16)
        speech_io.write_wav(speech_io.WavClip(8000, 1, pcm), args.wav_out)
    print(f"wrote {args.out}")
    return 0


def cmd_extract(args):
    m = _matrix(args) if args.scheme == "magic3d" else None
    indices = speech_io.read_index_stream(args.stego)
    payload = extract_stream(indices, m, args.scheme)
    Path(args.out).write_bytes(payload.data)
    print(f"recovered {payload.length_bytes} bytes -> {args.out}")
    return 0


def _capacity_table(n_frames=None):
    lines = [f"{'scheme':<12}{'bits/frame':>11}{'bit/s':>8}" +
             (f"{'max payload (B)':>17}" if n_frames is not None else "")]
    for s in STEGO_SCHEMES:
        line = f"{s:<12}{bits_per_frame(s):>11}{capacity_bps(s):>8g}"
        if n_frames is not None:
            line += f"{max_payload_bytes(n_frames, s):>17}"
        lines.append(line)
    return "\n".join(lines)


def cmd_capacity(args):
    n = args.frames
    if args.cover:
        n = sum(not f.padded for f in speech_io.frame_split(speech_io.read_wav(args.cover)))
    if n is not None:
        print(f"cover: {n} frames ({n * FRAME_SECONDS:.2f} s)")
    print(_capacity_table(n))
    return 0


def cmd_analyze(args):
    m = _matrix(args, required=False)
    config = metrics.CompareConfig(m, _codebook(args), _config(args))
    if args.cover:
        cover = [speech_io.read_wav(args.cover).samples]
    else:
        cover = synth.corpus(args.utterances, args.frames)
    if args.secret:
        payload = SecretPayload(Path(args.secret).read_bytes())
    else:
        payload = SecretPayload(np.random.default_rng(args.payload_seed).bytes(512))
    rows = metrics.compare_schemes(cover, payload, config)
    if args.csv:
        metrics.write_csv(rows, args.csv)
        print(f"wrote {args.csv}")
    if args.plot_dir:
        out = Path(args.plot_dir)
        out.mkdir(parents=True, exist_ok=True)
        metrics.write_histogram_data(rows, out / "displacement_histogram.dat")
        curves = metrics.snr_rate_curve(cover, payload, config)
        metrics.write_curve_data(curves, out / "snr_vs_rate.dat")
        print(f"wrote plot data to {out}")
    print(f"{'scheme':<12}{'bit/s':>7}{'SNR dB':>10}{'err incr':>11}{'mean d^2':>10}")
    for s, v in metrics.summarize(rows).items():
        print(f"{s:<12}{v['capacity_bps']:>7g}{v['snr_db']:>10.3f}"
              f"{v['relative_error_increase']:>11.4f}{v['mean_sq_distance']:>10.3f}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="lspsteg",
                                description="Hide data in LSP quantization indices.")
    sub = p.add_subparsers(dest="command", required=True)

    def keyed(sp):
        sp.add_argument("--seed", type=int, help="matrix seed (shared stego key)")
        sp.add_argument("--matrix", help="M3DM matrix file instead of --seed")

    def codec(sp):
        sp.add_argument("--codebook", help="LSPC codebook file (default: built-in synthetic)")
        sp.add_argument("--config", help="quantizer config file (key = value)")

    sp = sub.add_parser("gen-matrix", help="generate and store a magic matrix")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_matrix)

    sp = sub.add_parser("validate-matrix", help="check a matrix file")
    sp.add_argument("path", nargs="?")
    sp.add_argument("--matrix")
    sp.set_defaults(func=cmd_validate_matrix)

    sp = sub.add_parser("embed", help="hide a file in a cover WAV")
    sp.add_argument("--cover", required=True)
    sp.add_argument("--secret", required=True)
    sp.add_argument("--out", required=True, help="stego LSPI index stream")
    sp.add_argument("--wav-out", help="also write the resynthesized stego speech")
    sp.add_argument("--scheme", choices=STEGO_SCHEMES, default="magic3d")
    keyed(sp)
    codec(sp)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("extract", help="recover a hidden file")
    sp.add_argument("--stego", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--scheme", choices=STEGO_SCHEMES, default="magic3d")
    keyed(sp)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("analyze", help="compare schemes on a cover or the synthetic corpus")
    sp.add_argument("--cover")
    sp.add_argument("--secret")
    sp.add_argument("--csv")
    sp.add_argument("--plot-dir")
    sp.add_argument("--utterances", type=int, default=20)
    sp.add_argument("--frames", type=int, default=100)
    sp.add_argument("--payload-seed", type=int, default=0)
    keyed(sp)
    codec(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("capacity", help="print hiding capacity per scheme")
    sp.add_argument("--frames", type=int)
    sp.add_argument("--cover")
    sp.set_defaults(func=cmd_capacity)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (FormatError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except StegoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
