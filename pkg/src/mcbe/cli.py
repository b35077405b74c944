"""``mcbe`` command line: features -> train -> optimize -> report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import worker_count
from .eliminate import STANDARD_CONFIGS, EliminationConfig, estimate_ladder, write_rd_csv
from .energy import EnergyParams, report
from .errors import MCBEError
from .features import segment_features, write_features_csv, read_features_csv
from .forest import ModelBank, group_samples, load_bank, read_training_csv, save_bank, train_forest
from .hls import write_playlist
from .ladder import HLS_RESOLUTIONS, Resolution, dump_json, load_ladder, load_rung_set
from .y4m import Y4MReader, segment_stream

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _vmax(text: str) -> float:
    v = _positive_float(text)
    if v > 100:
        raise argparse.ArgumentTypeError(f"must be in (0, 100], got {text}")
    return v


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return p


def cmd_features(args) -> int:
    if args.input == "-":
        stream = sys.stdin.buffer
        prefix = args.id_prefix or "stdin"
    else:
        stream = open(_require_file(args.input), "rb")
        prefix = args.id_prefix or Path(args.input).stem
    with stream:
        reader = Y4MReader(stream)
        fps = args.fps or float(reader.header.fps)
        segments = segment_stream(reader, fps, args.seg_seconds, prefix)
        workers = worker_count(args.threads)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                rows = list(pool.map(segment_features, segments))
        else:
            rows = [segment_features(s) for s in segments]
    write_features_csv(args.output or sys.stdout, rows)
    return EXIT_OK


def cmd_train(args) -> int:
    samples = read_training_csv(_require_file(args.training_csv))
    if not samples:
        raise MCBEError(f"{args.training_csv}: no training rows")
    allowed = None
    if args.resolutions:
        allowed = frozenset(Resolution.parse(t) for t in args.resolutions.split(","))
    bank = ModelBank(resolutions=allowed)
    for (codec, res), group in group_samples(samples).items():
        if len(group) < 2:
            raise MCBEError(f"only {len(group)} sample(s) for {codec}@{res.key}; need at least 2")
        model = train_forest(group, seed=args.seed, n_jobs=args.threads)
        X = np.array([s.features for s in group])
        y = np.array([s.target_vmaf for s in group])
        mae = float(np.mean(np.abs(model.predict_many(X) - y)))
        bank.add(codec, res, model)
        print(f"{codec}\t{res.key}\tsamples={len(group)}\ttrain_mae={mae:.4f}")
    save_bank(bank, args.output)
    return EXIT_OK


def cmd_optimize(args) -> int:
    ladder = load_ladder(_require_file(args.ladder))
    rows = read_features_csv(_require_file(args.features))
    bank = load_bank(_require_file(args.bank))
    if args.segment is not None:
        rows = [r for r in rows if r.segment_id == args.segment]
        if not rows:
            raise MCBEError(f"segment {args.segment!r} not found in {args.features}")
    if len(rows) != 1:
        raise UsageError(f"{args.features} has {len(rows)} segments; choose one with --segment")
    vmax = args.vmax
    if vmax is None:
        pairs = dict(STANDARD_CONFIGS)
        if args.jnd not in pairs:
            raise UsageError(f"no standard --vmax for --jnd {args.jnd:g}; pass --vmax explicitly")
        vmax = pairs[args.jnd]
    try:
        cfg = EliminationConfig(args.jnd, vmax, literal_step1=args.literal_step1)
    except ValueError as e:
        raise UsageError(str(e)) from None

    result = estimate_ladder(ladder, rows[0], bank, cfg)
    dump_json(result.to_dict(), args.output)
    if args.playlist:
        write_playlist(args.playlist, result)
    if args.rd_csv:
        write_rd_csv(args.rd_csv, result)
    return EXIT_OK


def cmd_report(args) -> int:
    baseline = load_rung_set(_require_file(args.baseline))
    optimized = load_rung_set(_require_file(args.optimized))
    params = EnergyParams.load(_require_file(args.params))
    rep = report(baseline, optimized, params)
    out = Path(args.output)
    rep.write_csv(out)
    rep.write_json(args.json or out.with_suffix(".json"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mcbe", description="Energy-aware multi-codec bitrate-ladder estimation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    f = sub.add_parser("features", formatter_class=fmt,
                       help="extract E_Y, h, L_Y per segment from a Y4M file")
    f.add_argument("input", help="8-bit 4:2:0 Y4M file, or - for standard input")
    f.add_argument("-o", "--output", help="features CSV (default: standard output)")
    f.add_argument("--fps", type=_positive_float, default=None,
                   help="frame rate override (default: the Y4M header's F tag)")
    f.add_argument("--seg-seconds", type=_positive_float, default=4.0, help="segment duration in seconds")
    f.add_argument("--id-prefix", default=None, help="segment id prefix (default: input file stem)")
    f.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: MCBE_THREADS or CPU count)")
    f.set_defaults(func=cmd_features)

    t = sub.add_parser("train", formatter_class=fmt,
                       help="train one random forest per (codec, resolution)")
    t.add_argument("training_csv",
                   help="CSV with segment_id,codec,width,height,bitrate_bps,E_Y,h,L_Y,vmaf")
    t.add_argument("-o", "--output", required=True, help="model bank JSON to write")
    t.add_argument("--seed", type=int, default=0, help="training seed")
    t.add_argument("--resolutions", default=None,
                   help="comma-separated allowed resolutions, e.g. "
                        + ",".join(HLS_RESOLUTIONS) + " or 1920x1080 (default: any)")
    t.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: MCBE_THREADS or CPU count)")
    t.set_defaults(func=cmd_train)

    o = sub.add_parser("optimize", formatter_class=fmt,
                       help="predict VMAF and eliminate redundant representations")
    o.add_argument("ladder", help="ladder JSON")
    o.add_argument("features", help="features CSV")
    o.add_argument("bank", help="model bank JSON")
    o.add_argument("--jnd", type=_positive_float, default=6.0, help="JND threshold in VMAF points")
    o.add_argument("--vmax", type=_vmax, default=None,
                   help="perceptually lossless VMAF ceiling (default: 98/96/94 for JND 2/4/6)")
    o.add_argument("--segment", default=None, help="segment id to use when the CSV holds several")
    o.add_argument("--literal-step1", action="store_true",
                   help="compare each rung with its immediate predecessor instead of the last kept rung")
    o.add_argument("-o", "--output", required=True, help="optimized ladder JSON")
    o.add_argument("--playlist", default=None, help="also write an HLS master playlist (M3U8)")
    o.add_argument("--rd-csv", default=None, help="also write codec,bitrate_bps,vmaf,retained CSV")
    o.set_defaults(func=cmd_optimize)

    r = sub.add_parser("report", formatter_class=fmt,
                       help="energy and size deltas between a baseline and an optimized ladder")
    r.add_argument("baseline", help="ladder JSON or optimized ladder JSON")
    r.add_argument("optimized", help="optimized ladder JSON (or ladder JSON)")
    r.add_argument("params", help="energy parameter JSON")
    r.add_argument("-o", "--output", required=True, help="report CSV")
    r.add_argument("--json", default=None, help="report JSON (default: CSV path with .json suffix)")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"mcbe {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"mcbe {args.command}: {e}", file=sys.stderr)
        return EXIT_IO
    except (MCBEError, ValueError) as e:
        print(f"mcbe {args.command}: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"mcbe {args.command}: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
