"""Command-line front-end.

Subcommands: compress, oracle, cost, synth, report.
Exit codes: 0 success; 1 oracle mismatch; 2 malformed input file;
3 invalid flags or arguments.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import engine, oracle, synth
from .formats import (
    read_ttok,
    stats_document,
    write_stats,
    write_ttkz,
    write_ttok,
)
from .model import FormatError, FusionConfig, GridShape, TtfError, parse_anchor
from .report import DEFAULT_THRESHOLDS, render_report

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_BAD_INPUT = 2
EXIT_BAD_FLAGS = 3

SIM_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags by default; the contract says 3.
    def error(self, message):
        self.exit(EXIT_BAD_FLAGS, f"{self.prog}: error: {message}\n")


def _parse_grid_arg(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}")


def _parse_motion(text: str):
    s = text.strip().lower()
    if s == "static":
        return synth.Static()
    if s.startswith("shift:"):
        dy, dx = (int(v) for v in s[len("shift:"):].split(","))
        return synth.Shift(dy, dx)
    if s.startswith("walk:"):
        return synth.RandomWalk(int(s[len("walk:"):]))
    raise argparse.ArgumentTypeError(
        f"expected static | shift:DY,DX | walk:S, got {text!r}"
    )


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ttf", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", parents=[], help="compress a TTOK file")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("-t", "--threshold", type=float, required=True)
    c.add_argument("-a", "--anchor", default="auto",
                   help="auto | first | last | <frame index>")
    c.add_argument("-r", "--radius", type=int, default=1)
    c.add_argument("--stats", help="write a stats JSON document here")
    c.add_argument("-T", "--text-tokens", type=int, default=0)
    c.add_argument("--workers", type=int, default=1)

    o = sub.add_parser("oracle", help="compare the engine to a brute-force reference")
    o.add_argument("input")
    o.add_argument("-a", "--anchor", default="auto")
    o.add_argument("-r", "--radius", type=int, default=1)
    o.add_argument("--mode", choices=("window", "global"), default="window")

    k = sub.add_parser("cost", help="print a matching-cost report as JSON")
    k.add_argument("--frames", type=int, required=True)
    k.add_argument("--grid", type=_parse_grid_arg, required=True)
    k.add_argument("--channels", type=int, required=True)
    k.add_argument("-r", "--radius", type=int, default=1)
    k.add_argument("--scheme", choices=("local", "global"), default="local")

    g = sub.add_parser("synth", help="generate a synthetic clip")
    g.add_argument("output")
    g.add_argument("--motion", type=_parse_motion, default=synth.Static())
    g.add_argument("--frames", type=int, default=4)
    g.add_argument("--grid", type=_parse_grid_arg, default=(4, 4))
    g.add_argument("--channels", type=int, default=8)
    g.add_argument("--batch", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--fresh", action="store_true",
                   help="revealed border cells get new dissimilar tokens")
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--ground-truth",
                   help="ground-truth JSON path (default: OUTPUT.gt.json)")

    rp = sub.add_parser("report", help="threshold sweep CSV plus figures")
    rp.add_argument("input")
    rp.add_argument("--out-dir", required=True)
    rp.add_argument("-a", "--anchor", default="auto")
    rp.add_argument("-r", "--radius", type=int, default=1)
    rp.add_argument("--thresholds", type=float, nargs="+",
                    default=list(DEFAULT_THRESHOLDS))
    return p


def _cmd_compress(args) -> int:
    config = FusionConfig(threshold=args.threshold, radius=args.radius,
                          anchor=args.anchor)
    if args.text_tokens < 0:
        raise TtfError("text token count must be >= 0")
    if args.workers < 1:
        raise TtfError("workers must be >= 1")
    grid = read_ttok(args.input)
    result = engine.compress(grid, config, workers=args.workers)
    write_ttkz(args.output, result, grid.shape, config.threshold, config.radius)
    if args.stats:
        write_stats(args.stats,
                    stats_document(result, grid.shape, config, args.text_tokens))
    s = grid.shape
    print(f"anchor={result.anchor} kept={result.kept_total}/{s.F * s.N} "
          f"rho={result.rho}")
    return EXIT_OK


def compare_matches(got, ref, mode: str):
    """Mismatch accounting between an engine result and a reference.

    Window mode shares tie rules with the engine, so any dst difference is a
    mismatch. Global mode tie-breaks differently (smallest index), so dst
    differences with equal similarity are counted separately as ties.
    """
    delta = np.abs(got.best_sim - ref.best_sim)
    max_delta = float(delta.max()) if delta.size else 0.0
    dst_diff = got.dst != ref.dst
    if mode == "window":
        mism = dst_diff
        ties = np.zeros_like(dst_diff)
    else:
        sim_close = (np.abs(got.best_sim - ref.best_sim) <= SIM_TOL).all(axis=0)
        ties = dst_diff & sim_close
        mism = dst_diff & ~sim_close
    return int(mism.sum()), int(ties.sum()), max_delta, mism


def _cmd_oracle(args) -> int:
    grid = read_ttok(args.input)
    a = engine.select_anchor(grid, parse_anchor(args.anchor))
    got = engine.match_local(grid, a, args.radius)
    if args.mode == "window":
        ref = oracle.brute_force_window(grid, a, args.radius)
    else:
        ref = oracle.brute_force_global(grid, a)
    n_mism, n_ties, max_delta, mism = compare_matches(got, ref, args.mode)
    print(f"mismatches={n_mism} ties={n_ties} max_delta_sim={max_delta:.3e}")
    if n_mism > 0:
        k, i = np.argwhere(mism)[0]
        print(f"first mismatch at (k={k}, i={i}): "
              f"engine dst={got.dst[k, i]} reference dst={ref.dst[k, i]}")
        return EXIT_MISMATCH
    if max_delta > SIM_TOL:
        print(f"similarity deviation exceeds {SIM_TOL}")
        return EXIT_MISMATCH
    return EXIT_OK


def _cmd_cost(args) -> int:
    h, w = args.grid
    shape = GridShape(1, args.frames, h, w, args.channels)
    scheme = oracle.LOCAL_WINDOW if args.scheme == "local" else oracle.GLOBAL_MATRIX
    report = oracle.estimate_cost(shape, scheme, radius=args.radius)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def _cmd_synth(args) -> int:
    h, w = args.grid
    spec = synth.SynthSpec(
        shape=GridShape(args.batch, args.frames, h, w, args.channels),
        motion=args.motion, fresh_content=args.fresh,
        noise_sigma=args.noise, seed=args.seed,
    )
    grid, gt = synth.generate(spec)
    write_ttok(args.output, grid)
    gt_path = args.ground_truth or args.output + ".gt.json"
    with open(gt_path, "w") as f:
        json.dump(gt.to_dict(), f)
        f.write("\n")
    print(f"wrote {args.output} ({grid.shape}) and {gt_path}")
    return EXIT_OK


def _cmd_report(args) -> int:
    config = FusionConfig(threshold=1.0, radius=args.radius, anchor=args.anchor)
    for t in args.thresholds:
        if not (-1.0 <= t <= 1.0):
            raise TtfError(f"threshold {t} outside [-1, 1]")
    grid = read_ttok(args.input)
    out = render_report(grid, config, args.out_dir,
                        thresholds=sorted(args.thresholds))
    print(f"report written to {args.out_dir} (anchor={out['anchor']})")
    return EXIT_OK


_COMMANDS = {
    "compress": _cmd_compress,
    "oracle": _cmd_oracle,
    "cost": _cmd_cost,
    "synth": _cmd_synth,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FormatError as e:
        print(f"ttf: malformed input: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except FileNotFoundError as e:
        print(f"ttf: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (TtfError, ValueError) as e:
        print(f"ttf: {e}", file=sys.stderr)
        return EXIT_BAD_FLAGS


if __name__ == "__main__":
    sys.exit(main())
