"""Command-line entry points for batch plot rendering.

  plot-boundaries <dir> --times t1 t2 ...   frames from a snapshot directory
  plot-field <file> [--snapshot SNAP]       quiver plot of a field file
"""

from __future__ import annotations

import argparse
import sys

from .parse import ParseError, parse_field, parse_snapshot, snapshot_series
from .render import plot_boundaries, plot_field, resolve_overlay


def main_boundaries(argv=None) -> int:
    p = argparse.ArgumentParser(prog="plot-boundaries")
    p.add_argument("directory", help="directory holding snap_*.txt files")
    p.add_argument("--times", type=float, nargs="*", default=None,
                   help="times to render (default: every snapshot)")
    p.add_argument("--out-dir", default=None)
    args = p.parse_args(argv)
    try:
        series = snapshot_series(args.directory)
        times = args.times if args.times is not None \
            else [s.t for s in series]
        out = args.out_dir or args.directory
        paths = plot_boundaries(series, times, out)
    except (ParseError, OSError) as e:
        print(f"plot-boundaries: {e}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


def main_field(argv=None) -> int:
    p = argparse.ArgumentParser(prog="plot-field")
    p.add_argument("field_file")
    p.add_argument("--snapshot", default=None,
                   help="snapshot file for the boundary overlay")
    p.add_argument("--out", default=None)
    args = p.parse_args(argv)
    try:
        grid = parse_field(args.field_file)
        overlay = (parse_snapshot(args.snapshot) if args.snapshot
                   else resolve_overlay(grid, args.field_file))
        out = args.out or (args.field_file.rsplit(".", 1)[0] + ".png")
        plot_field(grid, out, snapshot=overlay)
    except (ParseError, OSError) as e:
        print(f"plot-field: {e}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main_boundaries())
