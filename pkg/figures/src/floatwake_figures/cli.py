"""figures <figure-id> --in <dir> --out <dir>

Renders one figure (or `all`) from staged simulation outputs using the
documented input file names.
"""

from __future__ import annotations

import argparse
import sys

from .jobs import FIGURE_IDS, FigureInputError, default_job, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from floatwake CSV/JSON outputs")
    parser.add_argument("figure_id", choices=FIGURE_IDS + ("all",))
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the staged input files")
    parser.add_argument("--out", dest="out_dir", default=".",
                        help="directory for the rendered images")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    ids = FIGURE_IDS if args.figure_id == "all" else (args.figure_id,)
    try:
        for figure_id in ids:
            path = render(default_job(figure_id, args.in_dir, args.out_dir))
            print(path)
    except FigureInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
