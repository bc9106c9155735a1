"""Entry point: render figures from JSON spec files."""

from __future__ import annotations

import argparse

from .render import FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gogrow-figure",
        description="Render a figure from harness CSV outputs")
    parser.add_argument("--spec", required=True, action="append",
                        help="JSON figure spec (repeatable)")
    args = parser.parse_args(argv)
    for spec_path in args.spec:
        out = render(FigureSpec.from_json(spec_path))
        print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
