"""`mirrorqed-plot <figure-spec.json>`: render one figure from result CSVs."""

from __future__ import annotations

import sys

from .figspec import SchemaError, load_spec
from .render import render


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1 or argv[0] in ("-h", "--help"):
        print("usage: mirrorqed-plot <figure-spec.json>", file=sys.stderr)
        return 2
    try:
        spec = load_spec(argv[0])
        out = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
