"""Command line: python -m figs render spec.json [spec2.json ...]"""

import json
import sys

from .render import render


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) < 2 or argv[0] != "render":
        print("usage: python -m figs render <spec.json> [...]", file=sys.stderr)
        return 2
    for spec_path in argv[1:]:
        meta = render(spec_path)
        print(json.dumps(meta))
    return 0


if __name__ == "__main__":
    sys.exit(main())
