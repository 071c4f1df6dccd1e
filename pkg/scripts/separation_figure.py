"""Sloped vs near-vertical-wall stream functions and their main zero-isolines."""
import argparse
import json

from slopegyre.cli_io import _jsonable, emit_separation_figure, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figure")
    ap.add_argument("--config", help="optional INI config for the sloped run")
    ap.add_argument("--no-image", action="store_true")
    args = ap.parse_args()
    rc = load_config(args.config) if args.config else None
    summary = emit_separation_figure(args.out, rc, image=not args.no_image)
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
