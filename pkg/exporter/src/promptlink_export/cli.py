"""Exporter command line.

Exit codes: 0 all records exported, 1 some records skipped, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .encoders import DEFAULT_LAYERS, make_text_encoder, make_vision_encoder
from .export import export_features
from .records import RecordError, read_samples
from .vlm import HfVlm


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="promptlink-export",
        description="encode prompted image-text records into the engine dataset format",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="run the export pipeline")
    p.add_argument("--input", required=True, help="JSON-lines of mention/entity records")
    p.add_argument("--images", required=True, help="base directory for image paths")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--vlm", default=None,
                   help="model path for auxiliary-text generation (default: none)")
    p.add_argument("--layers", default=",".join(str(l) for l in DEFAULT_LAYERS),
                   help="encoder layers tapped for the CLS features")
    p.add_argument("--max-text-len", type=int, default=40)
    p.add_argument("--vision-encoder", default="stub",
                   help='"stub" or a local CLIP model path')
    p.add_argument("--text-encoder", default="stub",
                   help='"stub" or a local BERT model path')
    p.add_argument("--dc", type=int, default=96, help="stub vision feature width")
    p.add_argument("--dt", type=int, default=512, help="stub text feature width")
    p.add_argument("--stroke-width", type=int, default=3)
    p.add_argument("--split", default="export")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        layers = tuple(int(x) for x in args.layers.split(",") if x.strip())
        if len(layers) != 4:
            raise RecordError(f"--layers needs exactly 4 entries, got {args.layers!r}")
        if not Path(args.input).is_file():
            raise RecordError(f"input file not found: {args.input}")
        mentions, entities = read_samples(args.input)
        vision = make_vision_encoder(args.vision_encoder, d_c=args.dc, layers=layers)
        text = make_text_encoder(args.text_encoder, d_t=args.dt,
                                 max_text_len=args.max_text_len)
        vlm = HfVlm(args.vlm) if args.vlm else None
        summary = export_features(
            mentions, entities, args.images, args.out, vision, text, vlm=vlm,
            stroke_width=args.stroke_width, split=args.split,
        )
    except (RecordError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(json.dumps({
        "manifest": str(summary.manifest_path),
        "mentions": summary.n_mentions,
        "entities": summary.n_entities,
        "skipped": [{"id": rid, "reason": reason} for rid, reason in summary.skipped],
        "warnings": summary.warnings,
    }, indent=1))
    return 1 if summary.skipped else 0


if __name__ == "__main__":
    sys.exit(main())
