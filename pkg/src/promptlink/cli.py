"""Command-line surface.

Subcommands: ``train``, ``eval``, ``rank``, ``synth``, ``qa iou``,
``qa kappa``. Exit codes: 0 success, 2 validation error (bad input),
3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checkpoint import load_checkpoint
from .config import HyperConfig
from .data import load_manifest, save_manifest, synth_dataset
from .errors import CheckpointError, LinkerError, ValidationError
from .evaluation import evaluate, rank
from .model import LinkerModel
from .qa import Box, filter_by_iou, fleiss_kappa, iou
from .training import train


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="promptlink",
                                 description="visual-prompt entity-linking engine")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--train", required=True, dest="train_manifest")
    p.add_argument("--dev", required=True, dest="dev_manifest")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="rank candidates and compute Hit@k")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--k", default="1,3,5,10,20", help="comma-separated k values")
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--top", type=int, default=None,
                   help="truncate per-mention lists in the report")

    p = sub.add_parser("rank", help="rank candidates for one mention")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mention", required=True)
    p.add_argument("--top", type=int, default=10)

    p = sub.add_parser("synth", help="generate a planted-signal dataset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mentions", type=int, required=True)
    p.add_argument("--entities", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--dc", type=int, default=16)
    p.add_argument("--dt", type=int, default=16)

    p = sub.add_parser("qa", help="annotation quality statistics")
    qsub = p.add_subparsers(dest="qa_command", required=True)
    q = qsub.add_parser("iou", help="IoU of box pairs plus threshold filtering")
    q.add_argument("--boxes", required=True,
                   help="JSON list of [[x1,y1,x2,y2],[x1,y1,x2,y2]] pairs")
    q.add_argument("--threshold", type=float, default=0.5)
    q = qsub.add_parser("kappa", help="Fleiss kappa of a rating count matrix")
    q.add_argument("--ratings", required=True, help="JSON N x q count matrix")
    return ap


def _load_json(path, what: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read {what} {path}: {e}")


def _cmd_train(args) -> int:
    config = HyperConfig.from_json_file(args.config)
    train_set = load_manifest(args.train_manifest)
    dev_set = load_manifest(args.dev_manifest)
    for w in train_set.warnings + dev_set.warnings:
        print(f"warning: {w}", file=sys.stderr)
    result = train(train_set, dev_set, config, args.out)
    print(json.dumps({
        "best_checkpoint": str(result.best_checkpoint),
        "metrics": str(result.metrics_path),
        "best_dev_hit1": result.state.best_dev_hit1,
    }))
    return 0


def _restore(ckpt_path) -> tuple[LinkerModel, HyperConfig]:
    loaded = load_checkpoint(ckpt_path)
    model = LinkerModel(loaded.state.config, store=loaded.params)
    return model, loaded.state.config


def _cmd_eval(args) -> int:
    model, _ = _restore(args.ckpt)
    dataset = load_manifest(args.data)
    for w in dataset.warnings:
        print(f"warning: {w}", file=sys.stderr)
    try:
        ks = [int(k) for k in args.k.split(",") if k.strip()]
    except ValueError:
        raise ValidationError(f"bad --k list: {args.k!r}")
    if not ks or min(ks) < 1:
        raise ValidationError("--k needs positive integers")
    report = evaluate(model, dataset, ks=ks, report_top=args.top)
    Path(args.report).write_text(
        json.dumps(report.to_dict(), indent=1, sort_keys=True), encoding="utf-8"
    )
    print(json.dumps({str(k): v for k, v in report.hit_at_k.items()}))
    return 0


def _cmd_rank(args) -> int:
    model, _ = _restore(args.ckpt)
    dataset = load_manifest(args.data)
    result = rank(model, dataset, args.mention, top=args.top)
    print(json.dumps({
        "mention_id": result.mention_id,
        "gold": result.gold_entity_id,
        "gold_rank": result.gold_rank,
        "ranking": [
            {"entity_id": e.entity_id, "score": e.score,
             "s_v": e.s_v, "s_t": e.s_t, "s_c": e.s_c}
            for e in result.ranking
        ],
    }, indent=1))
    return 0


def _cmd_synth(args) -> int:
    ds = synth_dataset(args.seed, args.mentions, args.entities,
                       d_c=args.dc, d_t=args.dt, noise_scale=args.noise)
    manifest = save_manifest(ds, args.out)
    print(json.dumps({"manifest": str(manifest), "mentions": len(ds.mentions),
                      "entities": len(ds.kb)}))
    return 0


def _cmd_qa(args) -> int:
    if args.qa_command == "iou":
        doc = _load_json(args.boxes, "box pairs")
        if not isinstance(doc, list):
            raise ValidationError("box file must hold a JSON list of pairs")
        pairs = []
        for i, pair in enumerate(doc):
            if (not isinstance(pair, list)) or len(pair) != 2:
                raise ValidationError(f"pair {i}: expected [boxA, boxB]")
            try:
                a = Box(*[float(v) for v in pair[0]])
                b = Box(*[float(v) for v in pair[1]])
            except (TypeError, ValueError) as e:
                raise ValidationError(f"pair {i}: bad box: {e}")
            pairs.append((a, b))
        kept = filter_by_iou(pairs, args.threshold)
        print(json.dumps({
            "ious": [iou(a, b) for a, b in pairs],
            "kept": kept,
            "threshold": args.threshold,
        }))
    else:
        matrix = _load_json(args.ratings, "rating matrix")
        print(json.dumps({"kappa": fleiss_kappa(matrix)}))
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "rank": _cmd_rank,
    "synth": _cmd_synth,
    "qa": _cmd_qa,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, CheckpointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except LinkerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
