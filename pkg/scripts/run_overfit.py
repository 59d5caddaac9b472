#!/usr/bin/env python3
"""Memorisation check: train on a small noise-free planted dataset until
the training set is ranked perfectly. A quick end-to-end sanity run."""

import argparse
import json
import tempfile

from promptlink import HyperConfig, synth_dataset, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--mentions", type=int, default=32)
    ap.add_argument("--entities", type=int, default=64)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--lr", type=float, default=3e-3)
    ap.add_argument("--out", default=None, help="run directory (default: temp)")
    args = ap.parse_args()

    ds = synth_dataset(args.seed, args.mentions, args.entities,
                       d_c=args.dim, d_t=args.dim, noise_scale=0.0)
    cfg = HyperConfig(d_c=args.dim, d_v=args.dim, d_t=args.dim, batch_size=8,
                      epochs=args.epochs, seed=args.seed, lr=args.lr)
    out = args.out or tempfile.mkdtemp(prefix="overfit-")
    result = train(ds, ds, cfg, out, report_every=5)
    log = [json.loads(line) for line in open(result.metrics_path)]
    print(json.dumps({
        "run_dir": str(out),
        "final_train_hit1": log[-1]["dev_hit1"],
        "best_train_hit1": result.state.best_dev_hit1,
        "final_loss": log[-1]["loss"],
    }, indent=1))


if __name__ == "__main__":
    main()
