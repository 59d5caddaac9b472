"""Full-chain check: exported data trains and evaluates in the engine.

The two packages touch only through the manifest/blob files written to
disk here.
"""

import json

import numpy as np
from PIL import Image

from promptlink import HyperConfig, evaluate, load_checkpoint, load_manifest, train
from promptlink.model import LinkerModel

from promptlink_export.cli import main


def test_exported_corpus_trains_in_engine(tmp_path, capsys):
    images = tmp_path / "imgs"
    images.mkdir()
    rng = np.random.default_rng(3)
    lines = []
    for i in range(6):
        for prefix in ("m", "e"):
            arr = rng.integers(0, 255, size=(32, 32, 3), dtype=np.uint8)
            Image.fromarray(arr, "RGB").save(images / f"{prefix}{i}.png")
        lines.append({"kind": "mention", "id": f"m{i}", "image": f"m{i}.png",
                      "sentence": f"scene number {i} with a marked object",
                      "box": [2, 2, 20, 20], "gold": f"e{i}", "candidates": None})
        lines.append({"kind": "entity", "id": f"e{i}", "image": f"e{i}.png",
                      "name": f"entity {i}", "attributes": f"kind {i % 3}",
                      "description": ""})
    input_path = tmp_path / "samples.jsonl"
    input_path.write_text("\n".join(json.dumps(l) for l in lines))

    out = tmp_path / "exported"
    code = main(["export", "--input", str(input_path), "--images", str(images),
                 "--out", str(out), "--dc", "8", "--dt", "8"])
    capsys.readouterr()
    assert code == 0

    ds = load_manifest(out / "manifest.json")
    assert ds.warnings == []
    cfg = HyperConfig(d_c=8, d_v=8, d_t=8, batch_size=3, epochs=2, seed=1, lr=1e-3)
    result = train(ds, ds, cfg, tmp_path / "run")
    loaded = load_checkpoint(result.best_checkpoint)
    model = LinkerModel(loaded.state.config, store=loaded.params)
    report = evaluate(model, ds, ks=(1, 3, 5))
    assert report.n_mentions == 6
    assert 0.0 <= report.hit_at_k[1] <= report.hit_at_k[5] <= 1.0
