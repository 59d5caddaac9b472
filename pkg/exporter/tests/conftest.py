"""Shared fixtures: a tiny on-disk corpus of generated images + records."""

import json

import numpy as np
import pytest
from PIL import Image


def _noise_image(path, seed, size=(48, 40)):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 255, size=(size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(arr, "RGB").save(path)


@pytest.fixture
def toy_corpus(tmp_path):
    """One mention + two entities with images, as JSONL + image dir."""
    images = tmp_path / "imgs"
    images.mkdir()
    _noise_image(images / "m0.png", 1)
    _noise_image(images / "e0.png", 2)
    _noise_image(images / "e1.png", 3)
    lines = [
        {"kind": "mention", "id": "m0", "image": "m0.png",
         "sentence": "two players at the net", "box": [4, 4, 20, 18],
         "gold": "e0", "candidates": ["e0", "e1"]},
        {"kind": "entity", "id": "e0", "image": "e0.png", "name": "alpha team",
         "attributes": "sports club", "description": "a club"},
        {"kind": "entity", "id": "e1", "image": "e1.png", "name": "beta hall",
         "attributes": "building", "description": "a hall"},
    ]
    input_path = tmp_path / "samples.jsonl"
    input_path.write_text("\n".join(json.dumps(l) for l in lines), encoding="utf-8")
    return input_path, images, tmp_path
