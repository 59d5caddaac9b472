"""Encoder backends producing the per-record feature tensors.

Two families:

* ``Stub*Encoder`` -- deterministic hash-projection featurizers. They
  implement the full encoder contract (per-layer CLS vectors, patch-grid
  hidden states, token hidden states) as pure functions of pixel/text
  content, need no weights or network, and make repeated exports
  byte-identical. Default, and the backend exercised by the tests.
* ``Hf*Encoder`` -- optional wrappers around pretrained transformers
  checkpoints (CLIP vision tower, BERT), selected by passing a local
  model path. Imported lazily; absence of torch/transformers or of the
  weights raises a clean error instead of breaking the stub path.

A vision encoder maps an image to ``(layer_cls, local)`` where
``layer_cls[l]`` is the CLS vector of encoder layer ``l`` and ``local``
is the (n+1) x d_c final-layer matrix, row 0 the CLS position. A text
encoder maps two text segments (laid out CLS seg1 SEP seg2 SEP) to the
(T+1) x d_t hidden-state matrix, row 0 the CLS position, content
truncated to ``max_text_len`` tokens.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np
from PIL import Image

DEFAULT_LAYERS = (3, 10, 11, 12)
_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
SEP = "[SEP]"


def _seeded_vec(tag: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "little")
    return np.random.default_rng(seed).standard_normal(dim)


def _seeded_matrix(tag: str, rows: int, cols: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "little")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((rows, cols)) / np.sqrt(rows)


def tokenize(text: str) -> list[str]:
    return [t.lower() for t in _TOKEN_RE.findall(text)]


class StubVisionEncoder:
    """Deterministic pixel featurizer with a patch grid and layered CLS taps."""

    def __init__(self, d_c: int = 96, layers=DEFAULT_LAYERS, grid: int = 4,
                 image_size: int = 64):
        self.d_c = d_c
        self.layers = tuple(layers)
        self.grid = grid
        self.image_size = image_size
        patch = image_size // grid
        flat = patch * patch * 3
        self._patch_proj = _seeded_matrix(f"vision.patch.{flat}.{d_c}", flat, d_c)
        self._global_proj = {
            layer: _seeded_matrix(f"vision.layer{layer}.{flat}.{d_c}", flat, d_c)
            for layer in self.layers
        }
        self._cls_proj = _seeded_matrix(f"vision.cls.{flat}.{d_c}", flat, d_c)

    def _pixels(self, image: Image.Image) -> np.ndarray:
        img = image.convert("RGB").resize((self.image_size, self.image_size),
                                          Image.Resampling.BILINEAR)
        return np.asarray(img, dtype=np.float64) / 255.0

    def encode(self, image: Image.Image) -> tuple[dict[int, np.ndarray], np.ndarray]:
        px = self._pixels(image)
        patch = self.image_size // self.grid
        pooled = px.reshape(self.grid, patch, self.grid, patch, 3).mean(axis=(1, 3))
        global_flat = px[::self.grid, ::self.grid, :].reshape(-1)

        layer_cls = {
            layer: np.tanh(global_flat @ proj * (1.0 + 0.25 * i)).astype(np.float32)
            for i, (layer, proj) in enumerate(sorted(self._global_proj.items()))
        }
        rows = [np.tanh(global_flat @ self._cls_proj)]
        for gy in range(self.grid):
            for gx in range(self.grid):
                block = px[gy * patch:(gy + 1) * patch, gx * patch:(gx + 1) * patch, :]
                feat = block.reshape(-1) @ self._patch_proj
                feat = feat + 0.1 * _seeded_vec(f"vision.pos.{gy}.{gx}.{self.d_c}", self.d_c)
                rows.append(np.tanh(feat + pooled[gy, gx].mean()))
        local = np.stack(rows).astype(np.float32)
        return layer_cls, local


class StubTextEncoder:
    """Deterministic token featurizer with the CLS/SEP layout and truncation."""

    def __init__(self, d_t: int = 512, max_text_len: int = 40):
        self.d_t = d_t
        self.max_text_len = max_text_len

    def _token_vec(self, token: str, position: int) -> np.ndarray:
        base = _seeded_vec(f"text.tok.{token}.{self.d_t}", self.d_t)
        pos = _seeded_vec(f"text.pos.{position}.{self.d_t}", self.d_t)
        return base + 0.1 * pos

    def encode(self, first: str, second: str) -> np.ndarray:
        sequence = tokenize(first) + [SEP] + tokenize(second) + [SEP]
        sequence = sequence[: self.max_text_len]
        cls = _seeded_vec("text.cls." + " ".join(sequence) + f".{self.d_t}", self.d_t)
        rows = [cls] + [self._token_vec(tok, i) for i, tok in enumerate(sequence)]
        return np.stack(rows).astype(np.float32)


class HfClipVisionEncoder:
    """Pretrained CLIP vision tower loaded from a local path (optional backend)."""

    def __init__(self, model_path: str, layers=DEFAULT_LAYERS):
        try:
            import torch
            from transformers import CLIPImageProcessor, CLIPVisionModel
        except ImportError as e:
            raise RuntimeError(
                "transformers/torch are required for the CLIP backend; "
                "install promptlink-export[hf]"
            ) from e
        self._torch = torch
        self.layers = tuple(layers)
        self.model = CLIPVisionModel.from_pretrained(model_path)
        self.model.eval()
        self.processor = CLIPImageProcessor.from_pretrained(model_path)
        self.d_c = self.model.config.hidden_size

    def encode(self, image: Image.Image):
        inputs = self.processor(images=image.convert("RGB"), return_tensors="pt")
        with self._torch.no_grad():
            out = self.model(**inputs, output_hidden_states=True)
        hidden = out.hidden_states  # (embeddings, layer1, ..., layerN)
        layer_cls = {
            layer: hidden[layer][0, 0].numpy().astype(np.float32)
            for layer in self.layers
        }
        local = out.last_hidden_state[0].numpy().astype(np.float32)
        return layer_cls, local


class HfBertTextEncoder:
    """Pretrained BERT encoder loaded from a local path (optional backend)."""

    def __init__(self, model_path: str, max_text_len: int = 40):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as e:
            raise RuntimeError(
                "transformers/torch are required for the BERT backend; "
                "install promptlink-export[hf]"
            ) from e
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_path)
        self.model = AutoModel.from_pretrained(model_path)
        self.model.eval()
        self.max_text_len = max_text_len
        self.d_t = self.model.config.hidden_size

    def encode(self, first: str, second: str) -> np.ndarray:
        # CLS + up to max_text_len content tokens (the pair layout inserts SEPs)
        enc = self.tokenizer(first, second, truncation=True,
                             max_length=self.max_text_len + 1, return_tensors="pt")
        with self._torch.no_grad():
            out = self.model(**enc)
        return out.last_hidden_state[0].numpy().astype(np.float32)


def make_vision_encoder(spec: str, d_c: int, layers) -> StubVisionEncoder | HfClipVisionEncoder:
    if spec == "stub":
        return StubVisionEncoder(d_c=d_c, layers=layers)
    return HfClipVisionEncoder(spec, layers=layers)


def make_text_encoder(spec: str, d_t: int, max_text_len: int):
    if spec == "stub":
        return StubTextEncoder(d_t=d_t, max_text_len=max_text_len)
    return HfBertTextEncoder(spec, max_text_len=max_text_len)
