"""Auxiliary-text generation hook.

The prompt template asks a vision-language model what sits inside the
red box, quoting the record's sentence; at inference the entity
name/type slots are the generation target, so the rendered question
names a generic "entity" in their place. When no model is configured
the hook returns an empty string, which the engine treats as absent
auxiliary text.
"""

from __future__ import annotations

import re

IMAGE_TOKEN = "<image>"

_TEMPLATE = (
    "Background: {image}\n"
    "Text: {sentence}\n"
    "Question: Based on the text '{sentence}', tell me briefly what is "
    "the entity in the red box of the {image}?\n"
    "Answer:"
)


def render_prompt(sentence: str, image_token: str = IMAGE_TOKEN) -> str:
    """Fill the question template; the sentence appears verbatim twice."""
    return _TEMPLATE.format(image=image_token, sentence=sentence)


def normalize_answer(text: str) -> str:
    """Collapse all whitespace runs to single spaces on one line."""
    return re.sub(r"\s+", " ", text).strip()


class NullVlm:
    """No model configured: every record gets empty auxiliary text."""

    def infer(self, image, prompt: str) -> str:
        return ""


class CallableVlm:
    """Adapter for an arbitrary ``fn(image, prompt) -> str`` model hook."""

    def __init__(self, fn):
        self._fn = fn

    def infer(self, image, prompt: str) -> str:
        return self._fn(image, prompt)


class HfVlm:
    """Image-text-to-text transformers pipeline from a local path (optional)."""

    def __init__(self, model_path: str):
        try:
            from transformers import pipeline
        except ImportError as e:
            raise RuntimeError(
                "transformers is required for --vlm; install promptlink-export[hf]"
            ) from e
        self._pipe = pipeline("image-text-to-text", model=model_path)

    def infer(self, image, prompt: str) -> str:
        out = self._pipe(images=image, text=prompt, max_new_tokens=32)
        if isinstance(out, list) and out:
            return str(out[0].get("generated_text", ""))
        return ""


def detective_infer(image, sentence: str, vlm=None) -> tuple[str, str | None]:
    """Render the prompt and invoke the model hook.

    Returns (auxiliary text, warning). Model failures degrade to empty
    auxiliary text with a warning rather than failing the record.
    """
    prompt = render_prompt(sentence)
    if vlm is None:
        vlm = NullVlm()
    try:
        answer = vlm.infer(image, prompt)
    except Exception as e:  # model backends can fail arbitrarily
        return "", f"vlm inference failed: {e}"
    return normalize_answer(answer), None
