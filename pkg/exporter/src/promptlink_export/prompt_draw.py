"""Visual prompt overlay: stroke a pure-red rectangle onto a copy of the image."""

from __future__ import annotations

from PIL import Image, ImageDraw

from .records import PromptBox

PROMPT_COLOR = (255, 0, 0)


def draw_visual_prompt(image: Image.Image, box: PromptBox, stroke_width: int = 3) -> Image.Image:
    """Return a copy of ``image`` with the prompt box stroked in pure red.

    The border is drawn inside the half-open box, so a box covering the
    full image frames it without touching the interior. Stroke width 0
    returns an unmodified copy; the source image is never mutated.
    """
    if stroke_width < 0:
        raise ValueError("stroke_width must be >= 0")
    box.check_inside(*image.size)
    out = image.convert("RGB") if image.mode != "RGB" else image.copy()
    if stroke_width == 0:
        return out
    draw = ImageDraw.Draw(out)
    draw.rectangle([box.x1, box.y1, box.x2 - 1, box.y2 - 1],
                   outline=PROMPT_COLOR, width=stroke_width)
    return out
