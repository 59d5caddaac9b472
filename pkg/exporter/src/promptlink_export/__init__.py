"""promptlink-export: encodes prompted image-text records into the engine's dataset format."""

from .encoders import StubTextEncoder, StubVisionEncoder, make_text_encoder, make_vision_encoder
from .export import ExportSummary, export_features
from .prompt_draw import draw_visual_prompt
from .records import EntitySample, MentionSample, PromptBox, read_samples
from .vlm import detective_infer, normalize_answer, render_prompt

__version__ = "0.1.0"

__all__ = [
    "EntitySample",
    "ExportSummary",
    "MentionSample",
    "PromptBox",
    "StubTextEncoder",
    "StubVisionEncoder",
    "detective_infer",
    "draw_visual_prompt",
    "export_features",
    "make_text_encoder",
    "make_vision_encoder",
    "normalize_answer",
    "read_samples",
    "render_prompt",
]
