"""promptlink: retrieval engine linking visually-prompted mentions to KB entities."""

from .autodiff import Tensor, backward
from .checkpoint import TrainRunState, load_checkpoint, save_checkpoint
from .config import HyperConfig
from .data import (
    Dataset,
    EntityRecord,
    FeatureBundle,
    MentionRecord,
    batch_iter,
    load_manifest,
    save_manifest,
    split_dataset,
    synth_dataset,
)
from .evaluation import RankingReport, evaluate, hit_at_k, rank
from .model import LinkerModel, ScoreTriple
from .params import AdamW, ParamStore
from .qa import Box, filter_by_iou, fleiss_kappa, iou
from .training import TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "AdamW",
    "Box",
    "Dataset",
    "EntityRecord",
    "FeatureBundle",
    "HyperConfig",
    "LinkerModel",
    "MentionRecord",
    "ParamStore",
    "RankingReport",
    "ScoreTriple",
    "Tensor",
    "TrainResult",
    "TrainRunState",
    "backward",
    "batch_iter",
    "evaluate",
    "filter_by_iou",
    "fleiss_kappa",
    "hit_at_k",
    "iou",
    "load_checkpoint",
    "load_manifest",
    "rank",
    "save_checkpoint",
    "save_manifest",
    "split_dataset",
    "synth_dataset",
    "train",
]
