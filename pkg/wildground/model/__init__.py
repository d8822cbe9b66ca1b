"""The grounding network and its building blocks."""
from .decoder import DecoderLayer, GroundingDecoder
from .dve import DynamicVisualEncoder, FrameTokens
from .fusion import TripleModalInteraction, seed_patch_index
from .heads import (
    GroundingHeads,
    Predictions,
    QueryCandidates,
    rank_seeds,
    select_queries,
    select_target,
)
from .network import GroundingModel, ModelInput, nearest_seed

__all__ = [
    "DecoderLayer",
    "DynamicVisualEncoder",
    "FrameTokens",
    "GroundingDecoder",
    "GroundingHeads",
    "GroundingModel",
    "ModelInput",
    "Predictions",
    "QueryCandidates",
    "TripleModalInteraction",
    "nearest_seed",
    "rank_seeds",
    "seed_patch_index",
    "select_queries",
    "select_target",
]
