"""Tensor engine with reverse-mode automatic differentiation."""
from . import functional
from .checkpoint import load_checkpoint, save_checkpoint
from .nn import (
    MLP,
    AttentionBlock,
    Dropout,
    Embedding,
    FeedForward,
    LayerNorm,
    Linear,
    Module,
    ModuleList,
    MultiHeadAttention,
)
from .optim import AdamW, OptimizerState, ParamGroup
from .tensor import Parameter, Tape, TapeNode, Tensor, current_tape, precision

__all__ = [
    "AdamW",
    "AttentionBlock",
    "Dropout",
    "Embedding",
    "FeedForward",
    "LayerNorm",
    "Linear",
    "MLP",
    "Module",
    "ModuleList",
    "MultiHeadAttention",
    "OptimizerState",
    "ParamGroup",
    "Parameter",
    "Tape",
    "TapeNode",
    "Tensor",
    "current_tape",
    "functional",
    "load_checkpoint",
    "precision",
    "save_checkpoint",
]
