"""Matching and the five-term training objective."""
from .matcher import MatchResult, match
from .objective import BatchLoss, compute_losses, total_loss, weighted_total
from .terms import (
    box_losses,
    contrastive_loss,
    focal_confidence_loss,
    soft_token_loss,
    soft_token_targets,
    span_target,
)

__all__ = [
    "BatchLoss",
    "MatchResult",
    "box_losses",
    "compute_losses",
    "contrastive_loss",
    "focal_confidence_loss",
    "match",
    "soft_token_loss",
    "soft_token_targets",
    "span_target",
    "total_loss",
    "weighted_total",
]
