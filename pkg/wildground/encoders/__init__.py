"""Image, text and positional encoders."""
from .image import ImageEncoder, ImageGridFeatures, patchify
from .positional import fourier3d, positional, sine1d, sine2d
from .text import TextEncoder, TextFeatures, pad_utterances, span_mean, validate_spans
from .vocabulary import Vocabulary

__all__ = [
    "ImageEncoder",
    "ImageGridFeatures",
    "TextEncoder",
    "TextFeatures",
    "Vocabulary",
    "fourier3d",
    "pad_utterances",
    "patchify",
    "positional",
    "sine1d",
    "sine2d",
    "span_mean",
    "validate_spans",
]
