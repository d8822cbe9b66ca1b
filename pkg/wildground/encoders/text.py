"""Word-level utterance encoder."""
from __future__ import annotations

from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..autodiff import Tensor, functional as F
from ..autodiff.nn import AttentionBlock, Embedding, Module, ModuleList
from ..exceptions import MissingSpanError
from ..type_defs import Span
from .positional import sine1d


def validate_spans(spans: Sequence[Span], length: int) -> None:
    """Check span bookkeeping of one utterance of ``length`` tokens.

    Spans are half-open ``(begin, end)`` word ranges. The last is the terminal
    ``not-mentioned`` span, which must end the utterance. When there are two or
    more, the first is the target span. A lone span is the terminal span of an
    utterance that consists of the terminal token only.

    Raises:
        MissingSpanError: No spans at all.
        ValueError: Spans are empty, overlap, leave ``[0, length)`` or the
            last span does not end the utterance.

    """
    if not spans:
        raise MissingSpanError("terminal")
    previous_end = 0
    for begin, end in sorted(spans):
        if not 0 <= begin < end <= length:
            raise ValueError(f"span ({begin}, {end}) outside [0, {length})")
        if begin < previous_end:
            raise ValueError("spans overlap")
        previous_end = end
    if spans[-1][1] != length:
        raise ValueError("terminal span must close the utterance")


def span_mean(tokens: Tensor, span: Span) -> Tensor:
    """Mean of ``M×C`` token rows inside ``span``."""
    begin, end = span
    return F.mean(F.getitem(tokens, slice(begin, end)), axis=0)


def pad_utterances(
    utterances: Sequence[np.ndarray], pad_id: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Stack ragged id sequences into ``B×M`` ids and a validity mask."""
    longest = max(len(ids) for ids in utterances)
    ids = np.full((len(utterances), longest), pad_id, dtype=np.int64)
    mask = np.zeros((len(utterances), longest), dtype=bool)
    for row, utterance in enumerate(utterances):
        ids[row, : len(utterance)] = utterance
        mask[row, : len(utterance)] = True
    return ids, mask


class TextFeatures(NamedTuple):
    """Encoded utterances of a batch."""

    tokens: Tensor
    """``B×M×C`` word features (padding rows included)."""

    mask: np.ndarray
    """``B×M`` booleans, true for real words."""

    spans: List[List[Span]]
    """Per utterance: target span first, attribute spans, terminal span last."""

    def lengths(self) -> np.ndarray:
        """Real word count of every utterance."""
        return self.mask.sum(axis=1)

    def terminal(self, row: int) -> Span:
        """Terminal span of utterance ``row``.

        Raises:
            MissingSpanError: The last span does not close the utterance.

        """
        spans = self.spans[row]
        if not spans or spans[-1][1] != int(self.lengths()[row]):
            raise MissingSpanError("terminal")
        return spans[-1]

    def target(self, row: int) -> Span:
        """Target span of utterance ``row``.

        Raises:
            MissingSpanError: The utterance holds only its terminal span.

        """
        if len(self.spans[row]) < 2:
            raise MissingSpanError("target")
        return self.spans[row][0]


class TextEncoder(Module):
    """Learned embedding plus ``sine1d`` positions, then self-attention blocks."""

    def __init__(
        self,
        vocab_size: int,
        dim: int,
        heads: int,
        ffn_dim: int,
        dropout: float,
        layers: int,
        rng: np.random.Generator,
    ) -> None:
        """Instantiate class."""
        super().__init__()
        self.dim = dim
        self.embedding = Embedding(vocab_size, dim, rng)
        self.blocks = ModuleList(
            [AttentionBlock(dim, heads, ffn_dim, dropout, rng) for _ in range(layers)]
        )

    def forward(
        self,
        ids: np.ndarray,
        spans: Sequence[Sequence[Span]],
        mask: Optional[np.ndarray] = None,
    ) -> TextFeatures:
        """Encode ``B×M`` padded token ids.

        Args:
            ids: Token ids, terminal token already appended to each utterance.
            spans: Span bookkeeping per utterance.
            mask: Valid-word mask; every position is real when omitted.

        Raises:
            UnknownTokenError: An id is outside the vocabulary.

        """
        ids = np.asarray(ids, dtype=np.int64)
        if mask is None:
            mask = np.ones(ids.shape, dtype=bool)
        for row, utterance_spans in enumerate(spans):
            validate_spans(utterance_spans, int(mask[row].sum()))
        positions = Tensor(sine1d(np.arange(ids.shape[1]), self.dim))
        x = F.add(self.embedding(ids), positions)
        for block in self.blocks:
            x = block(x, key_mask=mask)
        return TextFeatures(x, mask, [list(s) for s in spans])
