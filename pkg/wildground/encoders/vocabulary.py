"""Closed word-level vocabulary."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Sequence, cast

import numpy as np

from ..constants import NOT_MENTIONED
from ..exceptions import UnknownTokenError, VocabularyFileError

if TYPE_CHECKING:
    from .._logging import WildgroundLogger

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))


class Vocabulary:
    """Word to id mapping; the id of a word is its line number in the file.

    The last word is always ``not-mentioned``, the terminal token appended to
    every utterance.

    .. rubric:: Example
    .. code-block:: text

        the
        red
        person
        not-mentioned

    """

    def __init__(self, words: Sequence[str]) -> None:
        """Instantiate class.

        Raises:
            VocabularyFileError: Duplicate or blank words, or the terminal
                token is not last.

        """
        self._check(words, None)
        self.words: List[str] = list(words)
        self._ids: Dict[str, int] = {word: i for i, word in enumerate(self.words)}

    @staticmethod
    def _check(words: Sequence[str], path: Optional[Path]) -> None:
        if not words or words[-1] != NOT_MENTIONED:
            raise VocabularyFileError(path, f"last word must be {NOT_MENTIONED!r}")
        if any(not word or word != word.strip() or " " in word for word in words):
            raise VocabularyFileError(path, "words must be single non-blank tokens")
        seen = set()
        for word in words:
            if word in seen:
                raise VocabularyFileError(path, f"duplicate word {word!r}")
            seen.add(word)

    @classmethod
    def from_words(cls, words: Iterable[str]) -> Vocabulary:
        """Sorted vocabulary of ``words`` with the terminal token appended."""
        return cls(sorted(set(words) - {NOT_MENTIONED}) + [NOT_MENTIONED])

    @classmethod
    def load(cls, path: Path) -> Vocabulary:
        """Read a vocabulary file.

        Raises:
            VocabularyFileError: The file is unreadable or malformed.

        """
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise VocabularyFileError(path, str(exc)) from exc
        words = text.splitlines()
        while words and not words[-1]:
            words.pop()
        cls._check(words, path)
        return cls(words)

    def save(self, path: Path) -> None:
        """Write one word per line."""
        path.write_text("\n".join(self.words) + "\n", encoding="utf-8")
        LOGGER.debug("wrote %d words to %s", len(self), path)

    def __len__(self) -> int:
        """Number of words including the terminal token."""
        return len(self.words)

    def __contains__(self, word: object) -> bool:
        """Whether ``word`` has an id."""
        return word in self._ids

    def __eq__(self, other: object) -> bool:
        """Same words in the same order."""
        return isinstance(other, Vocabulary) and self.words == other.words

    @property
    def terminal_id(self) -> int:
        """Id of ``not-mentioned``."""
        return len(self.words) - 1

    def encode(self, words: Iterable[str]) -> np.ndarray:
        """Ids of ``words``.

        Raises:
            UnknownTokenError: A word is not in the vocabulary.

        """
        try:
            return np.array([self._ids[word] for word in words], dtype=np.int64)
        except KeyError as exc:
            raise UnknownTokenError(exc.args[0]) from exc

    def decode(self, ids: Iterable[int]) -> List[str]:
        """Words of ``ids``.

        Raises:
            UnknownTokenError: An id is out of range.

        """
        result = []
        for token_id in ids:
            if not 0 <= int(token_id) < len(self.words):
                raise UnknownTokenError(int(token_id))
            result.append(self.words[int(token_id)])
        return result

    def tokenize(self, utterance: str) -> np.ndarray:
        """Whitespace-split ``utterance`` and encode it, terminal token appended."""
        return self.encode([*utterance.lower().split(), NOT_MENTIONED])
