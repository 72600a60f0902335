from collections import Counter
from typing import Iterable, Optional, Sequence

from coref.errors import DataError, VocabularyMismatchError
from coref.logger import create_logger

logger = create_logger(__name__)

PAD = "[PAD]"
UNK = "[UNK]"
CLS = "[CLS]"
SEP = "[SEP]"
RESERVED = (PAD, UNK, CLS, SEP)
CONTINUATION = "##"


class Vocabulary:
    """Word-piece vocabulary with greedy longest-match tokenization.

    The reserved entries and the tag strings come first, in that order.
    Words are lowercased before lookup; tag strings are matched verbatim.
    """

    def __init__(self, pieces: Sequence[str], special_tags: Sequence[str]):
        self.pieces = list(pieces)
        self.special_tags = tuple(special_tags)

        expected = list(RESERVED) + list(self.special_tags)
        if self.pieces[:len(expected)] != expected:
            raise VocabularyMismatchError(
                f"Vocabulary must start with {expected}, got {self.pieces[:len(expected)]}")

        self.index = {piece: i for i, piece in enumerate(self.pieces)}
        if len(self.index) != len(self.pieces):
            raise DataError("Vocabulary holds duplicate pieces")

    @property
    def pad_id(self) -> int:
        return self.index[PAD]

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    @property
    def cls_id(self) -> int:
        return self.index[CLS]

    @property
    def sep_id(self) -> int:
        return self.index[SEP]

    def __len__(self):
        return len(self.pieces)

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.pieces == other.pieces

    def tokenize(self, word: str) -> list:
        if word in self.special_tags:
            return [self.index[word]]

        text = word.lower()
        if not text:
            return [self.unk_id]
        if text in self.index:
            return [self.index[text]]

        ids = []
        start = 0
        while start < len(text):
            end = len(text)
            found = None
            while end > start:
                candidate = text[start:end] if start == 0 else CONTINUATION + text[start:end]
                if candidate in self.index:
                    found = self.index[candidate]
                    break
                end -= 1

            if found is None:
                # Unknown character, skip just that one
                ids.append(self.unk_id)
                start += 1
            else:
                ids.append(found)
                start = end
        return ids

    def align(self, words: Sequence[str]):
        """Tokenizes words in sequence, returning ids and each word's first and last piece index"""

        ids, first, last = [], [], []
        for word in words:
            pieces = self.tokenize(word)
            first.append(len(ids))
            ids.extend(pieces)
            last.append(len(ids) - 1)
        return ids, first, last

    def detokenize(self, ids: Iterable[int]) -> str:
        words = []
        for i in ids:
            piece = self.pieces[i]
            if piece.startswith(CONTINUATION) and words:
                words[-1] += piece[len(CONTINUATION):]
            else:
                words.append(piece)
        return " ".join(words)

    @classmethod
    def build(cls, words: Iterable[str], special_tags: Sequence[str], max_size: int = 30000,
              min_count: int = 1) -> "Vocabulary":
        counts = Counter(word.lower() for word in words if word not in special_tags)

        initials, continuations = set(), set()
        for word in counts:
            initials.add(word[0])
            continuations.update(CONTINUATION + char for char in word[1:])

        pieces = list(RESERVED) + list(special_tags)
        pieces += sorted(initials - set(pieces)) + sorted(continuations)

        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        known = set(pieces)
        for word, count in ranked:
            if len(pieces) >= max_size or count < min_count:
                break
            if word not in known:
                pieces.append(word)
                known.add(word)

        logger.info(f"Built vocabulary of {len(pieces)} pieces from {len(counts)} distinct words")
        return cls(pieces, special_tags)

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            for piece in self.pieces:
                f.write(piece + "\n")

    @classmethod
    def load(cls, path: str, special_tags: Optional[Sequence[str]] = None) -> "Vocabulary":
        try:
            with open(path, encoding="utf-8") as f:
                pieces = [line.rstrip("\n") for line in f]
        except OSError as e:
            raise DataError(f"Unable to read vocabulary {path}: {e}") from e

        stored_tags = pieces[len(RESERVED):len(RESERVED) + 4]
        if special_tags is not None and tuple(special_tags) != tuple(stored_tags):
            raise VocabularyMismatchError(
                f"{path} was built with tags {stored_tags}, configuration expects {list(special_tags)}")
        return cls(pieces, stored_tags)
