import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Sized, Union

import torch

from coref.config import PreprocessConfig
from coref.corpus.types import Document, Span
from coref.errors import ConfigurationError, ContractViolation
from coref.logger import create_logger

logger = create_logger(__name__)

SPEAKER_NAME_SPLIT = re.compile(r"[\s_]+")


@dataclass(frozen=True)
class Piece:
    """One item of the augmented stream.

    origin is the document word index, or None for pieces inserted by
    preprocessing. special marks the bracketing tags, which map to reserved
    vocabulary entries; speaker-name pieces are inserted but not special.
    """

    text: str
    origin: Optional[int] = None
    special: bool = False


@dataclass
class AugmentedSequence:
    pieces: list
    orig_to_aug: list
    aug_to_orig: dict

    def __len__(self):
        return len(self.pieces)

    @property
    def texts(self) -> list:
        return [piece.text for piece in self.pieces]

    @classmethod
    def identity(cls, words: Sequence[str]) -> "AugmentedSequence":
        pieces = [Piece(word, i) for i, word in enumerate(words)]
        return cls(pieces, list(range(len(words))), {i: i for i in range(len(words))})


def speaker_pieces(speaker: str, open_tag: str, close_tag: str) -> list:
    names = [Piece(part) for part in SPEAKER_NAME_SPLIT.split(speaker) if part]
    return [Piece(open_tag, special=True)] + names + [Piece(close_tag, special=True)]


def insert_speakers(doc: Document, open_tag: str = "<speaker>", close_tag: str = "</speaker>",
                    enabled: bool = True) -> AugmentedSequence:
    """Prefixes every maximal same-speaker run with its speaker's name in tags"""

    if not enabled or not doc.speakers:
        return AugmentedSequence.identity(doc.words)

    pieces, orig_to_aug = [], []
    previous = None
    for token in doc.tokens:
        if token.speaker is not None and token.speaker != previous:
            pieces.extend(speaker_pieces(token.speaker, open_tag, close_tag))
        previous = token.speaker

        orig_to_aug.append(len(pieces))
        pieces.append(Piece(token.text, token.word_index))

    aug_to_orig = {position: word for word, position in enumerate(orig_to_aug)}
    return AugmentedSequence(pieces, orig_to_aug, aug_to_orig)


@dataclass(frozen=True)
class Window:
    start: int
    end: int
    owned_start: int
    owned_end: int

    def __len__(self):
        return self.end - self.start

    @property
    def owned_range(self) -> range:
        return range(self.owned_start, self.owned_end)

    def contains(self, first: int, last: Optional[int] = None) -> bool:
        last = first if last is None else last
        return self.start <= first and last < self.end


def _centrality(position: int, start: int, end: int) -> int:
    return min(position - start, end - position)


def window_owner(position: int, bounds: Sequence[tuple]) -> int:
    """Index of the (start, end) window in which position is most central, ties to the earlier one"""

    best, best_score = None, None
    for index, (start, end) in enumerate(bounds):
        if start <= position < end:
            score = _centrality(position, start, end)
            if best_score is None or score > best_score:
                best, best_score = index, score
    if best is None:
        raise ContractViolation(f"Position {position} is outside every window")
    return best


def make_windows(seq: Union[Sized, int], T: int, stride: Optional[int] = None) -> list:
    """Splits a sequence into windows of size T starting every stride positions.

    Each position is owned by the window in which it is most central; owned
    ranges partition the sequence and some tail windows may own nothing.
    """

    length = seq if isinstance(seq, int) else len(seq)
    if T < 2 or T % 2:
        raise ConfigurationError(f"Window size must be even and >= 2, got {T}")
    stride = T // 2 if stride is None else stride
    if not 1 <= stride <= T:
        raise ConfigurationError(f"Window stride must be in [1, {T}], got {stride}")

    if length == 0:
        return []
    starts = [0] if length <= T else list(range(0, length, stride))
    bounds = [(start, min(start + T, length)) for start in starts]

    owners = []
    for position in range(length):
        # Only windows starting in (position - T, position] can contain it
        first = max(0, (position - T) // stride)
        last = min(len(bounds) - 1, position // stride)
        owners.append(first + window_owner(position, bounds[first:last + 1]))

    windows = []
    cursor = 0
    for index, (start, end) in enumerate(bounds):
        owned_end = cursor
        while owned_end < length and owners[owned_end] == index:
            owned_end += 1
        windows.append(Window(start, end, cursor, owned_end))
        cursor = owned_end

    if cursor != length:
        raise ContractViolation(f"Window ownership is not contiguous at position {cursor} of {length}")
    return windows


def merge_windows(per_window_vectors: Sequence[tuple]) -> torch.Tensor:
    """Concatenates each window's vectors over the positions it owns"""

    ordered = sorted(per_window_vectors, key=lambda item: item[0].start)
    parts = []
    cursor = 0
    for window, vectors in ordered:
        if vectors.shape[0] != len(window):
            raise ContractViolation(f"Window at {window.start} holds {len(window)} pieces, got {vectors.shape[0]} vectors")
        if window.owned_start != cursor:
            raise ContractViolation(f"Owned ranges leave a gap or overlap at position {cursor}")
        parts.append(vectors[window.owned_start - window.start:window.owned_end - window.start])
        cursor = window.owned_end

    if ordered and cursor != ordered[-1][0].end:
        raise ContractViolation(f"Owned ranges stop at {cursor}, sequence ends at {ordered[-1][0].end}")
    return torch.cat(parts, dim=0)


@dataclass
class DocumentInput:
    """A document ready for the encoder: the augmented stream and its sub-word ids"""

    doc: Document
    sequence: AugmentedSequence
    piece_ids: list
    piece_bounds: list
    special_mask: list
    word_first: list = field(default_factory=list)
    word_last: list = field(default_factory=list)
    sentence_ids: list = field(default_factory=list)

    @property
    def num_words(self) -> int:
        return self.doc.num_words

    @property
    def word_aug(self) -> list:
        return self.sequence.orig_to_aug

    @property
    def ids(self) -> torch.Tensor:
        return torch.tensor(self.piece_ids, dtype=torch.long)

    def __len__(self):
        return len(self.piece_ids)

    def piece_interval(self, span: Span) -> tuple:
        return self.word_first[span.start], self.word_last[span.end]


def prepare_document(doc: Document, vocab, config: PreprocessConfig) -> DocumentInput:
    sequence = insert_speakers(doc, config.speaker_tag_open, config.speaker_tag_close,
                               enabled=config.speaker_strategy == "input")

    ids, bounds, special = [], [], []
    for piece in sequence.pieces:
        piece_ids = vocab.tokenize(piece.text)
        bounds.append((len(ids), len(ids) + len(piece_ids) - 1))
        ids.extend(piece_ids)
        special.extend([piece.origin is None] * len(piece_ids))

    logger.debug(f"{doc.doc_key}: {doc.num_words} words, {len(sequence)} augmented pieces, {len(ids)} sub-words")
    return DocumentInput(
        doc=doc,
        sequence=sequence,
        piece_ids=ids,
        piece_bounds=bounds,
        special_mask=special,
        word_first=[bounds[position][0] for position in sequence.orig_to_aug],
        word_last=[bounds[position][1] for position in sequence.orig_to_aug],
        sentence_ids=[token.sentence_index for token in doc.tokens],
    )


def enumerate_spans(inputs: DocumentInput, max_width: int, within_sentence: bool = True) -> list:
    """All spans of width <= max_width over contiguous augmented pieces, ordered by (start, end)"""

    spans = []
    word_aug = inputs.word_aug
    n = inputs.num_words
    for start in range(n):
        for end in range(start, min(n, start + max_width)):
            if within_sentence and inputs.sentence_ids[end] != inputs.sentence_ids[start]:
                break
            if word_aug[end] - word_aug[start] != end - start:
                break
            spans.append(Span(start, end))
    return spans
