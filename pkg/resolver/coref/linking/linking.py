from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Union

import torch
import torch.nn as nn

from coref.config import LinkingConfig, PreprocessConfig
from coref.corpus.types import Span
from coref.encoder import FRAMING_OVERHEAD, TransformerEncoder, pack
from coref.errors import ContractViolation
from coref.preprocess import DocumentInput, Piece, make_windows
from coref.proposal import FeedForwardScorer


@dataclass
class MentionQuery:
    """Tagged source sentence used to ask for a mention's coreferents.

    pieces keeps the full tagged sentence; ids may be trimmed around the
    mention to fit the query budget.
    """

    source_span: Optional[Span]
    pieces: list
    ids: list

    @property
    def texts(self) -> list:
        return [piece.text for piece in self.pieces]


@dataclass(frozen=True)
class PairScore:
    """Scores of query span i against j, or against a list of candidates j with one score per candidate"""

    i: Span
    j: Union[Span, list]
    forward: Any
    backward: Any
    bidirectional: Any
    overall: Any


@dataclass
class ForwardScores:
    spans: list
    scores: torch.Tensor
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {span: i for i, span in enumerate(self.spans)}

    def __len__(self):
        return len(self.spans)

    def __getitem__(self, span: Span) -> torch.Tensor:
        return self.scores[self.index[span]]

    def as_dict(self) -> dict:
        return dict(zip(self.spans, self.scores.tolist()))

    def prune(self, C: int) -> list:
        return [self.index[span] for span in prune_candidates(self.as_dict(), C)]


def prune_candidates(scores: Mapping[Span, float], C: int) -> list:
    """Top C spans by forward score, ties broken by (start, end)"""

    if C < 1:
        raise ContractViolation(f"Antecedent cap must be >= 1, got {C}")
    return sorted(scores, key=lambda span: (-scores[span], span.start, span.end))[:C]


def bidirectional_score(forward, backward):
    return (forward + backward) / 2


def overall_score(s_m_i, s_m_j, bidirectional, lambda_mix: float):
    return lambda_mix * (s_m_i + s_m_j) + (1 - lambda_mix) * bidirectional


def pair_score(i: Span, j: Union[Span, Sequence[Span]], forward, backward, mention_scores: Mapping[Span, Any],
               lambda_mix: float) -> PairScore:
    """Combines s_a(j|i) and s_a(i|j) with both mention scores.

    j may be a list of candidates, forward and backward then hold one score
    per candidate and the result fields are tensors aligned with j.
    """

    if isinstance(j, Span):
        s_m_j = mention_scores[j]
    else:
        j = list(j)
        s_m_j = torch.stack([torch.as_tensor(mention_scores[span]) for span in j])
    bidirectional = bidirectional_score(forward, backward)
    overall = overall_score(mention_scores[i], s_m_j, bidirectional, lambda_mix)
    return PairScore(i, j, forward, backward, bidirectional, overall)


def _sentence_bounds(inputs: DocumentInput, span: Span) -> tuple:
    sentence_ids = inputs.sentence_ids
    first, last = span.start, span.end
    while first > 0 and sentence_ids[first - 1] == sentence_ids[span.start]:
        first -= 1
    while last + 1 < inputs.num_words and sentence_ids[last + 1] == sentence_ids[span.end]:
        last += 1
    return first, last


def _speaker_prefix(inputs: DocumentInput, first: int) -> list:
    """Speaker tag group of the turn containing word first"""

    tokens = inputs.doc.tokens
    run_start = first
    while run_start > 0 and tokens[run_start - 1].speaker == tokens[first].speaker:
        run_start -= 1

    pieces = inputs.sequence.pieces
    position = inputs.word_aug[run_start]
    begin = position
    while begin > 0 and pieces[begin - 1].origin is None:
        begin -= 1
    return pieces[begin:position]


def _trim(ids: list, open_at: int, close_at: int, limit: int) -> list:
    """Cuts ids to limit pieces around the tagged mention, both tags always kept"""

    if len(ids) <= limit:
        return ids
    if limit < 2:
        raise ContractViolation(f"A query limit of {limit} cannot hold both mention tags")
    if close_at - open_at + 1 > limit:
        # Mention wider than the budget, keep the head of its interior
        return [ids[open_at]] + ids[open_at + 1:open_at + limit - 1] + [ids[close_at]]
    center = (open_at + close_at) // 2
    begin = max(0, min(center - limit // 2, len(ids) - limit))
    begin = min(max(begin, close_at - limit + 1), open_at)
    return ids[begin:begin + limit]


def build_query(inputs: DocumentInput, span: Span, vocab, config: PreprocessConfig,
                max_length: Optional[int] = None) -> MentionQuery:
    if span.end >= inputs.num_words:
        raise ContractViolation(f"{span} is out of bounds for {inputs.num_words} words")

    first, last = _sentence_bounds(inputs, span)
    sentence = inputs.sequence.pieces[inputs.word_aug[first]:inputs.word_aug[last] + 1]

    pieces = list(_speaker_prefix(inputs, first))
    for piece in sentence:
        if piece.origin == span.start:
            pieces.append(Piece(config.mention_tag_open, special=True))
        pieces.append(piece)
        if piece.origin == span.end:
            pieces.append(Piece(config.mention_tag_close, special=True))

    ids = []
    open_at = close_at = 0
    for piece in pieces:
        if piece.special and piece.text == config.mention_tag_open:
            open_at = len(ids)
        ids.extend(vocab.tokenize(piece.text))
        if piece.special and piece.text == config.mention_tag_close:
            close_at = len(ids) - 1

    if max_length is not None:
        ids = _trim(ids, open_at, close_at, max_length)
    return MentionQuery(span, pieces, ids)


def build_question(words: Sequence[str], vocab, max_length: Optional[int] = None) -> MentionQuery:
    """Query from a plain question, with no source mention"""

    ids = [i for word in words for i in vocab.tokenize(word)]
    if max_length is not None:
        ids = ids[:max_length]
    return MentionQuery(None, [Piece(word) for word in words], ids)


class MentionLinker(nn.Module):
    """Scores answer spans in the document context of a packed query.

    The document is cut into chunks that fit next to the query; each span
    is scored in the chunk owning its first piece.
    """

    def __init__(self, hidden_dim: int, vocab, config: LinkingConfig, preprocess: PreprocessConfig,
                 dropout: float = 0.0):
        super().__init__()
        config.validate()
        self.config = config
        self.preprocess = preprocess
        self.vocab = vocab
        self.answer_scorer = FeedForwardScorer(2 * hidden_dim, hidden_dim, dropout)

    @property
    def query_limit(self) -> int:
        return min(self.config.max_query_length, self.preprocess.window_size // 2)

    def chunk_size(self, query_length: int) -> int:
        size = self.preprocess.window_size - query_length - FRAMING_OVERHEAD
        size -= size % 2
        if size < 2:
            raise ContractViolation(f"A query of {query_length} pieces leaves no room for context")
        return size

    def chunks(self, inputs: DocumentInput, query_length: int) -> list:
        size = self.chunk_size(query_length)
        stride = self.config.chunk_stride
        return make_windows(len(inputs), size, stride=min(stride, size) if stride else None)

    @staticmethod
    def assign_chunks(inputs: DocumentInput, spans: Sequence[Span], chunks: Sequence) -> list:
        """Chunk index per span, None for a span longer than any chunk"""

        owned_starts = [chunk.owned_start for chunk in chunks]
        owners = []
        for span in spans:
            first, last = inputs.piece_interval(span)
            owner = bisect_right(owned_starts, first) - 1
            if not chunks[owner].contains(first, last):
                # The owning chunk cuts the span, fall back to the first chunk holding all of it
                owner = next((i for i, chunk in enumerate(chunks) if chunk.contains(first, last)), None)
            owners.append(owner)
        return owners

    def build_query(self, inputs: DocumentInput, span: Span) -> MentionQuery:
        return build_query(inputs, span, self.vocab, self.preprocess, self.query_limit)

    def score_spans(self, encoder: TransformerEncoder, inputs: DocumentInput, requests: Sequence[tuple]) -> list:
        """Scores (query, spans) requests.

        Returns one (spans, scores) pair per request. Spans that no context
        chunk can hold next to the query cannot be answers and are left out.
        """

        jobs = []
        for r, (query, spans) in enumerate(requests):
            if not spans:
                continue
            chunks = self.chunks(inputs, len(query.ids))
            grouped = defaultdict(list)
            for slot, owner in enumerate(self.assign_chunks(inputs, spans, chunks)):
                if owner is not None:
                    grouped[owner].append(slot)
            for owner in sorted(grouped):
                jobs.append((r, chunks[owner], grouped[owner]))

        results = [[None] * len(spans) for _, spans in requests]
        piece_ids = inputs.piece_ids
        for begin in range(0, len(jobs), self.config.batch_size):
            batch = jobs[begin:begin + self.config.batch_size]
            packed = [pack(requests[r][0].ids, piece_ids[chunk.start:chunk.end], self.vocab.cls_id, self.vocab.sep_id)
                      for r, chunk, _ in batch]
            hidden = encoder.encode_batch(packed, pad_id=self.vocab.pad_id)

            for row, (r, chunk, slots) in enumerate(batch):
                spans = requests[r][1]
                offset = packed[row].context_offset - chunk.start
                first = [inputs.word_first[spans[slot].start] + offset for slot in slots]
                last = [inputs.word_last[spans[slot].end] + offset for slot in slots]
                scores = self.answer_scorer(torch.cat([hidden[row, first], hidden[row, last]], dim=-1))
                for slot, score in zip(slots, scores):
                    results[r][slot] = score

        empty = self.answer_scorer.layers[-1].bias.new_zeros(0)
        scored = []
        for (_, spans), scores in zip(requests, results):
            kept = [slot for slot, score in enumerate(scores) if score is not None]
            scored.append(([spans[slot] for slot in kept],
                           torch.stack([scores[slot] for slot in kept]) if kept else empty))
        return scored

    def forward_scores(self, encoder: TransformerEncoder, inputs: DocumentInput, queries: Sequence[MentionQuery],
                       spans: Sequence[Span]) -> list:
        """s_a(j|i) for every candidate span j under each query, the query's own span excluded"""

        candidates = [[span for span in spans if span != query.source_span] for query in queries]
        scored = self.score_spans(encoder, inputs, list(zip(queries, candidates)))
        return [ForwardScores(spans, scores) for spans, scores in scored]
