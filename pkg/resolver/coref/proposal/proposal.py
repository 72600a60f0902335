import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from coref.config import ProposalConfig
from coref.corpus.types import Span
from coref.errors import ContractViolation
from coref.preprocess import enumerate_spans


class FeedForwardScorer(nn.Module):
    """Two-layer feed-forward head producing one scalar per input vector"""

    def __init__(self, input_dim: int, hidden_dim: int, dropout: float = 0.0):
        super().__init__()
        self.layers = nn.Sequential(
            nn.Linear(input_dim, hidden_dim),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(hidden_dim, 1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x).squeeze(-1)


@dataclass(frozen=True)
class MentionScore:
    span: Span
    start_score: float
    end_score: float
    joint_score: float
    s_m: float

    @classmethod
    def of(cls, span: Span, start_score: float, end_score: float, joint_score: float) -> "MentionScore":
        return cls(span, start_score, end_score, joint_score, (start_score + end_score + joint_score) / 3)


@dataclass
class SpanScores:
    spans: list
    start: torch.Tensor
    end: torch.Tensor
    joint: torch.Tensor

    @property
    def mention(self) -> torch.Tensor:
        return (self.start + self.end + self.joint) / 3

    def __len__(self):
        return len(self.spans)

    def mention_score(self, index: int) -> MentionScore:
        return MentionScore.of(self.spans[index], self.start[index].item(), self.end[index].item(),
                               self.joint[index].item())


def keep_count(num_words: int, keep_ratio: float) -> int:
    # Rounding first keeps 0.2 * 50 from landing on 10.000000000000002
    return math.ceil(round(keep_ratio * num_words, 9))


class MentionProposer(nn.Module):
    def __init__(self, hidden_dim: int, config: ProposalConfig, dropout: float = 0.0):
        super().__init__()
        config.validate()
        self.config = config
        self.start_scorer = FeedForwardScorer(hidden_dim, hidden_dim, dropout)
        self.end_scorer = FeedForwardScorer(hidden_dim, hidden_dim, dropout)
        self.joint_scorer = FeedForwardScorer(2 * hidden_dim, hidden_dim, dropout)

    def score_pieces(self, vectors: torch.Tensor, special_mask: Sequence[bool]):
        """Start and end scores for every piece; inserted pieces score -inf"""

        mask = torch.tensor(special_mask, dtype=torch.bool, device=vectors.device)
        start = self.start_scorer(vectors).masked_fill(mask, float("-inf"))
        end = self.end_scorer(vectors).masked_fill(mask, float("-inf"))
        return start, end

    def score_boundaries(self, encoded):
        """Start score of each word's first piece and end score of its last piece"""

        start, end = self.score_pieces(encoded.vectors, encoded.inputs.special_mask)
        return start[encoded.inputs.word_first], end[encoded.inputs.word_last]

    def _joint(self, encoded, spans: Sequence[Span]) -> torch.Tensor:
        first = [encoded.inputs.word_first[span.start] for span in spans]
        last = [encoded.inputs.word_last[span.end] for span in spans]
        return self.joint_scorer(torch.cat([encoded.vectors[first], encoded.vectors[last]], dim=-1))

    def score_span(self, encoded, span: Span) -> torch.Tensor:
        if span.width > self.config.max_span_length:
            raise ContractViolation(f"{span} is wider than max_span_length={self.config.max_span_length}")
        return self._joint(encoded, [span])[0]

    def candidates(self, encoded) -> list:
        return enumerate_spans(encoded.inputs, self.config.max_span_length, self.config.within_sentence)

    def score_candidates(self, encoded, spans: Optional[Sequence[Span]] = None) -> SpanScores:
        spans = self.candidates(encoded) if spans is None else list(spans)
        if not spans:
            empty = encoded.vectors.new_zeros(0)
            return SpanScores([], empty, empty, empty)

        start, end = self.score_boundaries(encoded)
        starts = torch.tensor([span.start for span in spans], device=encoded.vectors.device)
        ends = torch.tensor([span.end for span in spans], device=encoded.vectors.device)
        return SpanScores(spans, start[starts], end[ends], self._joint(encoded, spans))

    def top_indices(self, mention: torch.Tensor, num_words: int, keep_ratio: Optional[float] = None) -> list:
        """Indices of the highest s_m spans, ties broken by enumeration order"""

        keep_ratio = self.config.keep_ratio if keep_ratio is None else keep_ratio
        values = mention.tolist()
        order = sorted(range(len(values)), key=lambda i: -values[i])
        return order[:min(len(values), keep_count(num_words, keep_ratio))]

    def propose(self, encoded, keep_ratio: Optional[float] = None) -> list:
        scores = self.score_candidates(encoded)
        kept = self.top_indices(scores.mention, encoded.inputs.num_words, keep_ratio)
        return [scores.mention_score(i) for i in kept]

    def pretrain_loss(self, encoded, gold_mentions: Iterable[Span], scores: Optional[SpanScores] = None,
                      generator: Optional[torch.Generator] = None) -> torch.Tensor:
        """Binary cross-entropy of the start, end and span classifiers, summed"""

        num_words = encoded.inputs.num_words
        if num_words == 0:
            return encoded.vectors.new_zeros(())

        gold = set(gold_mentions)
        device = encoded.vectors.device
        start_labels = torch.zeros(num_words, device=device)
        end_labels = torch.zeros(num_words, device=device)
        for span in gold:
            start_labels[span.start] = 1.0
            end_labels[span.end] = 1.0

        start, end = self.score_boundaries(encoded)
        loss = F.binary_cross_entropy_with_logits(start, start_labels)
        loss = loss + F.binary_cross_entropy_with_logits(end, end_labels)

        scores = self.score_candidates(encoded) if scores is None else scores
        positives = [i for i, span in enumerate(scores.spans) if span in gold]
        negatives = [i for i, span in enumerate(scores.spans) if span not in gold]

        # With no positives there is nothing to balance against, keep every negative
        limit = math.ceil(self.config.negative_ratio * len(positives)) if positives else len(negatives)
        if limit < len(negatives):
            sample = torch.randperm(len(negatives), generator=generator)[:limit]
            negatives = [negatives[i] for i in sorted(sample.tolist())]

        selected = positives + negatives
        if selected:
            labels = torch.tensor([1.0] * len(positives) + [0.0] * len(negatives), device=device)
            loss = loss + F.binary_cross_entropy_with_logits(scores.joint[selected], labels)
        return loss
