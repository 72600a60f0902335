from dataclasses import dataclass
from typing import Iterable, Optional

import torch

from coref.corpus.types import Span
from coref.errors import ContractViolation

# Slate position of the dummy "no coreferent" option
EPSILON = 0


@dataclass
class CandidateSlate:
    """Candidates for one query span; scores[0] is the dummy option fixed at 0"""

    query_span: Optional[Span]
    candidates: list
    scores: torch.Tensor

    def __post_init__(self):
        if self.scores.shape[0] != len(self.candidates) + 1:
            raise ContractViolation(
                f"Slate for {self.query_span} has {len(self.candidates)} candidates but {self.scores.shape[0]} scores")

    @classmethod
    def build(cls, query_span: Optional[Span], candidates: list, overall: torch.Tensor) -> "CandidateSlate":
        return cls(query_span, list(candidates), torch.cat([overall.new_zeros(1), overall]))

    def option(self, index: int) -> Optional[Span]:
        return None if index == EPSILON else self.candidates[index - 1]

    def gold_indices(self, gold: Iterable[Span]) -> list:
        """Slate positions of gold candidates, or the dummy position when none is present"""

        gold = set(gold)
        indices = [i + 1 for i, span in enumerate(self.candidates) if span in gold]
        return indices or [EPSILON]

    def best(self) -> int:
        # argmax returns the first maximum, so ties go to the dummy option
        return int(torch.argmax(self.scores.detach()).item())


def slate_distribution(slate: CandidateSlate) -> torch.Tensor:
    return torch.softmax(slate.scores, dim=0)


def marginal_loss(slate: CandidateSlate, gold_indices: Iterable[int]) -> torch.Tensor:
    """-log of the probability mass on the gold options"""

    gold = sorted(set(gold_indices))
    if not gold:
        raise ContractViolation(f"Empty gold set for {slate.query_span}; map it to the dummy option")
    return torch.logsumexp(slate.scores, dim=0) - torch.logsumexp(slate.scores[gold], dim=0)
