import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from coref.corpus.types import Gender, Span
from coref.logger import create_logger

logger = create_logger(__name__)


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @classmethod
    def of(cls, gold: bool, predicted: bool) -> "Confusion":
        return cls(tp=int(gold and predicted), fp=int(predicted and not gold),
                   fn=int(gold and not predicted), tn=int(not gold and not predicted))

    @property
    def f1(self) -> float:
        precision = self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0
        recall = self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0
        return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


@dataclass(frozen=True)
class GapReport:
    masculine_f1: float
    feminine_f1: float
    bias: float
    overall_f1: float

    def as_records(self) -> list:
        return [{"metric": "gap", "masculine_f1": self.masculine_f1, "feminine_f1": self.feminine_f1,
                 "bias": self.bias, "overall_f1": self.overall_f1}]

    def format_table(self) -> str:
        bias = "inf" if math.isinf(self.bias) else f"{self.bias:.2f}"
        return (f"{'M':>7} {'F':>7} {'Bias':>7} {'O':>7}\n"
                f"{100 * self.masculine_f1:7.1f} {100 * self.feminine_f1:7.1f} {bias:>7} {100 * self.overall_f1:7.1f}")


def gap_bias(feminine_f1: float, masculine_f1: float) -> float:
    if masculine_f1 > 0:
        return feminine_f1 / masculine_f1
    return 1.0 if feminine_f1 == 0 else math.inf


def gap_score(examples: Sequence, predictions: Mapping[str, tuple]) -> GapReport:
    """Per-gender F1 over both candidate decisions of every example"""

    totals = {Gender.MASCULINE: Confusion(), Gender.FEMININE: Confusion()}
    for example in examples:
        if example.example_id not in predictions:
            logger.warning(f"{example.example_id}: no prediction, scoring it as coreferent with neither candidate")
        a, b = predictions.get(example.example_id, (False, False))
        totals[example.pronoun_gender] += Confusion.of(example.a_label, a) + Confusion.of(example.b_label, b)

    masculine = totals[Gender.MASCULINE].f1
    feminine = totals[Gender.FEMININE].f1
    overall = (totals[Gender.MASCULINE] + totals[Gender.FEMININE]).f1
    return GapReport(masculine, feminine, gap_bias(feminine, masculine), overall)


def gap_predictions_from_clusters(clusters: Iterable, pronoun: Span, a: Span, b: Span) -> tuple:
    """Whether the pronoun's cluster holds a mention overlapping A, and one overlapping B"""

    a_linked = b_linked = False
    for cluster in clusters:
        if not any(mention.overlaps(pronoun) for mention in cluster):
            continue
        others = [mention for mention in cluster if not mention.overlaps(pronoun)]
        a_linked |= any(mention.overlaps(a) for mention in others)
        b_linked |= any(mention.overlaps(b) for mention in others)
    return a_linked, b_linked
