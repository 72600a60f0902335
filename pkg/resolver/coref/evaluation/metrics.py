"""Coreference metrics with the official CoNLL-2012 scorer's conventions.

Each metric first produces counts (precision numerator/denominator, recall
numerator/denominator) so corpus scores sum counts over documents before
dividing. A zero denominator scores 0.
"""

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from coref.errors import ContractViolation

SPEAKER_BUCKETS = (1, 2, 3, 4, 5, 6, 7)


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def _f1(p: float, r: float) -> float:
    if p + r:
        return 2 * p * r / (p + r)
    return 0.0


@dataclass(frozen=True)
class Counts:
    p_num: float = 0.0
    p_den: float = 0.0
    r_num: float = 0.0
    r_den: float = 0.0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.p_num + other.p_num, self.p_den + other.p_den,
                      self.r_num + other.r_num, self.r_den + other.r_den)

    def prf(self) -> PRF:
        p = self.p_num / self.p_den if self.p_den > 0 else 0.0
        r = self.r_num / self.r_den if self.r_den > 0 else 0.0
        return PRF(p, r, _f1(p, r))


def _clusters(clusters: Iterable[Iterable]) -> list:
    return [frozenset(cluster) for cluster in clusters if cluster]


def _mapping(clusters: Sequence[frozenset]) -> dict:
    mapping = {}
    for index, cluster in enumerate(clusters):
        for mention in cluster:
            mapping.setdefault(mention, index)
    return mapping


def _vilain(clusters: Sequence[frozenset], other_mapping: dict) -> tuple:
    numerator = denominator = 0
    for cluster in clusters:
        corresponding = set()
        unaligned = 0
        for mention in cluster:
            if mention in other_mapping:
                corresponding.add(other_mapping[mention])
            else:
                unaligned += 1
        numerator += len(cluster) - unaligned - len(corresponding)
        denominator += len(cluster) - 1
    return numerator, denominator


def muc_counts(gold, pred) -> Counts:
    gold, pred = _clusters(gold), _clusters(pred)
    p_num, p_den = _vilain(pred, _mapping(gold))
    r_num, r_den = _vilain(gold, _mapping(pred))
    return Counts(p_num, p_den, r_num, r_den)


def _b_cubed(clusters: Sequence[frozenset], others: Sequence[frozenset]) -> tuple:
    other_mapping = _mapping(others)
    total = 0.0
    mentions = 0
    for cluster in clusters:
        for mention in cluster:
            mentions += 1
            if mention in other_mapping:
                total += len(cluster & others[other_mapping[mention]]) / len(cluster)
    return total, mentions


def b_cubed_counts(gold, pred) -> Counts:
    gold, pred = _clusters(gold), _clusters(pred)
    p_num, p_den = _b_cubed(pred, gold)
    r_num, r_den = _b_cubed(gold, pred)
    return Counts(p_num, p_den, r_num, r_den)


def phi4(a: frozenset, b: frozenset) -> float:
    return 2 * len(a & b) / (len(a) + len(b))


def ceaf_phi4_counts(gold, pred) -> Counts:
    gold, pred = _clusters(gold), _clusters(pred)
    if not gold or not pred:
        return Counts(0.0, len(pred), 0.0, len(gold))

    similarity = np.array([[phi4(g, p) for p in pred] for g in gold])
    rows, cols = linear_sum_assignment(similarity, maximize=True)
    aligned = float(similarity[rows, cols].sum())
    return Counts(aligned, len(pred), aligned, len(gold))


def muc(gold, pred) -> PRF:
    return muc_counts(gold, pred).prf()


def b_cubed(gold, pred) -> PRF:
    return b_cubed_counts(gold, pred).prf()


def ceaf_phi4(gold, pred) -> PRF:
    return ceaf_phi4_counts(gold, pred).prf()


@dataclass(frozen=True)
class MetricReport:
    muc: PRF
    b_cubed: PRF
    ceaf_phi4: PRF

    @property
    def conll_avg_f1(self) -> float:
        return (self.muc.f1 + self.b_cubed.f1 + self.ceaf_phi4.f1) / 3

    def as_records(self) -> list:
        records = [{"metric": name, "precision": prf.precision, "recall": prf.recall, "f1": prf.f1}
                   for name, prf in (("muc", self.muc), ("b_cubed", self.b_cubed), ("ceaf_phi4", self.ceaf_phi4))]
        records.append({"metric": "conll", "f1": self.conll_avg_f1})
        return records

    def format_table(self) -> str:
        lines = [f"{'metric':<10} {'P':>7} {'R':>7} {'F1':>7}"]
        for name, prf in (("MUC", self.muc), ("B3", self.b_cubed), ("CEAF_phi4", self.ceaf_phi4)):
            lines.append(f"{name:<10} {100 * prf.precision:7.2f} {100 * prf.recall:7.2f} {100 * prf.f1:7.2f}")
        lines.append(f"{'CoNLL':<10} {'':>7} {'':>7} {100 * self.conll_avg_f1:7.2f}")
        return "\n".join(lines)


def evaluate_documents(golds: Sequence, preds: Sequence) -> MetricReport:
    """Corpus-level report over paired per-document cluster lists"""

    if len(golds) != len(preds):
        raise ContractViolation(f"Got {len(golds)} gold documents and {len(preds)} predictions")

    totals = [Counts(), Counts(), Counts()]
    for gold, pred in zip(golds, preds):
        totals[0] += muc_counts(gold, pred)
        totals[1] += b_cubed_counts(gold, pred)
        totals[2] += ceaf_phi4_counts(gold, pred)
    return MetricReport(*(counts.prf() for counts in totals))


def mention_hits(gold_mentions: Iterable, proposed: Iterable) -> int:
    return len(set(gold_mentions) & set(proposed))


def recall_rate(hits: int, total: int) -> float:
    """hits / total, with nothing to recall counting as full recall"""
    return hits / total if total else 1.0


def mention_recall(gold_mentions: Iterable, proposed: Iterable) -> float:
    gold = set(gold_mentions)
    return recall_rate(mention_hits(gold, proposed), len(gold))


def bucket_speakers(count: int) -> int:
    """Speaker-count bucket, with 7 standing for seven or more"""
    return min(max(count, 1), SPEAKER_BUCKETS[-1])


def bucket_label(bucket: int) -> str:
    return f"{bucket}+" if bucket == SPEAKER_BUCKETS[-1] else str(bucket)


def evaluate_by_speakers(docs: Sequence, preds: Sequence) -> dict:
    """MetricReport per speaker-count bucket, only for buckets holding documents"""

    grouped = {}
    for doc, pred in zip(docs, preds):
        grouped.setdefault(bucket_speakers(len(doc.speakers)), []).append((doc.gold_clusters, pred))
    return {bucket: evaluate_documents([g for g, _ in pairs], [p for _, p in pairs])
            for bucket, pairs in sorted(grouped.items())}
