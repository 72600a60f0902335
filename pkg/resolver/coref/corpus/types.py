import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

from coref.errors import ContractViolation


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive word interval [start, end]"""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.start > self.end:
            raise ContractViolation(f"Invalid span ({self.start}, {self.end})")

    @property
    def width(self) -> int:
        return self.end - self.start + 1

    def overlaps(self, other: "Span") -> bool:
        return self.start <= other.end and other.start <= self.end

    def __repr__(self):
        return f"Span({self.start}, {self.end})"


@dataclass(frozen=True)
class CharSpan:
    """Character interval [start, end) into some text"""

    start: int
    end: int

    def text(self, source: str) -> str:
        return source[self.start:self.end]


@dataclass(frozen=True)
class Token:
    text: str
    word_index: int
    sentence_index: int
    speaker: Optional[str] = None


@dataclass
class Document:
    doc_key: str
    genre: str
    tokens: list
    gold_clusters: list = field(default_factory=list)

    @property
    def num_words(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list:
        return [token.text for token in self.tokens]

    @property
    def sentences(self) -> list:
        """Word ranges [start, end) of each sentence, in order"""

        bounds = []
        for token in self.tokens:
            if bounds and bounds[-1][0] == token.sentence_index:
                bounds[-1][2] = token.word_index + 1
            else:
                bounds.append([token.sentence_index, token.word_index, token.word_index + 1])
        return [(start, end) for _, start, end in bounds]

    @property
    def speakers(self) -> set:
        return {token.speaker for token in self.tokens if token.speaker is not None}

    @property
    def gold_mentions(self) -> set:
        return {span for cluster in self.gold_clusters for span in cluster}

    def sentence_of(self, word_index: int) -> int:
        return self.tokens[word_index].sentence_index

    def span_text(self, span: Span) -> str:
        return " ".join(token.text for token in self.tokens[span.start:span.end + 1])

    def validate(self):
        for i, token in enumerate(self.tokens):
            if token.word_index != i:
                raise ContractViolation(f"{self.doc_key}: word index gap at position {i}")
            if i and token.sentence_index < self.tokens[i - 1].sentence_index:
                raise ContractViolation(f"{self.doc_key}: sentence index decreases at word {i}")

        seen = set()
        for cluster in self.gold_clusters:
            if len(cluster) < 2 or len(set(cluster)) != len(cluster):
                raise ContractViolation(f"{self.doc_key}: malformed gold cluster {cluster}")
            for span in cluster:
                if span.end >= self.num_words:
                    raise ContractViolation(f"{self.doc_key}: {span} is out of bounds")
                if span in seen:
                    raise ContractViolation(f"{self.doc_key}: {span} appears in two gold clusters")
                seen.add(span)
        return self


class Gender(enum.Enum):
    MASCULINE = "masculine"
    FEMININE = "feminine"


@dataclass(frozen=True)
class GapExample:
    example_id: str
    text: str
    pronoun: CharSpan
    candidate_a: CharSpan
    a_label: bool
    candidate_b: CharSpan
    b_label: bool
    pronoun_gender: Gender


@dataclass(frozen=True)
class QaExample:
    qid: str
    context: str
    question: str
    answers: tuple = ()

    @property
    def answerable(self) -> bool:
        return bool(self.answers)


class ClusterSet:
    """Disjoint clusters of spans, each holding at least two spans"""

    def __init__(self, clusters: Iterable[Iterable[Span]] = ()):
        normalized = []
        seen = set()
        for cluster in clusters:
            members = frozenset(cluster)
            if len(members) < 2:
                raise ContractViolation(f"Cluster {sorted(members)} has fewer than two spans")
            if seen & members:
                raise ContractViolation(f"Spans {sorted(seen & members)} appear in two clusters")
            seen |= members
            normalized.append(members)

        self.clusters = sorted(normalized, key=lambda c: sorted(c))

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[Span]]) -> "ClusterSet":
        """Builds a ClusterSet keeping the first cluster a span appears in and dropping singletons"""

        seen = set()
        kept = []
        for cluster in clusters:
            members = [span for span in dict.fromkeys(cluster) if span not in seen]
            seen.update(members)
            if len(members) >= 2:
                kept.append(members)
        return cls(kept)

    def mentions(self) -> set:
        return set().union(*self.clusters) if self.clusters else set()

    def cluster_of(self, span: Span) -> Optional[frozenset]:
        for cluster in self.clusters:
            if span in cluster:
                return cluster
        return None

    def as_lists(self) -> list:
        return [sorted(cluster) for cluster in self.clusters]

    def __iter__(self):
        return iter(self.clusters)

    def __len__(self):
        return len(self.clusters)

    def __eq__(self, other):
        if not isinstance(other, ClusterSet):
            return NotImplemented
        return set(self.clusters) == set(other.clusters)

    def __repr__(self):
        return f"ClusterSet({self.as_lists()})"
