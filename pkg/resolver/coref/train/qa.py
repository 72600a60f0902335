from dataclasses import dataclass
from typing import Sequence

from coref.corpus.qa import qa_to_document
from coref.corpus.types import Document
from coref.linking import build_question
from coref.logger import create_logger
from coref.preprocess import enumerate_spans
from coref.train.slates import CandidateSlate

logger = create_logger(__name__)


@dataclass
class QaInstance:
    qid: str
    doc: Document
    question: list
    answers: list

    @property
    def answerable(self) -> bool:
        return bool(self.answers)


def prepare_qa(examples: Sequence, max_span_length: int, within_sentence: bool = True) -> list:
    """Word-level QA instances whose answers fit the span universe.

    Answerable questions that lose every answer are skipped, since their
    gold would otherwise turn into the dummy option.
    """

    instances = []
    for example in examples:
        doc, question, answers = qa_to_document(example)
        kept = [span for span in answers if span.width <= max_span_length
                and (not within_sentence or doc.sentence_of(span.start) == doc.sentence_of(span.end))]
        if len(kept) < len(answers):
            logger.warning(f"{example.qid}: dropping {len(answers) - len(kept)} answers wider than "
                           f"{max_span_length} words or crossing sentences")
        if example.answerable and not kept:
            logger.warning(f"{example.qid}: no usable answer left, skipping the question")
            continue
        instances.append(QaInstance(example.qid, doc, question, kept))
    return instances


def qa_slate(model, instance: QaInstance):
    """Every candidate span of the context scored under the question, plus the dummy option"""

    inputs = model.prepare(instance.doc)
    spans = enumerate_spans(inputs, model.config.proposal.max_span_length, model.config.proposal.within_sentence)
    query = build_question(instance.question, model.vocab, model.linker.query_limit)
    forward, = model.linker.forward_scores(model.encoder, inputs, [query], spans)

    slate = CandidateSlate.build(None, forward.spans, forward.scores)
    return slate, slate.gold_indices(instance.answers)
