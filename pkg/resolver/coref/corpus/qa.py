import json
from typing import Mapping

from coref.corpus.text import tokenize_text
from coref.corpus.types import CharSpan, Document, QaExample
from coref.errors import DataError, ParseError
from coref.logger import create_logger

logger = create_logger(__name__)


def _answers(qa: Mapping, context: str) -> tuple:
    qid = qa.get("id", "<missing id>")
    if qa.get("is_impossible", False):
        return ()

    spans = []
    for answer in qa.get("answers", []):
        try:
            text = answer["text"]
            start = int(answer["answer_start"])
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"{qid}: malformed answer {answer!r}") from e

        span = CharSpan(start, start + len(text))
        if start < 0 or span.text(context) != text:
            raise ParseError(f"{qid}: answer_start {start} points at {span.text(context)!r}, expected {text!r}")
        spans.append(span)

    # SQuAD dev files repeat the same answer once per annotator
    return tuple(dict.fromkeys(spans))


def parse_qa_data(data: Mapping, source: str = "<string>") -> list:
    examples = []
    try:
        articles = data["data"]
    except (KeyError, TypeError) as e:
        raise ParseError(f"{source}: expected a top-level 'data' list") from e

    for article in articles:
        for paragraph in article.get("paragraphs", []):
            context = paragraph["context"]
            for qa in paragraph.get("qas", []):
                if "id" not in qa or "question" not in qa:
                    raise ParseError(f"{source}: question without id or text in article {article.get('title')!r}")
                examples.append(QaExample(qa["id"], context, qa["question"], _answers(qa, context)))

    return examples


def parse_qa(path: str) -> list:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"Unable to read {path}: {e}") from e

    examples = parse_qa_data(data, source=path)
    logger.debug(f"Parsed {len(examples)} questions from {path}")
    return examples


def qa_to_document(example: QaExample):
    """Converts a QA context into a word-level Document.

    Returns the document, the question words and the answer word spans.
    Answers that cannot be aligned to words are dropped with a warning.
    """

    tokens, char_to_span = tokenize_text(example.context)
    question, _ = tokenize_text(example.question)

    answers = []
    for answer in example.answers:
        try:
            answers.append(char_to_span(answer))
        except DataError as e:
            logger.warning(f"{example.qid}: dropping answer: {e}")

    doc = Document(f"qa/{example.qid}_0", "qa", tokens, [])
    return doc, [token.text for token in question], sorted(set(answers))
