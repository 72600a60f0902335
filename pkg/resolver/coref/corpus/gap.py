import csv
from typing import Iterable, Mapping

from coref.corpus.text import tokenize_text
from coref.corpus.types import CharSpan, Document, Gender, GapExample
from coref.errors import ParseError
from coref.logger import create_logger

logger = create_logger(__name__)

GAP_COLUMNS = ("ID", "Text", "Pronoun", "Pronoun-offset", "A", "A-offset", "A-coref",
               "B", "B-offset", "B-coref")
PREDICTION_COLUMNS = ("ID", "A-coref", "B-coref")

MASCULINE = {"he", "him", "his", "himself"}
FEMININE = {"she", "her", "hers", "herself"}


def _label(value: str, example_id: str, column: str) -> bool:
    normalized = value.strip().upper()
    if normalized not in ("TRUE", "FALSE"):
        raise ParseError(f"{example_id}: {column} must be TRUE or FALSE, got {value!r}")
    return normalized == "TRUE"


def _char_span(text: str, surface: str, offset: str, example_id: str, column: str) -> CharSpan:
    try:
        start = int(offset)
    except ValueError as e:
        raise ParseError(f"{example_id}: {column} offset {offset!r} is not an integer") from e

    span = CharSpan(start, start + len(surface))
    if start < 0 or span.end > len(text) or span.text(text) != surface:
        raise ParseError(
            f"{example_id}: {column} offset {start} points at {span.text(text)!r}, expected {surface!r}")
    return span


def _gender(pronoun: str, example_id: str) -> Gender:
    word = pronoun.lower()
    if word in MASCULINE:
        return Gender.MASCULINE
    if word in FEMININE:
        return Gender.FEMININE
    raise ParseError(f"{example_id}: {pronoun!r} is not a gendered pronoun")


def parse_gap_rows(rows: Iterable[Mapping[str, str]]) -> list:
    examples = []
    for row in rows:
        missing = [column for column in GAP_COLUMNS if column not in row]
        if missing:
            raise ParseError(f"GAP row is missing columns {missing}")

        example_id = row["ID"]
        text = row["Text"]
        examples.append(GapExample(
            example_id=example_id,
            text=text,
            pronoun=_char_span(text, row["Pronoun"], row["Pronoun-offset"], example_id, "Pronoun"),
            candidate_a=_char_span(text, row["A"], row["A-offset"], example_id, "A"),
            a_label=_label(row["A-coref"], example_id, "A-coref"),
            candidate_b=_char_span(text, row["B"], row["B-offset"], example_id, "B"),
            b_label=_label(row["B-coref"], example_id, "B-coref"),
            pronoun_gender=_gender(row["Pronoun"], example_id),
        ))
    return examples


def parse_gap(path: str) -> list:
    try:
        with open(path, encoding="utf-8", newline="") as f:
            examples = parse_gap_rows(csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE))
    except OSError as e:
        raise ParseError(f"Unable to read {path}: {e}") from e

    logger.debug(f"Parsed {len(examples)} GAP examples from {path}")
    return examples


def gap_to_document(example: GapExample):
    """Converts a GAP row into a word-level Document.

    Returns the document and the word spans of the pronoun, A and B. Gold
    clusters link the pronoun with every candidate labelled TRUE.
    """

    tokens, char_to_span = tokenize_text(example.text, speaker=None)
    pronoun = char_to_span(example.pronoun)
    a = char_to_span(example.candidate_a)
    b = char_to_span(example.candidate_b)

    cluster = [pronoun]
    if example.a_label:
        cluster.append(a)
    if example.b_label:
        cluster.append(b)
    clusters = [sorted(set(cluster))] if len(set(cluster)) > 1 else []

    doc = Document(f"wiki/{example.example_id}_0", "wiki", tokens, clusters)
    return doc, pronoun, a, b


def write_gap_predictions(predictions: Mapping[str, tuple], path: str):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(PREDICTION_COLUMNS)
        for example_id, (a, b) in predictions.items():
            writer.writerow([example_id, "TRUE" if a else "FALSE", "TRUE" if b else "FALSE"])


def parse_gap_predictions(path: str) -> dict:
    """Reads a GAP system output TSV, with or without a header row"""

    predictions = {}
    try:
        with open(path, encoding="utf-8", newline="") as f:
            for row in csv.reader(f, delimiter="\t"):
                if not row or row[0] == "ID":
                    continue
                if len(row) < 3:
                    raise ParseError(f"{path}: prediction row {row} needs ID, A-coref and B-coref")
                predictions[row[0]] = (_label(row[1], row[0], "A-coref"), _label(row[2], row[0], "B-coref"))
    except OSError as e:
        raise ParseError(f"Unable to read {path}: {e}") from e
    return predictions
