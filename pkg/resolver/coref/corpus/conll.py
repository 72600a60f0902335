import re
from collections import defaultdict
from typing import Iterable, Optional, Sequence

from coref.corpus.types import ClusterSet, Document, Span, Token
from coref.errors import ParseError, SerializationError
from coref.logger import create_logger

logger = create_logger(__name__)

BEGIN_DOCUMENT = re.compile(r"^#begin document \((.*)\); part (\d+)")
END_DOCUMENT = "#end document"
COREF_TAG = re.compile(r"^(\()?(\d+)(\))?$")
DOC_KEY = re.compile(r"^(.*)_(\d+)$")

MIN_COLUMNS = 12
WORD_COLUMN = 3
SPEAKER_COLUMN = 9


class _DocumentBuilder:
    def __init__(self, name: str, part: str, source: str):
        self.doc_key = f"{name}_{int(part)}"
        self.genre = name.split("/")[0] if "/" in name else "-"
        self.source = source
        self.tokens = []
        self.sentence = 0
        self.sentence_open = False
        self.stacks = defaultdict(list)
        self.clusters = defaultdict(list)

    def end_sentence(self):
        if self.sentence_open:
            self.sentence += 1
            self.sentence_open = False

    def add(self, columns: list, line_no: int):
        index = len(self.tokens)
        speaker = columns[SPEAKER_COLUMN]
        self.tokens.append(Token(columns[WORD_COLUMN], index, self.sentence, None if speaker == "-" else speaker))
        self.sentence_open = True

        tag = columns[-1]
        if tag == "-":
            return

        for part in tag.split("|"):
            match = COREF_TAG.match(part)
            if not match or not (match.group(1) or match.group(3)):
                raise ParseError(f"{self.source}:{line_no}: malformed coreference tag {part!r} in {self.doc_key}")

            opens, cluster_id, closes = match.groups()
            if opens:
                self.stacks[cluster_id].append(index)
            if closes:
                if not self.stacks[cluster_id]:
                    raise ParseError(
                        f"{self.doc_key}: unbalanced coreference parentheses, "
                        f"cluster {cluster_id} closes without opening on line {line_no}")
                start = self.stacks[cluster_id].pop()
                self.clusters[cluster_id].append(Span(start, index))

    def finish(self) -> Document:
        unclosed = sorted(cluster_id for cluster_id, stack in self.stacks.items() if stack)
        if unclosed:
            raise ParseError(f"{self.doc_key}: unbalanced coreference parentheses, clusters {unclosed} never close")

        ordered = [self.clusters[key] for key in sorted(self.clusters, key=int)]
        return Document(self.doc_key, self.genre, self.tokens, normalize_clusters(ordered, self.doc_key))


def normalize_clusters(clusters: Iterable[Iterable[Span]], doc_key: str = "") -> list:
    """Dedupes spans, keeps each span in its first cluster, drops singletons, sorts"""

    seen = set()
    kept = []
    for cluster in clusters:
        members = []
        for span in dict.fromkeys(cluster):
            if span in seen:
                logger.warning(f"{doc_key}: {span} already belongs to another cluster, dropping it")
                continue
            members.append(span)
        seen.update(members)

        if len(members) < 2:
            logger.warning(f"{doc_key}: dropping singleton cluster {members}")
            continue
        kept.append(sorted(members))

    return sorted(kept)


def parse_conll_lines(lines: Iterable[str], source: str = "<string>") -> list:
    documents = []
    builder: Optional[_DocumentBuilder] = None

    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")

        if line.startswith("#begin document"):
            match = BEGIN_DOCUMENT.match(line)
            if not match:
                raise ParseError(f"{source}:{line_no}: malformed document header {line!r}")
            if builder is not None:
                raise ParseError(f"{source}:{line_no}: {builder.doc_key} is missing '{END_DOCUMENT}'")
            builder = _DocumentBuilder(match.group(1), match.group(2), source)
        elif line.startswith(END_DOCUMENT):
            if builder is None:
                raise ParseError(f"{source}:{line_no}: '{END_DOCUMENT}' outside of a document")
            documents.append(builder.finish())
            builder = None
        elif line.startswith("#"):
            continue
        elif not line.strip():
            if builder is not None:
                builder.end_sentence()
        else:
            if builder is None:
                raise ParseError(f"{source}:{line_no}: token line outside of a document")
            columns = line.split()
            if len(columns) < MIN_COLUMNS:
                raise ParseError(
                    f"{source}:{line_no}: expected at least {MIN_COLUMNS} columns, got {len(columns)}")
            builder.add(columns, line_no)

    if builder is not None:
        raise ParseError(f"{source}: {builder.doc_key} is missing '{END_DOCUMENT}'")

    logger.debug(f"Parsed {len(documents)} documents from {source}")
    return documents


def parse_conll(path: str) -> list:
    try:
        with open(path, encoding="utf-8") as f:
            return parse_conll_lines(f, source=path)
    except OSError as e:
        raise ParseError(f"Unable to read {path}: {e}") from e


def _split_doc_key(doc_key: str):
    match = DOC_KEY.match(doc_key)
    if match:
        return match.group(1), int(match.group(2))
    return doc_key, 0


def _coref_column(doc: Document, clusters: Sequence[Sequence[Span]]) -> list:
    owner = {}
    for cluster_id, cluster in enumerate(clusters):
        for span in cluster:
            if span.end >= doc.num_words:
                raise SerializationError(f"{doc.doc_key}: {span} is out of bounds for {doc.num_words} words")
            if span in owner and owner[span] != cluster_id:
                raise SerializationError(f"{doc.doc_key}: {span} is assigned to two clusters")
            owner[span] = cluster_id

    starts, ends, singles = defaultdict(list), defaultdict(list), defaultdict(list)
    for span, cluster_id in sorted(owner.items()):
        if span.start == span.end:
            singles[span.start].append(cluster_id)
        else:
            starts[span.start].append((span.end, cluster_id))
            ends[span.end].append((span.start, cluster_id))

    column = []
    for i in range(doc.num_words):
        # Closings go first so a cluster ending and restarting on one word pairs correctly
        parts = [f"{cluster_id})" for _, cluster_id in sorted(ends[i], reverse=True)]
        parts += [f"({cluster_id})" for cluster_id in singles[i]]
        parts += [f"({cluster_id}" for _, cluster_id in sorted(starts[i], reverse=True)]
        column.append("|".join(parts) if parts else "-")
    return column


def format_document(doc: Document, clusters=None) -> str:
    if clusters is None:
        clusters = doc.gold_clusters
    if isinstance(clusters, ClusterSet):
        clusters = clusters.as_lists()

    name, part = _split_doc_key(doc.doc_key)
    tags = _coref_column(doc, clusters)

    lines = [f"#begin document ({name}); part {part:03d}"]
    word_in_sentence = 0
    for i, token in enumerate(doc.tokens):
        if i and token.sentence_index != doc.tokens[i - 1].sentence_index:
            lines.append("")
            word_in_sentence = 0
        columns = [name, str(part), str(word_in_sentence), token.text,
                   "-", "-", "-", "-", "-", token.speaker or "-", "*", tags[i]]
        lines.append("\t".join(columns))
        word_in_sentence += 1

    if doc.tokens:
        lines.append("")
    lines.append(END_DOCUMENT)
    return "\n".join(lines) + "\n"


def write_conll(docs: Sequence[Document], clusters: Optional[Sequence] = None, path: str = None):
    """Writes documents with predicted clusters (gold clusters when none are given)"""

    if clusters is not None and len(clusters) != len(docs):
        raise SerializationError(f"Got {len(clusters)} cluster sets for {len(docs)} documents")

    with open(path, "w", encoding="utf-8") as f:
        for i, doc in enumerate(docs):
            f.write(format_document(doc, None if clusters is None else clusters[i]))

    logger.debug(f"Wrote {len(docs)} documents to {path}")
