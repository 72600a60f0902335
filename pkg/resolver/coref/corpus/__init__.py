from .types import CharSpan, ClusterSet, Document, Gender, GapExample, QaExample, Span, Token
from .conll import format_document, normalize_clusters, parse_conll, parse_conll_lines, write_conll
from .gap import gap_to_document, parse_gap, parse_gap_predictions, parse_gap_rows, write_gap_predictions
from .qa import parse_qa, parse_qa_data, qa_to_document
from .synthetic import generate_corpus
from .text import tokenize_text
