from bisect import bisect_left, bisect_right
from typing import Optional

from nltk.tokenize import PunktSentenceTokenizer, WordPunctTokenizer

from coref.corpus.types import CharSpan, Span, Token
from coref.errors import DataError

# Untrained Punkt needs no downloaded model data
_sentence_splitter = PunktSentenceTokenizer()
_word_splitter = WordPunctTokenizer()


def tokenize_text(text: str, speaker: Optional[str] = None):
    """Splits raw text into word Tokens with sentence indices.

    Returns the tokens and a function mapping a CharSpan onto the word Span
    of every word it overlaps.
    """

    tokens = []
    starts, ends = [], []
    sentence_index = 0
    for sentence_start, sentence_end in _sentence_splitter.span_tokenize(text):
        words = list(_word_splitter.span_tokenize(text[sentence_start:sentence_end]))
        if not words:
            continue
        for word_start, word_end in words:
            starts.append(sentence_start + word_start)
            ends.append(sentence_start + word_end)
            tokens.append(Token(text[starts[-1]:ends[-1]], len(tokens), sentence_index, speaker))
        sentence_index += 1

    def char_to_span(span: CharSpan) -> Span:
        first = bisect_right(ends, span.start)
        last = bisect_left(starts, span.end) - 1
        if first > last:
            raise DataError(f"Characters [{span.start}, {span.end}) do not cover any word")
        return Span(first, last)

    return tokens, char_to_span
