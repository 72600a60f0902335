import random

import pytest

from coref.cli.analysis import build_vocabulary
from coref.config import RunConfig
from coref.corpus import Document, Span, Token, generate_corpus, parse_qa_data
from coref.corpus.synthetic import FEMALE_NAMES, MALE_NAMES, OBJECTS, PLACES
from coref.models import CorefModel
from coref.train import set_seed

TINY = {
    "seed": 7,
    "preprocess.window_size": 64,
    "encoder.hidden_dim": 32,
    "encoder.num_layers": 2,
    "encoder.num_heads": 4,
    "encoder.max_positions": 64,
    "encoder.dropout": 0.0,
    "proposal.max_span_length": 4,
    "linking.antecedent_cap": 8,
    "linking.max_query_length": 24,
    "linking.batch_size": 4,
    "train.epochs": 1,
    "train.proposal_epochs": 1,
    "train.qa_epochs": 1,
    "train.progress": False,
}


def tiny_config(**overrides) -> RunConfig:
    config = RunConfig().update(TINY)
    for key, value in overrides.items():
        config.set(key.replace("__", "."), value)
    return config.validate()


def make_doc(sentences, speakers=None, clusters=(), doc_key="test/doc_0") -> Document:
    """Document from lists of words, with one optional speaker per sentence"""

    tokens = []
    for s, words in enumerate(sentences):
        speaker = speakers[s] if speakers else None
        for word in words:
            tokens.append(Token(word, len(tokens), s, speaker))
    return Document(doc_key, doc_key.split("/")[0], tokens,
                    [sorted(Span(*pair) for pair in cluster) for cluster in clusters])


def qa_corpus(size=50, seed=5):
    """SQuAD style questions over two sentence stories, every fifth one unanswerable"""

    rng = random.Random(seed)
    paragraphs = []
    for q in range(size):
        male, female = rng.choice(MALE_NAMES), rng.choice(FEMALE_NAMES)
        thing, place = rng.choice(OBJECTS), rng.choice(PLACES)
        context = f"{male} met {female} at the {place}. He gave her a {thing}."
        if q % 5 == 4:
            qa = {"id": f"q{q}", "question": "Who sang a song?", "is_impossible": True, "answers": []}
        elif q % 2:
            answer = f"a {thing}"
            qa = {"id": f"q{q}", "question": f"What did {male} give {female}?",
                  "answers": [{"text": answer, "answer_start": context.rindex(answer)}]}
        else:
            qa = {"id": f"q{q}", "question": f"Who met {female}?", "answers": [{"text": male, "answer_start": 0}]}
        paragraphs.append({"context": context, "qas": [qa]})
    return parse_qa_data({"data": [{"title": "stories", "paragraphs": paragraphs}]})


@pytest.fixture
def config():
    return tiny_config()


@pytest.fixture
def docs():
    return generate_corpus(4, seed=13)


@pytest.fixture
def dialogue_docs():
    return generate_corpus(4, seed=13, dialogue=True, max_speakers=4)


@pytest.fixture
def vocab(config, docs, dialogue_docs):
    return build_vocabulary(config, docs + dialogue_docs)


@pytest.fixture
def model(config, vocab):
    set_seed(config.seed)
    model = CorefModel(config, vocab)
    model.eval()
    return model
