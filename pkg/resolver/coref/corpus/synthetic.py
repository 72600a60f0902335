"""Synthetic coreference corpus with unambiguous pronoun patterns.

Grammar. A narrative document introduces one male name M, one female name F
and one object O:

    M met F at the PLACE .
    then 4-6 sentences drawn from
        He gave her a O .        She thanked him .       She liked the O .
        It was ADJ .             M smiled at her .       F looked at him .
        He kept it .

He/him/M corefer, she/her/F corefer, "a O"/"the O"/it corefer.

A dialogue document has k speakers, each a name. Every utterance is one
sentence spoken by one speaker X, about another speaker Y and the object O:

    I saw Y today .          I like the O .
    Y told me about it .     My friend Y is here .

I/me/My corefer with X (only the speaker column tells which X), Y corefers
with every other mention of Y, and the O mentions corefer.
"""

import random
from collections import defaultdict

from coref.corpus.conll import normalize_clusters
from coref.corpus.types import Document, Span, Token

MALE_NAMES = ["John", "Peter", "Mark", "David", "Paul", "James", "Tom", "Henry", "Oscar", "Victor"]
FEMALE_NAMES = ["Mary", "Alice", "Susan", "Emma", "Laura", "Julia", "Anna", "Clara", "Nora", "Rita"]
OBJECTS = ["book", "lamp", "bike", "clock", "guitar", "camera", "kettle", "ring", "map", "chair"]
PLACES = ["market", "station", "library", "park", "museum", "harbor", "cafe", "school"]
ADJECTIVES = ["old", "new", "cheap", "heavy", "red", "broken", "shiny", "small"]

# Each template item is (text, entity); entity is None for words outside any mention
NARRATIVE = [
    [("He", "M"), ("gave", None), ("her", "F"), ("a {O}", "O"), (".", None)],
    [("She", "F"), ("thanked", None), ("him", "M"), (".", None)],
    [("She", "F"), ("liked", None), ("the {O}", "O"), (".", None)],
    [("It", "O"), ("was", None), ("{ADJ}", None), (".", None)],
    [("{M}", "M"), ("smiled", None), ("at", None), ("her", "F"), (".", None)],
    [("{F}", "F"), ("looked", None), ("at", None), ("him", "M"), (".", None)],
    [("He", "M"), ("kept", None), ("it", "O"), (".", None)],
]
INTRODUCTION = [("{M}", "M"), ("met", None), ("{F}", "F"), ("at", None), ("the", None), ("{PLACE}", None),
                (".", None)]

DIALOGUE = [
    [("I", "X"), ("saw", None), ("{Y}", "Y"), ("today", None), (".", None)],
    [("I", "X"), ("like", None), ("the {O}", "O"), (".", None)],
    [("{Y}", "Y"), ("told", None), ("me", "X"), ("about", None), ("it", "O"), (".", None)],
    [("My", "X"), ("friend", None), ("{Y}", "Y"), ("is", None), ("here", None), (".", None)],
]
SOLO = [
    [("I", "X"), ("like", None), ("the {O}", "O"), (".", None)],
    [("I", "X"), ("bought", None), ("it", "O"), ("yesterday", None), (".", None)],
    [("The {O}", "O"), ("belongs", None), ("to", None), ("me", "X"), (".", None)],
]


class _DocumentWriter:
    def __init__(self):
        self.tokens = []
        self.clusters = defaultdict(list)
        self.sentence = 0

    def sentence_from(self, template, slots: dict, entities: dict, speaker=None):
        for text, entity in template:
            words = text.format(**slots).split()
            start = len(self.tokens)
            for word in words:
                self.tokens.append(Token(word, len(self.tokens), self.sentence, speaker))
            if entity is not None:
                self.clusters[entities[entity]].append(Span(start, len(self.tokens) - 1))
        self.sentence += 1

    def document(self, doc_key: str, genre: str) -> Document:
        return Document(doc_key, genre, self.tokens, normalize_clusters(self.clusters.values(), doc_key))


def narrative_document(index: int, rng: random.Random) -> Document:
    slots = {
        "M": rng.choice(MALE_NAMES),
        "F": rng.choice(FEMALE_NAMES),
        "O": rng.choice(OBJECTS),
        "PLACE": rng.choice(PLACES),
        "ADJ": rng.choice(ADJECTIVES),
    }
    entities = {"M": "M", "F": "F", "O": "O"}

    writer = _DocumentWriter()
    writer.sentence_from(INTRODUCTION, slots, entities)
    for template in rng.sample(NARRATIVE, rng.randint(4, 6)):
        writer.sentence_from(template, slots, entities)
    return writer.document(f"nw/synthetic/{index:04d}_0", "nw")


def dialogue_document(index: int, rng: random.Random, num_speakers: int) -> Document:
    speakers = rng.sample(MALE_NAMES + FEMALE_NAMES, num_speakers)
    slots = {"O": rng.choice(OBJECTS)}

    turns = list(speakers) + [rng.choice(speakers) for _ in range(rng.randint(2, 5))]
    writer = _DocumentWriter()
    for speaker in turns:
        others = [name for name in speakers if name != speaker]
        if others:
            template = rng.choice(DIALOGUE)
            addressee = rng.choice(others)
        else:
            template = rng.choice(SOLO)
            addressee = speaker
        entities = {"X": speaker, "Y": addressee, "O": "O"}
        writer.sentence_from(template, dict(slots, Y=addressee), entities, speaker=speaker)
    return writer.document(f"bc/synthetic/{index:04d}_0", "bc")


def generate_corpus(num_docs: int = 20, seed: int = 13, dialogue: bool = False, max_speakers: int = 8) -> list:
    rng = random.Random(seed)
    if dialogue:
        return [dialogue_document(i, rng, 1 + i % max_speakers) for i in range(num_docs)]
    return [narrative_document(i, rng) for i in range(num_docs)]
