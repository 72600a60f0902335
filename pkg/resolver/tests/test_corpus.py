import pytest

from coref.corpus import (Gender, Span, gap_to_document, generate_corpus, parse_gap, parse_gap_predictions,
                          parse_gap_rows, parse_qa, parse_qa_data, qa_to_document, tokenize_text,
                          write_gap_predictions)
from coref.corpus.types import CharSpan, ClusterSet
from coref.errors import ContractViolation, DataError, ParseError
from coref.train import prepare_qa

GAP_TEXT = "John met Mary. He thanked her."


def gap_row(**changes):
    row = {"ID": "dev-1", "Text": GAP_TEXT, "Pronoun": "He", "Pronoun-offset": "15",
           "A": "John", "A-offset": "0", "A-coref": "TRUE", "B": "Mary", "B-offset": "9", "B-coref": "FALSE"}
    row.update(changes)
    return row


def squad(answer_start=12, impossible=False):
    return {"data": [{"title": "bikes", "paragraphs": [{
        "context": "Mary bought a red bike. She rode it to school.",
        "qas": [
            {"id": "q1", "question": "What did Mary buy?", "is_impossible": impossible,
             "answers": [] if impossible else [{"text": "a red bike", "answer_start": answer_start}] * 2},
        ],
    }]}]}


class TestText:
    def test_words_and_char_alignment(self):
        tokens, char_to_span = tokenize_text(GAP_TEXT)
        assert [token.text for token in tokens] == ["John", "met", "Mary", ".", "He", "thanked", "her", "."]
        assert char_to_span(CharSpan(15, 17)) == Span(4, 4)
        assert char_to_span(CharSpan(0, 8)) == Span(0, 1)

    def test_whitespace_only_span(self):
        _, char_to_span = tokenize_text("a  b")
        with pytest.raises(DataError):
            char_to_span(CharSpan(1, 2))


class TestGap:
    def test_parse_row(self):
        example, = parse_gap_rows([gap_row()])
        assert example.pronoun_gender == Gender.MASCULINE
        assert example.a_label and not example.b_label
        assert example.candidate_b == CharSpan(9, 13)

    def test_document_clusters(self):
        example, = parse_gap_rows([gap_row()])
        doc, pronoun, a, b = gap_to_document(example)
        assert (pronoun, a, b) == (Span(4, 4), Span(0, 0), Span(2, 2))
        assert doc.gold_clusters == [[Span(0, 0), Span(4, 4)]]

    def test_neither_candidate(self):
        example, = parse_gap_rows([gap_row(**{"A-coref": "FALSE"})])
        doc, *_ = gap_to_document(example)
        assert doc.gold_clusters == []

    def test_bad_offset(self):
        with pytest.raises(ParseError, match="dev-1"):
            parse_gap_rows([gap_row(**{"Pronoun-offset": "14"})])

    def test_bad_label(self):
        with pytest.raises(ParseError, match="A-coref"):
            parse_gap_rows([gap_row(**{"A-coref": "yes"})])

    def test_ungendered_pronoun(self):
        text = "John met Mary. It thanked her."
        with pytest.raises(ParseError, match="gendered"):
            parse_gap_rows([gap_row(Text=text, Pronoun="It")])

    def test_tsv_file(self, tmp_path):
        path = tmp_path / "gap.tsv"
        header = ["ID", "Text", "Pronoun", "Pronoun-offset", "A", "A-offset", "A-coref", "B", "B-offset", "B-coref"]
        row = gap_row()
        path.write_text("\t".join(header) + "\n" + "\t".join(row[column] for column in header) + "\n")

        example, = parse_gap(str(path))
        assert example.example_id == "dev-1"

    def test_prediction_file(self, tmp_path):
        path = str(tmp_path / "pred.tsv")
        write_gap_predictions({"dev-1": (True, False), "dev-2": (False, False)}, path)
        assert parse_gap_predictions(path) == {"dev-1": (True, False), "dev-2": (False, False)}


class TestQa:
    def test_parse(self):
        example, = parse_qa_data(squad())
        assert example.qid == "q1"
        # Repeated annotator answers collapse into one
        assert example.answers == (CharSpan(12, 22),)

    def test_impossible(self):
        example, = parse_qa_data(squad(impossible=True))
        assert not example.answerable

    def test_misaligned_answer(self):
        with pytest.raises(ParseError, match="q1"):
            parse_qa_data(squad(answer_start=11))

    def test_missing_data_key(self):
        with pytest.raises(ParseError):
            parse_qa_data({"version": "v2.0"})

    def test_bad_json(self, tmp_path):
        path = tmp_path / "qa.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            parse_qa(str(path))

    def test_document(self):
        example, = parse_qa_data(squad())
        doc, question, answers = qa_to_document(example)
        assert question == ["What", "did", "Mary", "buy", "?"]
        assert answers == [Span(2, 4)]
        assert doc.span_text(answers[0]) == "a red bike"

    def test_prepare_drops_wide_answers(self):
        examples = parse_qa_data(squad()) + parse_qa_data(squad(impossible=True))
        assert [instance.answers for instance in prepare_qa(examples, max_span_length=3)] == [[Span(2, 4)], []]
        # The answerable question loses its only answer and is skipped
        assert [instance.answers for instance in prepare_qa(examples, max_span_length=2)] == [[]]


class TestClusterSet:
    def test_from_clusters_drops_singletons_and_repeats(self):
        clusters = ClusterSet.from_clusters([[Span(0, 0), Span(2, 2)], [Span(2, 2), Span(4, 4)], [Span(5, 5)]])
        assert clusters.as_lists() == [[Span(0, 0), Span(2, 2)]]

    def test_rejects_overlapping_clusters(self):
        with pytest.raises(ContractViolation):
            ClusterSet([[Span(0, 0), Span(1, 1)], [Span(1, 1), Span(2, 2)]])

    def test_rejects_singletons(self):
        with pytest.raises(ContractViolation):
            ClusterSet([[Span(0, 0)]])

    def test_equality_ignores_order(self):
        a = ClusterSet([[Span(3, 3), Span(0, 0)], [Span(1, 2), Span(5, 5)]])
        b = ClusterSet([[Span(5, 5), Span(1, 2)], [Span(0, 0), Span(3, 3)]])
        assert a == b
        assert a.cluster_of(Span(5, 5)) == frozenset({Span(1, 2), Span(5, 5)})
        assert a.cluster_of(Span(4, 4)) is None


class TestSynthetic:
    def test_deterministic(self):
        first = generate_corpus(5, seed=3)
        second = generate_corpus(5, seed=3)
        assert [doc.tokens for doc in first] == [doc.tokens for doc in second]
        assert [doc.gold_clusters for doc in first] == [doc.gold_clusters for doc in second]
        assert [doc.words for doc in generate_corpus(5, seed=4)] != [doc.words for doc in first]

    def test_documents_are_valid(self):
        for doc in generate_corpus(20) + generate_corpus(10, dialogue=True):
            doc.validate()
            assert doc.gold_clusters

    def test_pronouns_follow_the_male_name(self):
        for doc in generate_corpus(20):
            male = next(cluster for cluster in doc.gold_clusters if Span(0, 0) in cluster)
            pronouns = {Span(t.word_index, t.word_index) for t in doc.tokens if t.text in ("He", "him")}
            assert pronouns <= set(male)

    def test_dialogue_speaker_counts(self):
        docs = generate_corpus(8, dialogue=True, max_speakers=4)
        assert [len(doc.speakers) for doc in docs] == [1, 2, 3, 4, 1, 2, 3, 4]

    def test_first_person_resolves_to_speaker(self):
        for doc in generate_corpus(8, dialogue=True, max_speakers=4):
            for cluster in doc.gold_clusters:
                speakers = {doc.tokens[span.start].speaker for span in cluster
                            if doc.tokens[span.start].text in ("I", "me", "My")}
                assert len(speakers) <= 1
