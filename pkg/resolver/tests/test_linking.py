import random

import numpy as np
import pytest
import torch

from coref.config import LinkingConfig, PreprocessConfig
from coref.corpus import ClusterSet, Span
from coref.encoder import Vocabulary
from coref.errors import ContractViolation
from coref.linking import (ForwardScores, MentionLinker, bidirectional_score, build_query, build_question,
                           overall_score, pair_score, prune_candidates)
from coref.preprocess import enumerate_spans, prepare_document

from conftest import make_doc

PREPROCESS = PreprocessConfig()
LONG_WORD = "§" * 40


@pytest.fixture
def turns():
    doc = make_doc([["the", "cat", "sat"], ["it", "purred"]], speakers=["Ann", "Bob"])
    vocab = Vocabulary.build(doc.words + ["ann", "bob"], PREPROCESS.tags)
    return prepare_document(doc, vocab, PREPROCESS), vocab


class TestScoreAlgebra:
    def test_bidirectional_is_symmetric(self):
        torch.manual_seed(0)
        forward, backward = torch.randn(50), torch.randn(50)
        assert torch.equal(bidirectional_score(forward, backward), bidirectional_score(backward, forward))

    def test_mixing_limits(self):
        assert overall_score(1.0, 2.0, 5.0, lambda_mix=0.0) == 5.0
        assert overall_score(1.0, 2.0, 5.0, lambda_mix=1.0) == 3.0
        assert overall_score(1.0, 2.0, 5.0, lambda_mix=0.5) == 4.0

    def test_pair_score(self):
        i, j = Span(0, 0), Span(3, 4)
        score = pair_score(i, j, forward=2.0, backward=4.0, mention_scores={i: 1.0, j: -1.0}, lambda_mix=0.25)
        assert score.bidirectional == 3.0
        assert score.overall == 0.25 * 0.0 + 0.75 * 3.0
        swapped = pair_score(j, i, forward=4.0, backward=2.0, mention_scores={i: 1.0, j: -1.0}, lambda_mix=0.25)
        assert swapped.overall == score.overall

    def test_pair_score_over_a_candidate_list(self):
        torch.manual_seed(3)
        i, candidates = Span(0, 0), [Span(2, 2), Span(3, 4), Span(6, 6)]
        mention_scores = dict(zip([i] + candidates, torch.randn(4).unbind()))
        forward, backward = torch.randn(3), torch.randn(3)
        scores = pair_score(i, candidates, forward, backward, mention_scores, lambda_mix=0.3)
        assert scores.j == candidates
        for c, j in enumerate(candidates):
            single = pair_score(i, j, forward[c], backward[c], mention_scores, lambda_mix=0.3)
            torch.testing.assert_close(scores.overall[c], single.overall)
            torch.testing.assert_close(scores.bidirectional[c], single.bidirectional)


class TestPruning:
    def test_top_scores_with_positional_ties(self):
        scores = {Span(0, 0): 1.0, Span(2, 3): 2.0, Span(1, 1): 2.0, Span(4, 4): 0.0}
        assert prune_candidates(scores, 2) == [Span(1, 1), Span(2, 3)]
        assert prune_candidates(scores, 10) == [Span(1, 1), Span(2, 3), Span(0, 0), Span(4, 4)]

    @pytest.mark.parametrize("cap", [1, 7, 50, 200, 500])
    def test_matches_a_lexicographic_sort(self, cap):
        rng = random.Random(11)
        pairs = set()
        while len(pairs) < 200:
            start = rng.randrange(100)
            pairs.add((start, start + rng.randrange(5)))
        spans = [Span(*pair) for pair in pairs]
        # Few distinct values so that many scores tie
        values = [float(rng.randrange(8)) for _ in spans]

        starts = np.array([span.start for span in spans])
        ends = np.array([span.end for span in spans])
        order = np.lexsort((ends, starts, -np.array(values)))[:cap]
        assert prune_candidates(dict(zip(spans, values)), cap) == [spans[k] for k in order]

    def test_cap_must_be_positive(self):
        with pytest.raises(ContractViolation):
            prune_candidates({Span(0, 0): 1.0}, 0)

    def test_forward_scores_prune_to_indices(self):
        forward = ForwardScores([Span(0, 0), Span(1, 1), Span(2, 2)], torch.tensor([0.5, 3.0, 1.0]))
        assert forward.prune(2) == [1, 2]
        assert forward[Span(2, 2)].item() == 1.0


class TestQueries:
    def test_tags_speaker_and_sentence(self, turns):
        inputs, vocab = turns
        query = build_query(inputs, Span(3, 3), vocab, PREPROCESS)
        assert query.texts == ["<speaker>", "Bob", "</speaker>", "<mention>", "it", "</mention>", "purred"]
        assert query.ids == [i for text in query.texts for i in vocab.tokenize(text)]

        query = build_query(inputs, Span(1, 2), vocab, PREPROCESS)
        assert query.texts == ["<speaker>", "Ann", "</speaker>", "the", "<mention>", "cat", "sat", "</mention>"]
        assert query.source_span == Span(1, 2)

    def test_trimmed_around_the_mention(self, turns):
        inputs, vocab = turns
        query = build_query(inputs, Span(3, 3), vocab, PREPROCESS, max_length=4)
        assert query.ids == [vocab.index[text] for text in ["</speaker>", "<mention>", "it", "</mention>"]]
        assert len(query.texts) == 7

    @pytest.fixture
    def sentence(self):
        words = ["the", "cat", "sat", "on", "the", "mat", "all", "day"]
        vocab = Vocabulary.build(words, PREPROCESS.tags)
        return prepare_document(make_doc([words]), vocab, PREPROCESS), vocab

    def test_wide_mention_keeps_both_tags(self, sentence):
        inputs, vocab = sentence
        query = build_query(inputs, Span(1, 6), vocab, PREPROCESS, max_length=5)
        assert query.ids == [vocab.index[text] for text in ["<mention>", "cat", "sat", "on", "</mention>"]]

    @pytest.mark.parametrize("max_length", range(2, 12))
    @pytest.mark.parametrize("span", [Span(0, 0), Span(1, 6), Span(3, 4), Span(7, 7), Span(0, 7)])
    def test_trimming_never_drops_a_tag(self, sentence, span, max_length):
        inputs, vocab = sentence
        opening, closing = vocab.index["<mention>"], vocab.index["</mention>"]
        full = build_query(inputs, span, vocab, PREPROCESS).ids
        ids = build_query(inputs, span, vocab, PREPROCESS, max_length=max_length).ids
        assert len(ids) == min(max_length, len(full))
        assert ids.count(opening) == 1 and ids.count(closing) == 1
        assert ids.index(opening) < ids.index(closing)

    def test_limit_too_small_for_the_tags(self, sentence):
        inputs, vocab = sentence
        with pytest.raises(ContractViolation):
            build_query(inputs, Span(2, 2), vocab, PREPROCESS, max_length=1)

    def test_out_of_bounds(self, turns):
        inputs, vocab = turns
        with pytest.raises(ContractViolation):
            build_query(inputs, Span(4, 5), vocab, PREPROCESS)

    def test_question(self, turns):
        _, vocab = turns
        query = build_question(["the", "cat", "sat"], vocab, max_length=2)
        assert query.source_span is None
        assert query.ids == [vocab.index["the"], vocab.index["cat"]]


class TestChunks:
    @pytest.fixture
    def linker(self, turns):
        _, vocab = turns
        return MentionLinker(8, vocab, LinkingConfig(max_query_length=128), PreprocessConfig(window_size=16))

    def test_sizes(self, linker):
        assert linker.query_limit == 8
        assert linker.chunk_size(4) == 8
        assert linker.chunk_size(3) == 10
        with pytest.raises(ContractViolation):
            linker.chunk_size(12)

    def test_every_span_lands_in_a_chunk_holding_it(self, linker, model, docs):
        inputs = model.prepare(docs[0])
        chunks = linker.chunks(inputs, 4)
        assert len(chunks) > 1
        spans = enumerate_spans(inputs, 4)
        for span, owner in zip(spans, linker.assign_chunks(inputs, spans, chunks)):
            first, last = inputs.piece_interval(span)
            assert chunks[owner].contains(first, last)
            if first in chunks[owner].owned_range:
                continue
            # Only a chunk cutting the span hands it to another one
            natural = next(k for k, chunk in enumerate(chunks) if first in chunk.owned_range)
            assert not chunks[natural].contains(first, last)


class TestForwardScores:
    def test_excludes_the_query_span(self, model, docs):
        inputs = model.prepare(docs[0])
        spans = enumerate_spans(inputs, 4)
        query = model.linker.build_query(inputs, spans[0])
        with torch.no_grad():
            forward, = model.linker.forward_scores(model.encoder, inputs, [query], spans)
        assert spans[0] not in forward.index
        assert len(forward) == len(spans) - 1 == forward.scores.shape[0]

    def test_batched_requests_match_single_requests(self, model, docs):
        inputs = model.prepare(docs[0])
        spans = enumerate_spans(inputs, 4)
        queries = [model.linker.build_query(inputs, span) for span in spans[:3]]
        with torch.no_grad():
            batched = model.linker.score_spans(model.encoder, inputs, [(query, spans[5:9]) for query in queries])
            single = model.linker.score_spans(model.encoder, inputs, [(queries[2], spans[7:8])])
        assert [scores.shape[0] for scores in batched] == [4, 4, 4]
        torch.testing.assert_close(single[0][0], batched[2][2], atol=1e-5, rtol=1e-5)

    def test_empty_request(self, model, docs):
        inputs = model.prepare(docs[0])
        query = model.linker.build_query(inputs, Span(0, 0))
        scores, = model.linker.score_spans(model.encoder, inputs, [(query, [])])
        assert scores.shape == (0,)

    @pytest.mark.parametrize("stride, batch_size", [(None, 4), (2, 1), (6, 16)])
    def test_one_chunk_documents_ignore_the_chunking(self, model, docs, stride, batch_size):
        inputs = model.prepare(make_doc([docs[0].words[:8]]))
        spans = enumerate_spans(inputs, 4)
        query = model.linker.build_query(inputs, spans[2])
        assert len(model.linker.chunks(inputs, len(query.ids))) == 1
        with torch.no_grad():
            reference, = model.linker.forward_scores(model.encoder, inputs, [query], spans)
            model.linker.config.chunk_stride = stride
            model.linker.config.batch_size = batch_size
            forward, = model.linker.forward_scores(model.encoder, inputs, [query], spans)
        assert forward.spans == reference.spans
        torch.testing.assert_close(forward.scores, reference.scores, atol=1e-5, rtol=1e-5)

    @pytest.mark.parametrize("stride", [None, 4, 12])
    def test_every_span_scored_once_across_chunks(self, model, docs, stride):
        sentences = [docs[d].words[:8] for d in range(3)] + [docs[d].words[8:16] for d in range(3)]
        inputs = model.prepare(make_doc(sentences))
        spans = enumerate_spans(inputs, 4)
        query = model.linker.build_query(inputs, spans[0])
        model.linker.config.chunk_stride = stride
        assert len(model.linker.chunks(inputs, len(query.ids))) > 1
        with torch.no_grad():
            forward, = model.linker.forward_scores(model.encoder, inputs, [query], spans)
        assert forward.spans == spans[1:]
        assert forward.scores.shape == (len(spans) - 1,)


class TestSpansLongerThanAnyChunk:
    @pytest.fixture
    def long_doc(self):
        return make_doc([[LONG_WORD, "is", LONG_WORD, "here"]])

    def test_left_out_of_the_forward_scores(self, model, long_doc):
        inputs = model.prepare(long_doc)
        assert len(inputs) > model.config.preprocess.window_size
        spans = enumerate_spans(inputs, 4)
        query = model.linker.build_query(inputs, Span(1, 1))
        chunks = model.linker.chunks(inputs, len(query.ids))
        owners = model.linker.assign_chunks(inputs, spans, chunks)
        assert owners[spans.index(Span(0, 0))] is None
        with torch.no_grad():
            forward, = model.linker.forward_scores(model.encoder, inputs, [query], spans)
        assert forward.spans == [Span(3, 3)]

    @pytest.mark.parametrize("keep_ratio", [None, 1.0])
    def test_predict_still_returns_clusters(self, model, long_doc, keep_ratio):
        with torch.no_grad():
            resolution = model.resolve(long_doc, keep_ratio=keep_ratio)
        for slate in resolution.slates:
            assert set(slate.candidates) <= {Span(1, 1), Span(3, 3)}
        assert isinstance(model.predict(long_doc), ClusterSet)
