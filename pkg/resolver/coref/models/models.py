from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import torch
import torch.nn as nn

from coref.config import RunConfig
from coref.corpus.types import ClusterSet, Document, GapExample, Span
from coref.corpus.gap import gap_to_document
from coref.encoder import EncodedDocument, TransformerEncoder, Vocabulary, encode_document, load_pretrained
from coref.errors import VocabularyMismatchError
from coref.evaluation import gap_predictions_from_clusters, mention_hits
from coref.linking import MentionLinker, pair_score
from coref.logger import create_logger
from coref.preprocess import DocumentInput, prepare_document
from coref.proposal import MentionProposer, SpanScores
from coref.train.decode import decode_clusters
from coref.train.slates import CandidateSlate, marginal_loss


@dataclass
class Resolution:
    inputs: DocumentInput
    scores: SpanScores
    proposed: list
    slates: list
    forwards: list = field(default_factory=list)

    @property
    def proposed_spans(self) -> list:
        return [self.scores.spans[k] for k in self.proposed]

    @property
    def retrieved_spans(self) -> set:
        """Spans picked as the best answer of some query"""
        return {slate.option(slate.best()) for slate in self.slates} - {None}


@dataclass
class DocumentLoss:
    linking: torch.Tensor
    proposal: torch.Tensor
    mention_hits: int = 0
    mention_total: int = 0
    slate_correct: int = 0
    slate_total: int = 0

    def total(self, proposal_weight: float) -> torch.Tensor:
        return self.linking + proposal_weight * self.proposal


class CorefModel(nn.Module):
    """Encoder shared by the mention proposal and mention linking heads"""

    def __init__(self, config: RunConfig, vocab: Vocabulary):
        super().__init__()
        config.validate()
        self.logger = create_logger(__name__)

        if tuple(vocab.special_tags) != tuple(config.preprocess.tags):
            raise VocabularyMismatchError(
                f"Vocabulary tags {list(vocab.special_tags)} differ from configured {list(config.preprocess.tags)}")
        if config.encoder.vocab_size == 0:
            config.encoder.vocab_size = len(vocab)
        elif config.encoder.vocab_size != len(vocab):
            raise VocabularyMismatchError(
                f"Model expects {config.encoder.vocab_size} pieces, vocabulary holds {len(vocab)}")

        self.config = config
        self.vocab = vocab
        hidden, dropout = config.encoder.hidden_dim, config.encoder.dropout

        self.encoder = TransformerEncoder(config.encoder)
        if config.encoder.pretrained_path:
            load_pretrained(self.encoder, config.encoder.pretrained_path)
        self.proposer = MentionProposer(hidden, config.proposal, dropout)
        self.linker = MentionLinker(hidden, vocab, config.linking, config.preprocess, dropout)

        if config.preprocess.speaker_strategy == "feature":
            self.speaker_weight = nn.Parameter(torch.zeros(()))
        else:
            self.register_parameter("speaker_weight", None)

    def head_parameters(self) -> list:
        return [param for name, param in self.named_parameters() if not name.startswith("encoder.")]

    def prepare(self, doc: Document) -> DocumentInput:
        return prepare_document(doc, self.vocab, self.config.preprocess)

    def encode(self, inputs: DocumentInput) -> EncodedDocument:
        return encode_document(self.encoder, inputs, self.config.preprocess.window_size)

    def _same_speaker(self, inputs: DocumentInput, i: Span, candidates: list) -> torch.Tensor:
        tokens = inputs.doc.tokens
        speaker = tokens[i.start].speaker
        flags = [float(speaker is not None and tokens[j.start].speaker == speaker) for j in candidates]
        return self.speaker_weight.new_tensor(flags)

    def link(self, encoded: EncodedDocument, scores: SpanScores, proposed: list):
        """Builds one candidate slate per proposed span"""

        inputs = encoded.inputs
        spans = scores.spans
        mention = scores.mention
        mention_of = dict(zip(spans, mention.unbind()))

        queries = [self.linker.build_query(inputs, spans[k]) for k in proposed]
        forwards = self.linker.forward_scores(self.encoder, inputs, queries, spans)
        pruned = [forward.prune(self.config.linking.antecedent_cap) for forward in forwards]

        # s_a(i|j) comes from j's own forward pass when j was proposed, otherwise from an extra query
        query_of = {spans[k]: a for a, k in enumerate(proposed)}
        missing = defaultdict(set)
        for a, k in enumerate(proposed):
            for c in pruned[a]:
                j = forwards[a].spans[c]
                if j not in query_of:
                    missing[j].add(spans[k])

        requests = [(self.linker.build_query(inputs, j), sorted(missing[j])) for j in sorted(missing)]
        backward_of = {}
        for (query, _), (targets, values) in zip(requests, self.linker.score_spans(self.encoder, inputs, requests)):
            for i, value in zip(targets, values):
                backward_of[query.source_span, i] = value
        for j, a in query_of.items():
            for i, value in zip(forwards[a].spans, forwards[a].scores):
                backward_of[j, i] = value

        slates = []
        for a, k in enumerate(proposed):
            i = spans[k]
            # A candidate whose query cannot hold i in any chunk has no backward score and drops out
            kept = [c for c in pruned[a] if (forwards[a].spans[c], i) in backward_of]
            candidates = [forwards[a].spans[c] for c in kept]
            if not candidates:
                slates.append(CandidateSlate.build(i, [], mention.new_zeros(0)))
                continue

            forward = forwards[a].scores[kept]
            backward = torch.stack([backward_of[j, i] for j in candidates])
            overall = pair_score(i, candidates, forward, backward, mention_of, self.config.linking.lambda_mix).overall
            if self.speaker_weight is not None:
                overall = overall + self.speaker_weight * self._same_speaker(inputs, i, candidates)
            slates.append(CandidateSlate.build(i, candidates, overall))

        return slates, forwards

    def resolve(self, doc: Document, keep_ratio: Optional[float] = None) -> Resolution:
        inputs = self.prepare(doc)
        encoded = self.encode(inputs)
        scores = self.proposer.score_candidates(encoded)
        proposed = self.proposer.top_indices(scores.mention, inputs.num_words, keep_ratio)
        slates, forwards = self.link(encoded, scores, proposed)
        return Resolution(inputs, scores, proposed, slates, forwards)

    def predict(self, doc: Document) -> ClusterSet:
        with torch.no_grad():
            return decode_clusters(self.resolve(doc).slates)

    def predict_gap(self, example: GapExample) -> tuple:
        doc, pronoun, a, b = gap_to_document(example)
        return gap_predictions_from_clusters(self.predict(doc), pronoun, a, b)

    def document_loss(self, doc: Document, generator: Optional[torch.Generator] = None) -> DocumentLoss:
        """Marginal slate likelihood plus the proposal classifiers' loss for one document"""

        inputs = self.prepare(doc)
        encoded = self.encode(inputs)
        scores = self.proposer.score_candidates(encoded)
        gold_mentions = doc.gold_mentions
        proposal_loss = self.proposer.pretrain_loss(encoded, gold_mentions, scores, generator)

        proposed = self.proposer.top_indices(scores.mention, inputs.num_words)
        slates, _ = self.link(encoded, scores, proposed)

        cluster_of = {span: c for c, cluster in enumerate(doc.gold_clusters) for span in cluster}
        losses, correct = [], 0
        for slate in slates:
            cluster = cluster_of.get(slate.query_span)
            gold = slate.gold_indices(
                [j for j in slate.candidates if cluster is not None and cluster_of.get(j) == cluster])
            losses.append(marginal_loss(slate, gold))
            correct += slate.best() in gold

        linking = torch.stack(losses).sum() if losses else proposal_loss.new_zeros(())
        hits = mention_hits(gold_mentions, (scores.spans[k] for k in proposed))
        return DocumentLoss(linking, proposal_loss, hits, len(gold_mentions), correct, len(slates))

    def mention_loss(self, doc: Document, generator: Optional[torch.Generator] = None) -> DocumentLoss:
        inputs = self.prepare(doc)
        encoded = self.encode(inputs)
        scores = self.proposer.score_candidates(encoded)
        loss = self.proposer.pretrain_loss(encoded, doc.gold_mentions, scores, generator)

        proposed = self.proposer.top_indices(scores.mention, inputs.num_words)
        hits = mention_hits(doc.gold_mentions, (scores.spans[k] for k in proposed))
        return DocumentLoss(loss.new_zeros(()), loss, hits, len(doc.gold_mentions))
