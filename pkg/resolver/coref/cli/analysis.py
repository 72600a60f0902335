import copy
from typing import Iterable, Sequence

import torch

from coref.config import RunConfig
from coref.encoder import Vocabulary
from coref.errors import DataError
from coref.evaluation import (SPEAKER_BUCKETS, bucket_label, bucket_speakers, evaluate_by_speakers, mention_hits,
                              recall_rate)
from coref.logger import create_logger
from coref.models import CorefModel
from coref.preprocess import speaker_pieces
from coref.train import Trainer, decode_clusters, set_seed

logger = create_logger(__name__)

ABLATION_STRATEGIES = ("input", "feature")


def corpus_words(docs: Sequence, extra: Iterable[str] = ()) -> list:
    """Every word of the documents plus the name parts of their speakers"""

    words = list(extra)
    for doc in docs:
        words.extend(doc.words)
        for speaker in sorted(doc.speakers):
            words.extend(piece.text for piece in speaker_pieces(speaker, "", "")[1:-1])
    return words


def build_vocabulary(config: RunConfig, docs: Sequence, extra: Iterable[str] = ()) -> Vocabulary:
    return Vocabulary.build(corpus_words(docs, extra), config.preprocess.tags,
                            max_size=config.encoder.vocab_max_size, min_count=config.encoder.vocab_min_count)


def recall_curve(model: CorefModel, docs: Sequence, ratios: Iterable[float]) -> list:
    """Gold mention recall of the proposals, and of proposals plus linked answers, per keep ratio"""

    model.eval()
    rows = []
    with torch.no_grad():
        for ratio in sorted(ratios):
            proposed_hits = linked_hits = gold = 0
            for doc in docs:
                resolution = model.resolve(doc, keep_ratio=ratio)
                proposed = set(resolution.proposed_spans)
                recovered = proposed | resolution.retrieved_spans | decode_clusters(resolution.slates).mentions()

                proposed_hits += mention_hits(doc.gold_mentions, proposed)
                linked_hits += mention_hits(doc.gold_mentions, recovered)
                gold += len(doc.gold_mentions)

            rows.append({
                "keep_ratio": ratio,
                "proposal_recall": recall_rate(proposed_hits, gold),
                "linking_recall": recall_rate(linked_hits, gold),
            })
            logger.info(f"keep ratio {ratio}: proposal recall {rows[-1]['proposal_recall']:.4f}, "
                        f"after linking {rows[-1]['linking_recall']:.4f}")
    return rows


def train_strategy(config: RunConfig, strategy: str, train_docs: Sequence, dev_docs: Sequence) -> dict:
    """Trains a fresh model under one speaker strategy, returns its dev reports per speaker bucket"""

    run = copy.deepcopy(config)
    run.preprocess.speaker_strategy = strategy
    run.encoder.vocab_size = 0
    run.encoder.pretrained_path = None

    set_seed(run.seed)
    model = CorefModel(run, build_vocabulary(run, train_docs))
    trainer = Trainer(model, run)
    for _ in range(run.train.proposal_epochs):
        trainer.pretrain_mentions_epoch(train_docs)
    trainer.fit(train_docs, dev_docs)

    return evaluate_by_speakers(dev_docs, trainer.predict(dev_docs))


def speaker_ablation(config: RunConfig, train_docs: Sequence, dev_docs: Sequence,
                     strategies: Sequence[str] = ABLATION_STRATEGIES) -> list:
    """Dev CoNLL F1 of every speaker strategy, one row per speaker-count bucket"""

    if not any(doc.speakers for doc in list(train_docs) + list(dev_docs)):
        raise DataError("The speaker ablation needs a corpus with speaker annotations")

    reports = {}
    for strategy in strategies:
        logger.info(f"Training with speaker strategy {strategy}")
        reports[strategy] = train_strategy(config, strategy, train_docs, dev_docs)

    counts = {}
    for doc in dev_docs:
        bucket = bucket_speakers(len(doc.speakers))
        counts[bucket] = counts.get(bucket, 0) + 1

    rows = []
    for bucket in SPEAKER_BUCKETS:
        if bucket not in counts:
            continue
        row = {"speakers": bucket_label(bucket), "documents": counts[bucket]}
        for strategy in strategies:
            row[f"{strategy}_f1"] = reports[strategy][bucket].conll_avg_f1
        rows.append(row)
    return rows


def format_rows(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    columns = list(rows[0])
    lines = ["  ".join(f"{column:>16}" for column in columns)]
    for row in rows:
        cells = []
        for column in columns:
            value = row[column]
            cells.append(f"{value:16.4f}" if isinstance(value, float) else f"{value!s:>16}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
