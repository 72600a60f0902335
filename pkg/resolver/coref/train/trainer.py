import json
import os
import random
from collections import defaultdict
from typing import Callable, Optional, Sequence

import numpy as np
import torch
from tqdm import tqdm

from coref.config import RunConfig
from coref.errors import TrainingDivergence
from coref.evaluation import MetricReport, evaluate_documents, recall_rate
from coref.logger import create_logger
from coref.train.qa import qa_slate
from coref.train.slates import marginal_loss


def set_seed(seed: int):
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


class Trainer:
    """Optimizes a CorefModel one document per step with gradient accumulation.

    The encoder and the task heads sit in separate AdamW parameter groups
    with their own learning rates.
    """

    def __init__(self, model, config: RunConfig, log_path: Optional[str] = None):
        self.logger = create_logger(__name__)
        self.model = model
        self.config = config
        self.log_path = log_path

        self.step = 0
        self.epoch = 0
        self.best_f1 = None
        self._pending = 0

        if config.train.freeze_encoder:
            for param in model.encoder.parameters():
                param.requires_grad_(False)
        self.optimizer = self._build_optimizer()

    def _build_optimizer(self):
        train = self.config.train
        groups = []
        encoder = [param for param in self.model.encoder.parameters() if param.requires_grad]
        heads = [param for param in self.model.head_parameters() if param.requires_grad]
        if encoder:
            groups.append({"params": encoder, "lr": train.encoder_lr})
        if heads:
            groups.append({"params": heads, "lr": train.head_lr})

        if not groups:
            self.logger.warning("No trainable parameters, optimizer steps will be skipped")
            return None
        return torch.optim.AdamW(groups, weight_decay=train.weight_decay)

    def _generator(self, index: int) -> torch.Generator:
        # Same negatives for the same document in every epoch
        generator = torch.Generator()
        generator.manual_seed(self.config.seed * 100003 + index)
        return generator

    def _progress(self, items: Sequence, desc: str):
        return tqdm(items, desc=desc, disable=not self.config.train.progress, leave=False)

    def _log(self, record: dict):
        if not self.log_path:
            return
        os.makedirs(os.path.dirname(os.path.abspath(self.log_path)), exist_ok=True)
        with open(self.log_path, "a") as f:
            f.write(json.dumps(record) + "\n")

    def _backward(self, loss: torch.Tensor, key: str, components: dict):
        if not torch.isfinite(loss).item():
            message = f"Non-finite loss at step {self.step} on {key}: {components}"
            self.logger.critical(message)
            raise TrainingDivergence(message)

        if loss.requires_grad:
            (loss / self.config.train.accumulation_steps).backward()
        self._pending += 1
        if self._pending >= self.config.train.accumulation_steps:
            self._apply()

    def _apply(self):
        if not self._pending:
            return
        if self.optimizer is not None:
            params = [param for group in self.optimizer.param_groups for param in group["params"]]
            torch.nn.utils.clip_grad_norm_(params, self.config.train.max_grad_norm)
            self.optimizer.step()
            self.optimizer.zero_grad(set_to_none=True)
        self.step += 1
        self._pending = 0

    def _finish_epoch(self, stage: str, totals: dict, count: int) -> dict:
        self._apply()
        self.epoch += 1
        metrics = {key: value / max(count, 1) for key, value in totals.items()}
        self._log({"stage": stage, "epoch": self.epoch, "step": self.step, **metrics})
        self.logger.info(f"{stage} epoch {self.epoch}: " + ", ".join(f"{k}={v:.4f}" for k, v in metrics.items()))
        return metrics

    def pretrain_mentions_epoch(self, docs: Sequence) -> dict:
        """One pass of the proposal classifiers alone"""

        self.model.train()
        totals = defaultdict(float)
        hits = gold = 0
        for index, doc in enumerate(self._progress(docs, "mentions")):
            result = self.model.mention_loss(doc, self._generator(index))
            loss = result.proposal
            self._backward(loss, doc.doc_key, {"proposal": loss.item()})

            totals["loss"] += loss.item()
            hits += result.mention_hits
            gold += result.mention_total
            self._log({"stage": "mentions", "step": self.step, "doc_key": doc.doc_key, "loss": loss.item()})

        metrics = self._finish_epoch("mentions", totals, len(docs))
        metrics["mention_recall"] = recall_rate(hits, gold)
        return metrics

    def train_epoch(self, docs: Sequence) -> dict:
        """One joint pass: slate likelihood plus the weighted proposal loss"""

        self.model.train()
        weight = self.config.train.proposal_weight
        totals = defaultdict(float)
        hits = gold = correct = slates = 0
        for index, doc in enumerate(self._progress(docs, "train")):
            result = self.model.document_loss(doc, self._generator(index))
            loss = result.total(weight)
            components = {"linking": result.linking.item(), "proposal": result.proposal.item()}
            self._backward(loss, doc.doc_key, components)

            totals["loss"] += loss.item()
            totals["linking_loss"] += components["linking"]
            totals["proposal_loss"] += components["proposal"]
            hits += result.mention_hits
            gold += result.mention_total
            correct += result.slate_correct
            slates += result.slate_total
            self._log({"stage": "train", "step": self.step, "doc_key": doc.doc_key, "loss": loss.item(),
                       **components, "recall": recall_rate(result.mention_hits, result.mention_total)})

        metrics = self._finish_epoch("train", totals, len(docs))
        metrics["mention_recall"] = recall_rate(hits, gold)
        metrics["slate_accuracy"] = correct / slates if slates else 0.0
        return metrics

    def qa_pretrain_epoch(self, instances: Sequence) -> dict:
        """One pass over QA instances scored as query slates over the whole context"""

        self.model.train()
        totals = defaultdict(float)
        exact = 0
        for instance in self._progress(instances, "qa"):
            slate, gold = qa_slate(self.model, instance)
            loss = marginal_loss(slate, gold)
            self._backward(loss, instance.qid, {"qa": loss.item()})

            totals["loss"] += loss.item()
            exact += slate.best() in gold

        metrics = self._finish_epoch("qa", totals, len(instances))
        metrics["exact_match"] = exact / len(instances) if instances else 0.0
        return metrics

    def qa_exact_match(self, instances: Sequence) -> float:
        self.model.eval()
        with torch.no_grad():
            exact = 0
            for instance in instances:
                slate, gold = qa_slate(self.model, instance)
                exact += slate.best() in gold
        return exact / len(instances) if instances else 0.0

    def predict(self, docs: Sequence) -> list:
        self.model.eval()
        return [self.model.predict(doc) for doc in self._progress(docs, "predict")]

    def evaluate(self, docs: Sequence) -> MetricReport:
        predictions = self.predict(docs)
        return evaluate_documents([doc.gold_clusters for doc in docs], predictions)

    def fit(self, train_docs: Sequence, dev_docs: Optional[Sequence] = None, epochs: Optional[int] = None,
            on_improvement: Optional[Callable] = None) -> list:
        """Joint training keeping track of the best dev CoNLL F1"""

        dev_docs = train_docs if dev_docs is None else dev_docs
        history = []
        for _ in range(self.config.train.epochs if epochs is None else epochs):
            metrics = self.train_epoch(train_docs)
            report = self.evaluate(dev_docs)
            metrics["dev_f1"] = report.conll_avg_f1
            history.append(metrics)
            self._log({"stage": "dev", "epoch": self.epoch, "step": self.step, "f1": report.conll_avg_f1})

            if self.best_f1 is None or report.conll_avg_f1 > self.best_f1:
                self.best_f1 = report.conll_avg_f1
                self.logger.info(f"New best dev CoNLL F1 {100 * self.best_f1:.2f} at epoch {self.epoch}")
                if on_improvement is not None:
                    on_improvement(self, report)
        return history

    def state_dict(self) -> dict:
        return {"step": self.step, "epoch": self.epoch, "best_f1": self.best_f1}

    def load_state_dict(self, state: dict):
        self.step = state.get("step", 0)
        self.epoch = state.get("epoch", 0)
        self.best_f1 = state.get("best_f1")
