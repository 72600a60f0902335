import json
import os
from dataclasses import dataclass
from typing import Optional

import click

from coref import create_resolver
from coref.checkpoints import CheckpointManager
from coref.config import ProductionConfig, RunConfig, load_config
from coref.corpus import (generate_corpus, parse_conll, parse_gap, parse_gap_predictions, parse_qa, write_conll,
                          write_gap_predictions)
from coref.errors import CorefError
from coref.evaluation import evaluate_documents, gap_score
from coref.logger import create_logger, set_level
from coref.train import Trainer, prepare_qa, set_seed
from coref.cli.analysis import build_vocabulary, format_rows, recall_curve, speaker_ablation

logger = create_logger(__name__)

# Sections a checkpoint's parameters depend on; everything else follows the current run
ARCHITECTURE_SECTIONS = ("encoder", "preprocess")
GAP_SUFFIXES = (".tsv",)


class CorefGroup(click.Group):
    """Maps failures onto the exit codes: 1 usage, 2 data, 3 training divergence"""

    def parse_args(self, ctx, args):
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise
        except CorefError as e:
            logger.critical(f"{type(e).__name__}: {e}")
            click.echo(f"Error: {e}", err=True)
            ctx.exit(e.exit_code)


@dataclass
class RunContext:
    config: RunConfig

    @property
    def output_dir(self) -> str:
        return self.config.output_dir

    @property
    def checkpoints(self) -> CheckpointManager:
        return CheckpointManager(os.path.join(self.output_dir, "checkpoints"))

    def output(self, name: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, name)

    def echo_config(self, config: Optional[RunConfig] = None):
        (config or self.config).dump(self.output("config.yaml"))

    def runtime_overrides(self) -> dict:
        return {key: value for key, value in self.config.to_dict().items() if key not in ARCHITECTURE_SECTIONS}

    def load(self, name: str, vocab=None):
        model = create_resolver(self.config, vocab=vocab, init=name, manager=self.checkpoints,
                                overrides=self.runtime_overrides(), config=ProductionConfig)
        self.config = model.config
        return model

    def build(self, docs, extra=()):
        vocab = build_vocabulary(self.config, docs, extra)
        return create_resolver(self.config, vocab=vocab, config=ProductionConfig)


def _require(path: Optional[str], key: str) -> str:
    if not path:
        raise click.UsageError(f"{key} is not set, pass --set {key}=PATH")
    if not os.path.exists(path):
        raise click.UsageError(f"{key} points to {path}, which does not exist")
    return path


def _is_gap(path: str) -> bool:
    return path.lower().endswith(GAP_SUFFIXES)


def _write_records(path: str, records):
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps(record) + "\n")


def _dev_documents(config: RunConfig, train_docs: list) -> list:
    if config.data.dev:
        return parse_conll(_require(config.data.dev, "data.dev"))
    logger.warning("data.dev is not set, evaluating on the training documents")
    return train_docs


@click.group(cls=CorefGroup)
@click.option("--config", "config_path", type=click.Path(), help="YAML file of config keys")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override one config key")
@click.option("--output-dir", help="Directory receiving checkpoints, logs and reports")
@click.option("--seed", type=int, help="Random seed of the run")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                                               case_sensitive=False))
@click.pass_context
def cli(ctx, config_path, overrides, output_dir, seed, log_level):
    """Coreference resolution as query-based span prediction"""

    if log_level:
        set_level(log_level.upper())

    try:
        config = load_config(config_path, list(overrides))
        if output_dir:
            config.output_dir = output_dir
        if seed is not None:
            config.seed = seed
    except CorefError as e:
        click.echo(f"Error: {e}", err=True)
        ctx.exit(e.exit_code)
    ctx.obj = RunContext(config)


@cli.command("pretrain-mentions")
@click.option("--init", help="Checkpoint to start from instead of a fresh model")
@click.pass_obj
def pretrain_mentions(run: RunContext, init):
    """Pretrains the mention proposal classifiers on gold mentions"""

    train_docs = parse_conll(_require(run.config.data.train, "data.train"))
    dev_docs = _dev_documents(run.config, train_docs)

    set_seed(run.config.seed)
    model = run.load(init) if init else run.build(train_docs)
    run.echo_config()

    trainer = Trainer(model, run.config, log_path=run.output("train.jsonl"))
    for _ in range(run.config.train.proposal_epochs):
        trainer.pretrain_mentions_epoch(train_docs)
    run.checkpoints.save("mentions", model, trainer)

    rows = recall_curve(model, dev_docs, [run.config.proposal.keep_ratio])
    _write_records(run.output("mention_recall.jsonl"), rows)
    click.echo(format_rows(rows))


@cli.command("pretrain-qa")
@click.option("--init", help="Checkpoint to start from instead of a fresh model")
@click.option("--freeze-encoder", is_flag=True, help="Update only the task heads")
@click.pass_obj
def pretrain_qa(run: RunContext, init, freeze_encoder):
    """Pretrains span prediction on extractive QA corpora"""

    if not run.config.data.qa:
        raise click.UsageError("data.qa is not set, pass --set data.qa=[PATH, ...]")
    examples = []
    for path in run.config.data.qa:
        examples.extend(parse_qa(_require(path, "data.qa")))
    instances = prepare_qa(examples, run.config.proposal.max_span_length, run.config.proposal.within_sentence)
    if freeze_encoder:
        run.config.train.freeze_encoder = True

    set_seed(run.config.seed)
    if init:
        model = run.load(init)
    else:
        docs = parse_conll(run.config.data.train) if run.config.data.train else []
        questions = [word for instance in instances for word in instance.question]
        model = run.build([instance.doc for instance in instances] + docs, questions)
    run.echo_config()

    trainer = Trainer(model, run.config, log_path=run.output("train.jsonl"))
    for _ in range(run.config.train.qa_epochs):
        metrics = trainer.qa_pretrain_epoch(instances)
    run.checkpoints.save("qa", model, trainer)

    if run.config.train.qa_epochs:
        click.echo(f"QA exact match {100 * metrics['exact_match']:.2f} over {len(instances)} questions")


@cli.command("train")
@click.option("--init", help="Checkpoint (e.g. mentions or qa) to start from")
@click.option("--resume", help="Checkpoint to resume, optimizer and step counter included")
@click.option("--freeze-encoder", is_flag=True, help="Update only the task heads")
@click.pass_obj
def train(run: RunContext, init, resume, freeze_encoder):
    """Joint training of proposal and linking, keeping the best dev checkpoint"""

    if init and resume:
        raise click.UsageError("--init and --resume are exclusive")
    train_docs = parse_conll(_require(run.config.data.train, "data.train"))
    dev_docs = _dev_documents(run.config, train_docs)
    if freeze_encoder:
        run.config.train.freeze_encoder = True

    set_seed(run.config.seed)
    source = resume or init
    model = run.load(source) if source else run.build(train_docs)
    run.echo_config()

    trainer = Trainer(model, run.config, log_path=run.output("train.jsonl"))
    if resume:
        run.checkpoints.restore_trainer(resume, trainer)
        logger.info(f"Resuming at step {trainer.step}, epoch {trainer.epoch}")
    elif not init:
        # A fresh model gets its proposal heads pretrained before joint training
        for _ in range(run.config.train.proposal_epochs):
            trainer.pretrain_mentions_epoch(train_docs)

    def save_best(trainer, report):
        run.checkpoints.save("best", trainer.model, trainer)
        _write_records(run.output("dev_metrics.jsonl"), report.as_records())

    trainer.fit(train_docs, dev_docs, on_improvement=save_best)
    run.checkpoints.save("last", model, trainer)
    click.echo(f"Best dev CoNLL F1 {100 * (trainer.best_f1 or 0.0):.2f}")


@cli.command("predict")
@click.option("--checkpoint", required=True, help="Checkpoint name or directory")
@click.option("--input", "input_path", required=True, type=click.Path(), help="CoNLL file or GAP TSV")
@click.option("--output", "output_path", type=click.Path(), help="Prediction file to write")
@click.pass_obj
def predict(run: RunContext, checkpoint, input_path, output_path):
    """Writes predicted clusters as CoNLL, or GAP system output for a GAP input"""

    _require(input_path, "--input")
    model = run.load(checkpoint)
    model.eval()

    if _is_gap(input_path):
        examples = parse_gap(input_path)
        predictions = {example.example_id: model.predict_gap(example) for example in examples}
        output_path = output_path or run.output("predictions.tsv")
        write_gap_predictions(predictions, output_path)
        count = len(examples)
    else:
        docs = parse_conll(input_path)
        clusters = [model.predict(doc) for doc in docs]
        output_path = output_path or run.output("predictions.conll")
        write_conll(docs, clusters, output_path)
        count = len(docs)

    click.echo(f"Wrote {count} predictions to {output_path}")


@cli.command("evaluate")
@click.argument("gold_path", type=click.Path())
@click.argument("pred_path", type=click.Path())
@click.pass_obj
def evaluate(run: RunContext, gold_path, pred_path):
    """Scores a prediction file against its gold file"""

    _require(gold_path, "GOLD_PATH")
    _require(pred_path, "PRED_PATH")

    if _is_gap(gold_path):
        report = gap_score(parse_gap(gold_path), parse_gap_predictions(pred_path))
    else:
        golds = parse_conll(gold_path)
        predicted = {doc.doc_key: doc.gold_clusters for doc in parse_conll(pred_path)}
        missing = [doc.doc_key for doc in golds if doc.doc_key not in predicted]
        if missing:
            logger.warning(f"No prediction for {len(missing)} documents, scoring them as empty: {missing[:5]}")
        report = evaluate_documents([doc.gold_clusters for doc in golds],
                                    [predicted.get(doc.doc_key, []) for doc in golds])

    _write_records(run.output("evaluation.jsonl"), report.as_records())
    click.echo(report.format_table())


@cli.command("recall-curve")
@click.option("--checkpoint", required=True, help="Checkpoint name or directory")
@click.option("--input", "input_path", type=click.Path(), help="CoNLL file, defaults to data.dev")
@click.option("--ratios", default="0.1,0.2,0.3,0.4,0.5", show_default=True,
              help="Comma separated spans kept per word")
@click.pass_obj
def recall_curve_command(run: RunContext, checkpoint, input_path, ratios):
    """Mention recall before and after linking for several keep ratios"""

    try:
        ratios = [float(ratio) for ratio in ratios.split(",") if ratio.strip()]
    except ValueError as e:
        raise click.UsageError(f"--ratios must be comma separated numbers: {e}") from e
    if not ratios or any(ratio <= 0 for ratio in ratios):
        raise click.UsageError("--ratios needs at least one positive ratio")

    input_path = input_path or run.config.data.dev or run.config.data.train
    docs = parse_conll(_require(input_path, "--input"))
    model = run.load(checkpoint)
    run.echo_config()

    rows = recall_curve(model, docs, ratios)
    _write_records(run.output("recall_curve.jsonl"), rows)
    click.echo(format_rows(rows))


@cli.command("speaker-ablation")
@click.pass_obj
def speaker_ablation_command(run: RunContext):
    """Trains with speakers as input and as a pair feature, compares dev F1 per speaker count"""

    train_docs = parse_conll(_require(run.config.data.train, "data.train"))
    dev_docs = _dev_documents(run.config, train_docs)
    run.echo_config()

    rows = speaker_ablation(run.config, train_docs, dev_docs)
    _write_records(run.output("speaker_ablation.jsonl"), rows)
    click.echo(format_rows(rows))


@cli.command("gen-synthetic", hidden=True)
@click.argument("output_path", type=click.Path())
@click.option("--num-docs", default=20, show_default=True, type=int)
@click.option("--dialogue", is_flag=True, help="Multi-speaker dialogue documents")
@click.option("--max-speakers", default=8, show_default=True, type=int)
@click.pass_obj
def gen_synthetic(run: RunContext, output_path, num_docs, dialogue, max_speakers):
    """Writes the synthetic name and pronoun corpus as CoNLL"""

    docs = generate_corpus(num_docs, seed=run.config.seed, dialogue=dialogue, max_speakers=max_speakers)
    directory = os.path.dirname(os.path.abspath(output_path))
    os.makedirs(directory, exist_ok=True)
    write_conll(docs, path=output_path)
    click.echo(f"Wrote {len(docs)} documents to {output_path}")


def main(argv=None) -> int:
    try:
        result = cli.main(args=argv, prog_name="coref", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1 if isinstance(e, click.UsageError) else e.exit_code
    except click.Abort:
        return 1
    return result if isinstance(result, int) else 0
