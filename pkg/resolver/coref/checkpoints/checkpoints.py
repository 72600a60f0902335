import json
import os
from typing import Mapping, Optional

import torch

from coref.config import RunConfig
from coref.encoder import Vocabulary
from coref.errors import ConfigurationError, DataError, VocabularyMismatchError
from coref.logger import create_logger
from coref.models import CorefModel

MODEL_FILE = "model.pt"
OPTIMIZER_FILE = "optimizer.pt"
TRAINER_FILE = "trainer.json"
CONFIG_FILE = "config.yaml"
VOCAB_FILE = "vocab.txt"


class CheckpointManager:
    """Checkpoint directories under one root: parameters with a config header, vocabulary and trainer state"""

    def __init__(self, root: Optional[str] = None):
        self.root = root or os.environ.get("CHECKPOINTS_DIR", "checkpoints")
        self.logger = create_logger(__name__)

    def path(self, name: str) -> str:
        # Accept a checkpoint directory given directly
        if os.path.isfile(os.path.join(name, MODEL_FILE)):
            return name
        return os.path.join(self.root, name)

    def list_checkpoints(self) -> list:
        if not os.path.isdir(self.root):
            return []

        checkpoints = []
        for name in sorted(os.listdir(self.root)):
            if os.path.isfile(os.path.join(self.root, name, MODEL_FILE)):
                checkpoints.append(name)
        return checkpoints

    def save(self, name: str, model: CorefModel, trainer=None) -> str:
        directory = os.path.join(self.root, name)
        os.makedirs(directory, exist_ok=True)

        torch.save({"config": model.config.to_dict(), "model": model.state_dict()},
                   os.path.join(directory, MODEL_FILE))
        model.vocab.save(os.path.join(directory, VOCAB_FILE))
        model.config.dump(os.path.join(directory, CONFIG_FILE))

        if trainer is not None:
            if trainer.optimizer is not None:
                torch.save(trainer.optimizer.state_dict(), os.path.join(directory, OPTIMIZER_FILE))
            with open(os.path.join(directory, TRAINER_FILE), "w") as f:
                json.dump(trainer.state_dict(), f)

        self.logger.info(f"Saved checkpoint {directory}")
        return directory

    def load(self, name: str, overrides: Optional[Mapping] = None, vocab: Optional[Vocabulary] = None) -> CorefModel:
        """Rebuilds the model stored under name; overrides only touch run-time keys"""

        directory = self.path(name)
        try:
            header = torch.load(os.path.join(directory, MODEL_FILE), map_location="cpu")
        except (OSError, RuntimeError) as e:
            raise DataError(f"Unable to load checkpoint {directory}: {e}") from e

        config = RunConfig().update(header["config"])
        # The stored parameters already hold any pretrained weights
        config.encoder.pretrained_path = None
        if overrides:
            config.update(overrides)

        stored = Vocabulary.load(os.path.join(directory, VOCAB_FILE), config.preprocess.tags)
        if vocab is not None and vocab != stored:
            raise VocabularyMismatchError(
                f"Vocabulary of {len(vocab)} pieces does not match the {len(stored)} pieces of {directory}")

        model = CorefModel(config.validate(), stored)
        model.load_state_dict(header["model"])
        self.logger.info(f"Loaded checkpoint {directory}")
        return model

    def restore_trainer(self, name: str, trainer):
        directory = self.path(name)
        optimizer_path = os.path.join(directory, OPTIMIZER_FILE)
        if trainer.optimizer is not None and os.path.isfile(optimizer_path):
            try:
                trainer.optimizer.load_state_dict(torch.load(optimizer_path, map_location="cpu"))
            except ValueError as e:
                raise ConfigurationError(f"Optimizer state of {directory} does not fit this run: {e}") from e

        trainer_path = os.path.join(directory, TRAINER_FILE)
        if os.path.isfile(trainer_path):
            with open(trainer_path) as f:
                trainer.load_state_dict(json.load(f))
        return trainer

