from coref.config import DevelopmentConfig, ProductionConfig, RunConfig
from coref.errors import ContractViolation
from coref.logger import create_logger


def create_resolver(run_config: RunConfig, vocab=None, init=None, manager=None, overrides=None,
                    config=DevelopmentConfig):
    """Builds a CorefModel, either fresh from a vocabulary or restored from a checkpoint"""

    logger = create_logger(__name__, config)

    # Imported later to prevent circular import
    from coref.checkpoints import CheckpointManager
    from coref.models import CorefModel

    if init:
        manager = manager or CheckpointManager()
        model = manager.load(init, overrides=overrides, vocab=vocab)
    else:
        if vocab is None:
            raise ContractViolation("A vocabulary is required to build a model without a checkpoint")
        model = CorefModel(run_config, vocab)

    model.to(config.DEVICE)
    parameters = sum(param.numel() for param in model.parameters())
    logger.info(f"Resolver ready: {parameters} parameters, speaker strategy "
                f"{model.config.preprocess.speaker_strategy}, device {config.DEVICE}")
    return model
