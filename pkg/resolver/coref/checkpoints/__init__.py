from .checkpoints import CheckpointManager
