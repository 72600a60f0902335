import os
import logging

from coref.config import Config


def create_logger(name, config=Config) -> logging.Logger:
    """Returns instantiated logger using environment settings"""

    logger = logging.getLogger(name)
    logger.setLevel(os.environ.get("LOG_LEVEL", config.LOG_LEVEL))

    # Loggers are module singletons, attach handlers only once
    if logger.handlers:
        return logger

    console_handler = logging.StreamHandler()
    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if config.LOGS_DIR:
        os.makedirs(config.LOGS_DIR, exist_ok=True)
        file_handler = logging.FileHandler(os.path.join(config.LOGS_DIR, f"{config.LOG_LEVEL}.log"))
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def set_level(level: str):
    """Applies a log level to every logger created under the coref package"""

    os.environ["LOG_LEVEL"] = level
    for name, logger in logging.root.manager.loggerDict.items():
        if name.startswith("coref") and isinstance(logger, logging.Logger):
            logger.setLevel(level)
