import logging
from logging.handlers import RotatingFileHandler
import os
import sys


def setup_logging(log_level=logging.INFO, log_dir="logs", console: bool = True):
    os.makedirs(log_dir, exist_ok=True)
    log_file = os.path.join(log_dir, "tippinglab.log")

    formatter = logging.Formatter(
        "%(asctime)s [%(levelname)s] %(name)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    handlers = []
    if console:
        # stdout stays reserved for command results
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        console_handler.setLevel(max(log_level, logging.WARNING))
        handlers.append(console_handler)

    file_handler = RotatingFileHandler(log_file, maxBytes=5_000_000, backupCount=3)
    file_handler.setFormatter(formatter)
    handlers.append(file_handler)

    logging.basicConfig(level=log_level, handlers=handlers, force=True)
