import logging
import os
import time
from contextlib import contextmanager
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Iterator, Optional

FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"


def setup_logging(level: Optional[str] = None) -> None:
    """
    Quiet-by-default logging for the lab commands.
    Env:
      LOG_LEVEL=INFO|DEBUG|WARNING (default INFO); an explicit `level` wins
      LOG_TO_FILE=1 to also write data/run.log with rotation
    Only verbosity comes from the environment; numeric settings never do.
    """
    name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    lvl = getattr(logging, name, logging.INFO)
    logging.basicConfig(level=lvl, format=FORMAT)

    # third-party loggers stay at WARNING or above
    for noisy in ("concurrent.futures", "matplotlib", "asyncio"):
        logging.getLogger(noisy).setLevel(max(lvl, logging.WARNING))

    if os.getenv("LOG_TO_FILE") == "1":
        log_dir = Path("data")
        log_dir.mkdir(parents=True, exist_ok=True)
        fh = RotatingFileHandler(log_dir / "run.log", maxBytes=2_000_000, backupCount=3, encoding="utf-8")
        fh.setLevel(lvl)
        fh.setFormatter(logging.Formatter(FORMAT))
        logging.getLogger().addHandler(fh)


@contextmanager
def log_stage(logger: logging.Logger, stage: str) -> Iterator[None]:
    """Log start and wall time of one computational stage at DEBUG/INFO."""
    logger.debug("stage %s: start", stage)
    t0 = time.perf_counter()
    try:
        yield
    finally:
        logger.info("stage %s: %.3fs", stage, time.perf_counter() - t0)
