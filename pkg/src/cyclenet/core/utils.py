import hashlib
import json
import logging
import logging.handlers
import math
import sys
from pathlib import Path
from typing import Any, Iterable, List, Optional

LOGGER_NAME = "cyclenet"


# String ----------------------------------------------------------------------
def elide_middle(txt: str, width: int) -> str:
    """Shorten text to fit within a certain width

    ex: ('exhaust_pressure_long_name', 14) -> 'exha ... _name'

    Args:
        txt:    Text to elide.
        width:  Maximum character limit. Shorter text is padded to the width.
    """
    if len(txt) > width:
        half = float(width) / 2
        a, b = math.floor(half), math.ceil(half)
        return txt[: a - 3] + " ... " + txt[len(txt) - b + 2 :]
    else:
        return txt.ljust(width)


def format_table(header: List[str], rows: Iterable[Iterable[Any]], width: int = 12) -> str:
    """Render rows as a fixed-width text table for terminal summaries

    Floats are printed with 4 significant digits.
    """

    def _cell(value: Any) -> str:
        if isinstance(value, float):
            value = f"{value:.4g}"
        return elide_middle(str(value), width)

    lines = [" | ".join(_cell(h) for h in header)]
    lines.append("-+-".join("-" * width for _ in header))
    for row in rows:
        lines.append(" | ".join(_cell(v) for v in row))
    return "\n".join(lines)


# Integer ranges --------------------------------------------------------------
def format_ranges(values: Iterable[int], sep: str = " ") -> str:
    """Compact a sorted list of integers into sub-ranges. Not steps.

    ex: [1, 2, 3, 7, 9, 10] -> '1-3 7 9-10'

    Args:
        values: Sorted integers, ex: seconds of flagged samples.
        sep:    Separator to use between sub-ranges.
    """
    start, end, parts = None, None, []

    for v in values:
        if isinstance(end, int):
            if end + 1 == v:
                end += 1
            else:
                parts.append(str(start) if start == end else f"{start}-{end}")
                start, end = v, v
        else:
            start, end = v, v

    if isinstance(end, int):
        parts.append(str(start) if start == end else f"{start}-{end}")

    return sep.join(parts)


# Hashing ---------------------------------------------------------------------
def config_hash(document: Any) -> str:
    """SHA-256 of the canonical JSON rendering of a document"""
    text = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def derive_seed(base: int, label: str) -> int:
    """Derive an independent 63-bit seed from a base seed and a label"""
    digest = hashlib.sha256(f"{base}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


# Logging ---------------------------------------------------------------------
def create_logger(
    log_path: Optional[Path] = None,
    level: int = logging.INFO,
    stream: bool = True,
) -> logging.Logger:
    """Configure the package logger

    Calling it again replaces the previous handlers, so each command of the
    command line can point the log file into its own output directory.

    Args:
        log_path:   Optional file receiving the log. Rotated when it grows past 10 MB.
        level:      Logging level of the package logger.
        stream:     Also log to stderr.
    """
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    logger.propagate = False

    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    if stream:
        stream_handler = logging.StreamHandler(sys.stderr)
        stream_handler.setFormatter(formatter)
        logger.addHandler(stream_handler)

    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_path, maxBytes=10 * 1024 * 1024, backupCount=1
        )
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger
