import hashlib
import logging
import sys

from rich.console import Console
from rich.logging import RichHandler

_stderr = Console(stderr=True)


def eprint(*args, **kwargs):
    print(*args, file=sys.stderr, **kwargs)


def get_logger(name):
    """Return a logger that writes through rich to stderr.

    The handler is attached once to the package root logger, so every module
    logger shares it."""
    root = logging.getLogger("leraBench")
    if not root.handlers:
        handler = RichHandler(console=_stderr, show_path=False, markup=False)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
        root.setLevel(logging.WARNING)
    return logging.getLogger(name)


def setVerbosity(verbose=False, debug=False):
    level = logging.WARNING
    if verbose:
        level = logging.INFO
    if debug:
        level = logging.DEBUG
    get_logger("leraBench").setLevel(level)


def sanitizeName(name):
    """
    Sanitize a label so it can be used in file names."""
    return name.replace(" ", "_").replace("/", "_")


def strToValue(val):
    if val == "true":
        val = True
    elif val == "false":
        val = False
    elif val.isnumeric():
        val = int(val)
    elif val.replace(".", "", 1).isnumeric():
        val = float(val)
    return val


def derive_seed(*parts):
    """Mix labelled parts into a 63-bit seed.

    sha256 keeps the result identical across processes and platforms, unlike hash()."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
