import logging
from pathlib import Path
from typing import Optional

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s %(message)s'


def configure_logging(verbose: bool = False, log_file: Optional[Path] = None) -> logging.Logger:
    """
    Attaches console and optional file handlers to the package root logger.

    Args:
        verbose: Emit DEBUG records on the console
        log_file: If given, every record (DEBUG and up) is also written there

    Returns:
        The configured root logger of the package
    """
    root = logging.getLogger('src')
    root.setLevel(logging.DEBUG)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)

    console = logging.StreamHandler()
    console.setLevel(logging.DEBUG if verbose else logging.INFO)
    console.setFormatter(formatter)
    root.addHandler(console)

    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(log_file, mode='w')
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(formatter)
        root.addHandler(fh)

    root.propagate = False
    return root
