import logging

import coloredlogs

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"


def configure_logging(level: str = "INFO", fmt: str = LOG_FORMAT) -> None:
    """
    Installs a coloured handler on the root logger.

    Library modules only call logging.getLogger(__name__); handler setup
    happens once, from the command line entry point.

    Args:
        level (str): Logging level name, e.g. "DEBUG" or "INFO".
        fmt (str): Log record format string.
    """
    coloredlogs.install(level=level.upper(), fmt=fmt, logger=logging.getLogger())
    # joblib workers and numba are chatty at DEBUG
    logging.getLogger("numba").setLevel(logging.WARNING)
