import logging


def configure_logger(level: int | str = logging.INFO) -> logging.Logger:
    """
    Configures the root logger for the HGNN tooling.

    A single console handler is attached on first call; later calls only
    adjust the level so that repeated CLI invocations inside one process
    (tests, notebooks) do not stack handlers.

    Args:
        level: The log level as an int or a level name such as "DEBUG", defaults to INFO

    Returns:
        The configured root logger

    Raises:
        ValueError: If the level name is unknown
    """

    if isinstance(level, str):
        resolved = logging.getLevelName(level.upper())
        if not isinstance(resolved, int):
            raise ValueError(f"Unknown log level: {level}")
        level = resolved

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    if not root_logger.handlers:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)

        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
        )
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)
    else:
        for handler in root_logger.handlers:
            handler.setLevel(level)

    root_logger.debug(f"Configured root logger with level: {logging.getLevelName(root_logger.level)}")
    return root_logger
