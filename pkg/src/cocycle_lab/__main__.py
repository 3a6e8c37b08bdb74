"""Entry point for ``python -m cocycle_lab`` and the ``cocycle-lab`` script."""

import sys

from .cli.commands import create_cli
from .core.engine import exit_code_for
from .utils.logging import get_logger

logger = get_logger(__name__)


def main() -> None:
    """Run the CLI, mapping escaped exceptions to lab exit codes."""
    try:
        create_cli()()
    except KeyboardInterrupt:
        logger.info("Interrupted; staged artifacts were discarded")
        sys.exit(130)
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        sys.exit(exit_code_for(e))


if __name__ == "__main__":
    main()
