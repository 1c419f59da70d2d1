# app/main.py
import logging
import sys
from typing import List, Optional

import click

from app.api.commands import COMMANDS, EXIT_HYPOTHESIS, EXIT_INPUT, EXIT_OK
from app.config import settings
from app.services.errors import HypothesisError, InputError

# Configure logging
logging.basicConfig(
    level=settings.log_level,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    stream=sys.stderr,
)

logger = logging.getLogger(__name__)


@click.group(name="pfactor", help=settings.app_name)
def cli():
    pass


for command in COMMANDS:
    cli.add_command(command)


def run(argv: Optional[List[str]] = None) -> int:
    """Entry point returning the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        code = cli.main(args=argv, prog_name="pfactor", standalone_mode=False, obj={"argv": argv})
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_INPUT
    except click.exceptions.Abort:
        return EXIT_INPUT
    except (InputError, ValueError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT
    except HypothesisError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_HYPOTHESIS
    except Exception as exc:
        logger.error(f"Unexpected failure: {exc}", exc_info=True)
        return EXIT_INPUT
    return code if isinstance(code, int) else EXIT_OK
