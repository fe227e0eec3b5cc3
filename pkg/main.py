"""
This module is the entry point of the attrdim command-line tool.

It configures logging, parses the subcommand and its flags, runs the
requested analysis through the AnalysisService and prints the result JSON.
Errors are printed as machine-readable JSON with a distinct exit code:
0 ok, 2 configuration error, 3 divergence, 4 insufficient data, 5 missing
prerequisite artifact.
"""

import argparse
import asyncio
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, ValidationError

# Импортируем настройки
from config import Settings, get_settings
from commands import SUBCOMMANDS
from commands.common import build_config
from core.exceptions import ArgumentError, AttrDimError, ConfigError
from utils.service_factory import ServiceFactory

logger = logging.getLogger("main")


class CliParser(argparse.ArgumentParser):
    """argparse с ошибками в виде ArgumentError (JSON вместо текста usage)."""

    def error(self, message: str):
        raise ArgumentError(f"{self.prog}: {message}")


def configure_logging(settings: Settings) -> None:
    """Настройка логирования: stderr и, если задан LOG_FILE, файл."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format=settings.LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def build_parser(settings: Settings) -> CliParser:
    parser = CliParser(
        prog=settings.APP_NAME,
        description="Dimension estimates for attractors of flows and maps",
    )
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in SUBCOMMANDS:
        module.register(subparsers)
    return parser


def validation_details(exc: ValidationError) -> List[Dict[str, Any]]:
    """
    Extracts {loc, msg, type} from each validation error.

    Args:
        exc (ValidationError): The exception containing validation errors.

    Returns:
        List of error details
    """
    error_details = []
    for error in exc.errors():
        error_details.append(
            {
                "loc": list(error.get("loc", [])),
                "msg": error.get("msg", ""),
                "type": error.get("type", ""),
            }
        )
    return error_details


async def execute(args: argparse.Namespace, settings: Settings) -> BaseModel:
    """
    Builds the run configuration and runs the subcommand handler.

    Args:
        args: Parsed arguments
        settings: Application settings

    Returns:
        Response DTO of the subcommand
    """
    config = build_config(args, args.kind, settings)
    logger.info("Запуск %s (system=%s, seed=%d)", config.analysis.value, config.system, config.seed)
    services = ServiceFactory(config.out, settings)
    try:
        return await args.handler(config, services)
    finally:
        services.close()


def _emit_error(error: AttrDimError) -> int:
    print(json.dumps(error.to_dict(), indent=2))
    return error.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs the CLI.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    # Инициализируем настройки
    settings = get_settings()
    configure_logging(settings)

    try:
        args = build_parser(settings).parse_args(argv)
        result = asyncio.run(execute(args, settings))
    except ValidationError as e:
        details = validation_details(e)
        logger.warning("Ошибка валидации: %s", details)
        return _emit_error(ConfigError("invalid run configuration", details))
    except AttrDimError as e:
        logger.error("%s: %s", type(e).__name__, e.message)
        return _emit_error(e)

    print(result.model_dump_json(indent=2))
    return 0


# Запуск CLI
if __name__ == "__main__":
    sys.exit(main())
