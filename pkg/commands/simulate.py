"""
Подкоманда simulate: траектория в trajectory.csv.
"""

import logging

from commands.common import add_common_arguments
from core.dtos.reports import SimulateResponseDTO
from core.models import AnalysisKind, RunConfig
from utils.parsing import parse_real
from utils.service_factory import ServiceFactory

logger = logging.getLogger("simulate_command")

KIND = AnalysisKind.SIMULATE


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="integrate one trajectory")
    add_common_arguments(parser)
    parser.add_argument("--t", type=parse_real, help="duration (iterations for maps)")
    parser.set_defaults(handler=handle, kind=KIND)


async def handle(config: RunConfig, services: ServiceFactory) -> SimulateResponseDTO:
    """Интегрирование траектории"""
    logger.info("simulate %s t=%g step=%g", config.system, config.t, config.step)
    return await services.get_analysis_service().simulate(config)
