"""
Подкоманда lorenz-bound: замкнутая формула и оценка через a.
"""

from commands.common import (
    add_common_arguments,
    add_rate_arguments,
    add_sampling_arguments,
    parse_real,
)
from core.dtos.reports import LorenzBoundResponseDTO
from core.models import AnalysisKind, RunConfig
from utils.service_factory import ServiceFactory

KIND = AnalysisKind.LORENZ_BOUND


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "lorenz-bound", help="closed-form Lorenz dimension and the bound from a"
    )
    add_common_arguments(parser)
    add_sampling_arguments(parser)
    add_rate_arguments(parser)
    parser.add_argument("--t", type=parse_real, help="duration of the volume identity check")
    parser.set_defaults(handler=handle, kind=KIND)


async def handle(config: RunConfig, services: ServiceFactory) -> LorenzBoundResponseDTO:
    return await services.get_analysis_service().lorenz_bound(config)
