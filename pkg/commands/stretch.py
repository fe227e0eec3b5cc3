"""
Подкоманда stretch: рост длины трансверсального отрезка под потоком Лоренца.
"""

from commands.common import (
    add_common_arguments,
    add_rate_arguments,
    add_sampling_arguments,
    add_stretch_arguments,
)
from core.dtos.reports import StretchResponseDTO
from core.models import AnalysisKind, RunConfig
from utils.service_factory import ServiceFactory

KIND = AnalysisKind.STRETCH


def register(subparsers) -> None:
    parser = subparsers.add_parser("stretch", help="curve-stretching experiment")
    add_common_arguments(parser)
    add_sampling_arguments(parser)
    add_rate_arguments(parser)
    add_stretch_arguments(parser)
    parser.set_defaults(handler=handle, kind=KIND)


async def handle(config: RunConfig, services: ServiceFactory) -> StretchResponseDTO:
    return await services.get_analysis_service().stretch(config)
