"""
Подкоманда box-dim: подсчет кубов по шкале eps и наклон ln N от ln(1/eps).
"""

from commands.common import add_common_arguments, add_covering_arguments, add_sampling_arguments
from core.dtos.reports import BoxDimResponseDTO
from core.models import AnalysisKind, RunConfig
from utils.service_factory import ServiceFactory

KIND = AnalysisKind.BOX_DIM


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "box-dim", help="grid-covering dimension of an attractor sample or a prefractal"
    )
    add_common_arguments(parser)
    add_sampling_arguments(parser)
    add_covering_arguments(parser)
    parser.set_defaults(handler=handle, kind=KIND)


async def handle(config: RunConfig, services: ServiceFactory) -> BoxDimResponseDTO:
    return await services.get_analysis_service().box_dim(config)
