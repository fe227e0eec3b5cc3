"""
Подкоманда lyap-dim: размерность Ляпунова на выборке с аттрактора.
"""

from commands.common import add_common_arguments, add_lyapunov_arguments, add_sampling_arguments
from core.dtos.reports import LyapDimResponseDTO
from core.models import AnalysisKind, RunConfig
from utils.service_factory import ServiceFactory

KIND = AnalysisKind.LYAP_DIM


def register(subparsers) -> None:
    parser = subparsers.add_parser("lyap-dim", help="Lyapunov dimension on attractor samples")
    add_common_arguments(parser)
    add_sampling_arguments(parser)
    add_lyapunov_arguments(parser)
    parser.set_defaults(handler=handle, kind=KIND)


async def handle(config: RunConfig, services: ServiceFactory) -> LyapDimResponseDTO:
    return await services.get_analysis_service().lyap_dim(config)
