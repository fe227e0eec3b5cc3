"""
Подкоманда report: сводный отчет по артефактам остальных подкоманд.
"""

from commands.common import (
    add_common_arguments,
    add_covering_arguments,
    add_lyapunov_arguments,
    add_rate_arguments,
    add_sampling_arguments,
    add_stretch_arguments,
    parse_real,
)
from core.dtos.reports import ReportResponseDTO
from core.models import AnalysisKind, RunConfig
from utils.service_factory import ServiceFactory

KIND = AnalysisKind.REPORT


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="combined report from prior artifacts")
    add_common_arguments(parser)
    add_sampling_arguments(parser)
    add_lyapunov_arguments(parser)
    add_covering_arguments(parser)
    add_rate_arguments(parser)
    add_stretch_arguments(parser)
    parser.add_argument("--t", type=parse_real, help="duration of the volume identity check")
    parser.add_argument(
        "--compute-missing", action="store_true", default=None,
        help="run the analyses whose artifacts are missing instead of failing",
    )
    parser.set_defaults(handler=handle, kind=KIND)


async def handle(config: RunConfig, services: ServiceFactory) -> ReportResponseDTO:
    return await services.get_analysis_service().report(config)
