"""
Общие флаги подкоманд и сборка RunConfig из флагов, файла и настроек.
"""

import argparse
from typing import Any, Dict, List, Optional

from config import Settings
from core.exceptions import ArgumentError
from core.models import AnalysisKind, RunConfig
from utils.parsing import parse_real, parse_real_list

# dest флагов, не входящие в RunConfig
_NOT_CONFIG = {"command", "handler", "kind", "config", "param", "sigma", "r", "b", "no_plot"}


def _parse_param(text: str) -> tuple:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), parse_real(value)


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """--system, parameters, x0, --step, --warmup, --seed, --out, --config."""
    group = parser.add_argument_group("common")
    group.add_argument("--config", help="JSON run configuration; flags override it")
    group.add_argument("--system", help="lorenz, henon, linear-diag, linear-diag-map or a point set")
    group.add_argument(
        "--param", action="append", type=_parse_param, metavar="NAME=VALUE",
        help="system parameter, repeatable (fractions such as 8/3 allowed)",
    )
    group.add_argument("--sigma", type=parse_real, help="Lorenz sigma")
    group.add_argument("--r", type=parse_real, help="Lorenz r")
    group.add_argument("--b", type=parse_real, help="Lorenz b")
    group.add_argument("--x0", type=parse_real_list, help="initial state, comma separated")
    group.add_argument("--step", type=parse_real, help="RK4 step")
    group.add_argument("--warmup", type=parse_real, help="transient discarded before sampling")
    group.add_argument("--seed", type=int, help="RNG seed")
    group.add_argument("--out", help="artifact directory")
    group.add_argument("--no-plot", action="store_true", help="skip SVG plots")


def add_sampling_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("sampling")
    group.add_argument("--samples", type=int, help="attractor samples")
    group.add_argument("--stride", type=parse_real, help="time between samples")
    group.add_argument("--reorth-every", type=int, help="steps between QR re-orthonormalizations")


def add_lyapunov_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("lyapunov dimension")
    group.add_argument("--horizons", type=parse_real_list, help="increasing horizons, e.g. 5,10,20")


def add_covering_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("coverings")
    group.add_argument("--levels", type=int, help="prefractal level for point sets")
    group.add_argument("--n-points", type=int, help="attractor points to cover")
    group.add_argument("--chains", type=int, help="parallel sampling chains")
    group.add_argument("--eps-max", type=parse_real, help="coarsest eps")
    group.add_argument("--eps-ratio", type=parse_real, help="ratio between consecutive eps")
    group.add_argument("--n-scales", type=int, help="number of eps values")
    group.add_argument("--anchors", type=int, help="grid anchors for the spread table")
    group.add_argument("--ds", type=parse_real_list, help="exponents d for N(eps) eps^d columns")


def add_rate_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("growth rates")
    group.add_argument("--horizon", type=parse_real, help="tangent-map horizon for rate estimates")
    group.add_argument("--a", type=parse_real, help="use this a instead of estimating it")
    group.add_argument("--estimate-a", action="store_true", default=None,
                       help="estimate a from attractor samples")
    group.add_argument("--exclude-radius", type=parse_real,
                       help="drop samples closer than this to a Lorenz equilibrium")


def add_stretch_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("curve stretching")
    group.add_argument("--taus", type=parse_real_list, help="increasing times, e.g. 1,2,3,4,5")
    group.add_argument("--segment-length", type=parse_real, help="initial segment length")
    group.add_argument("--resolution", type=parse_real, help="maximum gap between vertices")


def settings_defaults(settings: Settings) -> Dict[str, Any]:
    return {
        "step": settings.DEFAULT_STEP,
        "warmup": settings.DEFAULT_WARMUP,
        "reorth_every": settings.DEFAULT_REORTH_EVERY,
        "out": settings.OUTPUT_DIR,
    }


def _params(args: argparse.Namespace) -> Optional[Dict[str, float]]:
    pairs: List[tuple] = list(getattr(args, "param", None) or [])
    for name in ("sigma", "r", "b"):
        value = getattr(args, name, None)
        if value is not None:
            pairs.append((name, value))
    return dict(pairs) or None


def build_config(args: argparse.Namespace, kind: AnalysisKind, settings: Settings) -> RunConfig:
    """
    Builds the run configuration: Settings defaults < --config file < flags.

    Raises:
        ConfigError: unreadable config file
        pydantic.ValidationError: schema violation (mapped to ConfigError by main)
    """
    flags = {
        key: value for key, value in vars(args).items() if key not in _NOT_CONFIG
    }
    if args.no_plot:
        flags["plot"] = False
    if args.sigma is not None or args.r is not None or args.b is not None:
        if args.system not in (None, "lorenz"):
            raise ArgumentError("--sigma/--r/--b apply to the lorenz system", system=args.system)
    return RunConfig.from_sources(
        args.config,
        defaults=settings_defaults(settings),
        analysis=kind,
        params=_params(args),
        **flags,
    )
