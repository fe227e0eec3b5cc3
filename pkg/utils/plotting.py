"""
SVG plots of fits (matplotlib, Agg backend).

Plots are conveniences: the CSV/JSON artifacts carry the numbers.
"""

import io
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# фиксированная соль: одинаковые данные дают побайтно одинаковый SVG
matplotlib.rcParams["svg.hashsalt"] = "attrdim"


def _to_svg(fig) -> str:
    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buffer.getvalue()


def loglog_fit_svg(
    eps: Sequence[float], counts: Sequence[int], slope: float, intercept: float, title: str = ""
) -> str:
    """ln N against ln(1/eps) with the fitted line."""
    x = np.log(1.0 / np.asarray(eps, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(x, y, "o", label="ln N(eps)")
    ax.plot(x, intercept + slope * x, "-", label=f"slope {slope:.4f}")
    ax.set_xlabel("ln(1/eps)")
    ax.set_ylabel("ln N")
    ax.set_title(title)
    ax.legend()
    return _to_svg(fig)


def rate_fit_svg(
    taus: Sequence[float], lengths: Sequence[float], rate: float, intercept: float, title: str = ""
) -> str:
    """ln length against tau with the fitted growth line."""
    x = np.asarray(taus, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(x, np.log(np.asarray(lengths, dtype=float)), "o", label="ln length")
    ax.plot(x, intercept + rate * x, "-", label=f"rate {rate:.4f}")
    ax.set_xlabel("tau")
    ax.set_ylabel("ln length")
    ax.set_title(title)
    ax.legend()
    return _to_svg(fig)
