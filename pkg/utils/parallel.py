"""
Order-preserving parallel map used by the data-parallel sweeps.

The worker count comes from the caller (normally ``Settings.THREADS``, set
with ATTRDIM_THREADS); with one worker everything runs inline.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger("parallel")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Applies ``fn`` to every item and returns results in input order.

    Args:
        fn: function to apply
        items: inputs
        workers: maximum number of threads

    Returns:
        List of results; the first exception raised by ``fn`` propagates
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("parallel_map: %d items on %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
