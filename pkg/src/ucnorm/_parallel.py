"""Order-preserving map over independent draws, capped by UCNORM_THREADS.

The serial path is lazy so callers can stop at the first hit.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def max_workers() -> int:
    try:
        return max(1, int(os.environ.get("UCNORM_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    workers = max_workers()
    if workers == 1:
        return map(fn, items)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
