"""Worker-count control for the point-parallel evaluation loops.

SCATTERFM_THREADS caps the number of worker threads (0 or unset = auto).
Work items are independent and each uses a fixed left-to-right summation
order, so results do not depend on the thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    raw = os.environ.get("SCATTERFM_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def run_chunked(func, chunks):
    """Apply func to each chunk, preserving order; threads per worker_count()."""
    chunks = list(chunks)
    workers = min(worker_count(), max(1, len(chunks)))
    if workers == 1 or len(chunks) <= 1:
        return [func(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, chunks))
