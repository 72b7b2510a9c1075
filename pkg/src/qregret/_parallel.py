import os
from concurrent.futures import ThreadPoolExecutor


def max_workers() -> int:
    """Worker cap from ``QREGRET_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("QREGRET_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """``map`` that may run concurrently; results keep input order."""
    items = list(items)
    workers = min(max_workers(), len(items)) if items else 1
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
