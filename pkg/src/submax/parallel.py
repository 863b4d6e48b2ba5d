"""Thread-count resolution and an order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import InvalidArgumentError


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``SUBMAX_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get("SUBMAX_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise InvalidArgumentError(f"SUBMAX_THREADS must be an integer, got {env!r}") from exc
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise InvalidArgumentError(f"threads must be >= 1, got {threads}")
    return int(threads)


def pmap(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]``, computed on up to ``threads`` worker threads."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
