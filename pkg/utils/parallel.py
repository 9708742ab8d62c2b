"""Thread-pool helpers whose results do not depend on the thread count."""
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int) -> int:
    """``threads`` <= 0 means one worker per CPU, capped at 8."""
    if threads and threads > 0:
        return threads
    return max(1, min(8, os.cpu_count() or 1))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """``[fn(x) for x in items]``, optionally on a thread pool; output order follows input order."""
    items = list(items)
    workers = resolve_threads(threads)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
