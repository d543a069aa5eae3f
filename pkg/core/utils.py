# core/utils.py
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple, TypeVar

T = TypeVar('T')

# Below this many items a map runs inline
MIN_ITEMS_PER_WORKER = 2048


def chunk_bounds(n: int, workers: int) -> List[Tuple[int, int]]:
    """Split [0, n) into at most `workers` contiguous chunks"""
    workers = max(1, int(workers))
    if n <= 0:
        return []
    count = min(workers, max(1, n // MIN_ITEMS_PER_WORKER))
    step = -(-n // count)
    return [(start, min(start + step, n)) for start in range(0, n, step)]


def parallel_map(fn: Callable[[int, int], T], n: int, workers: int = 1) -> List[T]:
    """Apply fn(start, stop) over contiguous chunks, results in chunk order

    fn must be a pure element-wise map so the concatenated output does not
    depend on the chunking.
    """
    bounds = chunk_bounds(n, workers)
    if len(bounds) <= 1:
        return [fn(start, stop) for start, stop in bounds]
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
