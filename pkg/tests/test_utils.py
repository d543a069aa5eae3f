# tests/test_utils.py
import numpy as np

from core.utils import MIN_ITEMS_PER_WORKER, chunk_bounds, parallel_map


def test_small_inputs_run_in_one_chunk():
    assert chunk_bounds(10, 8) == [(0, 10)]
    assert chunk_bounds(0, 4) == []


def test_chunks_cover_the_range_in_order():
    n = 5 * MIN_ITEMS_PER_WORKER + 7
    bounds = chunk_bounds(n, 4)
    assert len(bounds) == 4
    assert bounds[0][0] == 0 and bounds[-1][1] == n
    assert all(a[1] == b[0] for a, b in zip(bounds, bounds[1:]))


def test_parallel_map_concatenates_in_chunk_order():
    values = np.arange(3 * MIN_ITEMS_PER_WORKER, dtype=np.float64)
    parts = parallel_map(lambda start, stop: values[start:stop] * 2.0, values.size, workers=3)
    assert len(parts) == 3
    assert np.array_equal(np.concatenate(parts), values * 2.0)
