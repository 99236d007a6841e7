"""Deterministic fan-out over independent work items.

Results are always gathered in task order, so outputs are identical for any
worker count or scheduling. Task functions must be module-level (picklable)
and derive all randomness from explicit seeds in their arguments.
"""

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    return os.cpu_count() or 1


def map_indexed(fn, tasks, workers: int = 1) -> list:
    """Apply fn to each task, preserving task order in the result list."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
        return list(ex.map(fn, tasks))
