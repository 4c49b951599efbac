"""
Bounded worker pool for independent analysis tasks
"""

import logging
from functools import partial
from multiprocessing import Pool, cpu_count

logger = logging.getLogger(__name__)


def parallel_map(func, tasks, workers=1, **kwargs):
    """Apply func(task, **kwargs) to every task; results keep task order"""
    tasks = list(tasks)
    worker = partial(func, **kwargs) if kwargs else func
    num_workers = max(1, min(workers, len(tasks), cpu_count()))
    if num_workers == 1:
        return [worker(task) for task in tasks]
    logger.debug(f"Running {len(tasks)} tasks on {num_workers} workers")
    with Pool(processes=num_workers) as pool:
        return pool.map(worker, tasks)
