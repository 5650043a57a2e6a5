"""
Fan out independent jobs over a bounded worker pool and collect their results in one place.
"""
import logging
import concurrent.futures
from typing import Any, Callable, Hashable, Iterable, List, NamedTuple, Tuple

logger = logging.getLogger(__name__)

JOB_FAILED_MSG = "Sweep job %s failed: %s"


class SweepResult(NamedTuple):
    key: Hashable
    value: Any


def run_sweep(jobs: Iterable[Tuple[Hashable, Tuple]], worker: Callable, workers: int = 1) -> List[SweepResult]:
    """
    Calls worker(*args) for every (key, args) job.

    The results come back in job order whatever order they finish in, so a
    sweep's output does not depend on the number of workers. The first
    failing job re-raises its exception once the pool is shut down.
    """
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [SweepResult(key=key, value=worker(*args)) for key, args in jobs]
    results = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(worker, *args): index for index, (_, args) in enumerate(jobs)}
        for future in concurrent.futures.as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception as e:
                logger.error(JOB_FAILED_MSG, jobs[index][0], e)
                for pending in futures:
                    pending.cancel()
                raise
    return [SweepResult(key=jobs[index][0], value=results[index]) for index in range(len(jobs))]
