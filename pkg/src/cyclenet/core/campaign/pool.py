import logging
import os
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from typing import Callable, Optional, Sequence

from .base import CaseJob, CaseResult, ICaseRunner, run_case

logger = logging.getLogger(__name__)


class PoolRunner(ICaseRunner):
    def __init__(self, workers: Optional[int] = None, max_pending: Optional[int] = None):
        """Task farm over a process pool

        Workers share nothing: each process loads its own thermochemistry
        table and evaluates whole cases. Results come back to the calling
        thread in completion order.

        Args:
            workers:        Number of processes, defaults to the CPU count.
            max_pending:    Cases submitted ahead of the results consumed.
                            Defaults to four per worker.
        """
        self.workers = workers or os.cpu_count() or 1
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.max_pending = max_pending or 4 * self.workers

    def run(self, jobs: Sequence[CaseJob], callback: Callable[[CaseResult], None]) -> None:
        queue = iter(jobs)
        pending = set()
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            try:
                for job in queue:
                    pending.add(executor.submit(run_case, job))
                    if len(pending) >= self.max_pending:
                        break

                while pending:
                    done, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for future in done:
                        callback(future.result())
                        job = next(queue, None)
                        if job is not None:
                            pending.add(executor.submit(run_case, job))
            except BaseException:
                for future in pending:
                    future.cancel()
                logger.error("campaign aborted, %d submitted cases cancelled", len(pending))
                raise
