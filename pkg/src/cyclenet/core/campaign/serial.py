from typing import Callable, Sequence

from .base import CaseJob, CaseResult, ICaseRunner, run_case


class SerialRunner(ICaseRunner):
    def __init__(self, reverse: bool = False):
        """An in-process `ICaseRunner`, one case after the other

        Args:
            reverse:    Report jobs last to first. Lets tests check that the
                        campaign output does not depend on completion order.
        """
        self.reverse = reverse

    def run(self, jobs: Sequence[CaseJob], callback: Callable[[CaseResult], None]) -> None:
        order = reversed(jobs) if self.reverse else jobs
        for job in order:
            callback(run_case(job))
