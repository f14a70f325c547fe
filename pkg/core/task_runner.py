"""
Trial Runner for independent numerical tasks

Multi-start shooting and the linearity experiments run many independent
integrations. The runner fans them out to a thread pool from an asyncio
orchestrator and hands results back sorted by task key, so reports do not
depend on completion order.
"""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Hashable, List, Optional, Tuple

from config import config

logger = logging.getLogger(__name__)


class TrialRunner:
    """
    Runs keyed zero-argument callables on a bounded worker pool.

    Parallelism is capped by SUBFINSLER_THREADS through an asyncio.Semaphore.
    With return_exceptions=True a failing task yields its exception as the
    result instead of aborting the batch.
    """

    def __init__(self, max_workers: Optional[int] = None, return_exceptions: bool = False):
        self.max_workers = max(1, max_workers or config.threads)
        self.return_exceptions = return_exceptions
        self.completed = 0
        self.failed = 0

    async def _run_one(self, loop, executor, semaphore, key: Hashable, task: Callable[[], Any]):
        async with semaphore:
            try:
                result = await loop.run_in_executor(executor, task)
                self.completed += 1
                return key, result
            except Exception as e:
                self.failed += 1
                if self.return_exceptions:
                    logger.debug(f"Task {key!r} failed: {e}")
                    return key, e
                logger.error(f"Task {key!r} failed: {e}")
                raise

    async def run(self, tasks: Dict[Hashable, Callable[[], Any]]) -> List[Tuple[Hashable, Any]]:
        """Run every task and return (key, result) pairs sorted by key"""
        if not tasks:
            return []
        loop = asyncio.get_running_loop()
        semaphore = asyncio.Semaphore(self.max_workers)
        logger.debug(f"Running {len(tasks)} tasks on {self.max_workers} workers")
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            results = await asyncio.gather(*(
                self._run_one(loop, executor, semaphore, key, task) for key, task in tasks.items()
            ))
        return sorted(results, key=lambda item: item[0])

    def run_blocking(self, tasks: Dict[Hashable, Callable[[], Any]]) -> List[Tuple[Hashable, Any]]:
        """Same contract as `run` for callers that already sit inside an event loop"""
        results = []
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = {key: executor.submit(task) for key, task in tasks.items()}
            for key in sorted(futures):
                try:
                    results.append((key, futures[key].result()))
                    self.completed += 1
                except Exception as e:
                    self.failed += 1
                    if not self.return_exceptions:
                        logger.error(f"Task {key!r} failed: {e}")
                        raise
                    results.append((key, e))
        return results

    def health_check(self) -> Dict[str, Any]:
        return {'max_workers': self.max_workers, 'completed': self.completed, 'failed': self.failed}


def run_trials(tasks: Dict[Hashable, Callable[[], Any]], max_workers: Optional[int] = None,
               return_exceptions: bool = False) -> List[Tuple[Hashable, Any]]:
    """Synchronous entry point used by the solvers"""
    runner = TrialRunner(max_workers, return_exceptions)
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        results = asyncio.run(runner.run(tasks))
    else:
        results = runner.run_blocking(tasks)
    logger.debug("Trial batch finished: %s", runner.health_check())
    return results
