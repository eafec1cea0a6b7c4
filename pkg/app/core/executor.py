"""
Process pool manager with reference counting.

Pipeline stages share one pool per run; the pool is only shut down when
every stage that acquired it has released it. With a single worker the
manager never spawns processes and work runs inline, which keeps the
jobs=1 path trivially debuggable.
"""

import threading
from concurrent.futures import Executor, ProcessPoolExecutor, as_completed
from contextlib import contextmanager
from typing import Callable, Iterator, Optional, Sequence, TypeVar

from app.core.logging import get_logger

logger = get_logger("executor_manager")

T = TypeVar("T")
R = TypeVar("R")


class ExecutorManager:
    """
    Manages a ProcessPoolExecutor with reference counting for safe shutdown.

    Features:
    - Shared pool across pipeline stages
    - Reference counting to prevent premature shutdown
    - Results returned in submission order regardless of completion order
    """

    def __init__(self, max_workers: int = 1):
        self._executor: Optional[Executor] = None
        self._max_workers = max(1, max_workers)
        self._reference_count = 0
        self._ref_lock = threading.Lock()

    def acquire(self) -> Optional[Executor]:
        """
        Acquire a reference to the pool.
        Creates the pool on first acquisition (never for a single worker).

        Returns:
            The shared executor, or None when work should run inline
        """
        with self._ref_lock:
            if self._max_workers > 1 and self._executor is None:
                self._executor = ProcessPoolExecutor(max_workers=self._max_workers)
                logger.info(f"✓ Created ProcessPoolExecutor with {self._max_workers} workers")

            self._reference_count += 1
            logger.debug(f"Executor acquired (refs: {self._reference_count})")
            return self._executor

    def release(self) -> None:
        """
        Release a reference to the pool.
        Shuts the pool down when the reference count reaches zero.
        """
        with self._ref_lock:
            if self._reference_count == 0:
                return
            self._reference_count -= 1
            logger.debug(f"Executor released (refs: {self._reference_count})")

            if self._reference_count == 0 and self._executor is not None:
                try:
                    logger.info("Shutting down ProcessPoolExecutor (no references remain)...")
                    self._executor.shutdown(wait=True, cancel_futures=False)
                    logger.info("✓ ProcessPoolExecutor shutdown complete")
                except Exception as e:
                    logger.error(f"Error shutting down executor: {e}", exc_info=True)
                finally:
                    self._executor = None

    @contextmanager
    def executor_context(self) -> Iterator[Optional[Executor]]:
        """
        Context manager for safe pool usage.

        Usage:
            with manager.executor_context() as executor:
                results = manager.map_ordered(work, units)
        """
        executor = self.acquire()
        try:
            yield executor
        finally:
            self.release()

    def map_ordered(self, fn: Callable[[T], R], units: Sequence[T]) -> list[R]:
        """
        Apply fn to every unit and return the results in input order.

        fn and the units must be picklable when more than one worker is used.
        """
        with self.executor_context() as executor:
            if executor is None:
                return [fn(unit) for unit in units]

            results: list[Optional[R]] = [None] * len(units)
            futures = {executor.submit(fn, unit): index for index, unit in enumerate(units)}
            for future in as_completed(futures):
                results[futures[future]] = future.result()
            return results  # type: ignore[return-value]

    @property
    def max_workers(self) -> int:
        return self._max_workers

    @property
    def reference_count(self) -> int:
        """Get current reference count."""
        return self._reference_count
