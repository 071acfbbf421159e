"""
Sweep runner for dispatching sweep points to worker threads.
"""
import asyncio
import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np
from attrs import define, field

from .errors import InvalidParameterError
from .middleware import BaseMiddleware, ErrorHandlingMiddleware, LoggingMiddleware, TimingMiddleware
from .types import SweepRecord

logger = logging.getLogger(__name__)

Handler = Callable[["SweepPoint"], SweepRecord]


@define(frozen=True)
class SweepPoint:
    """
    One parameter combination of a sweep.

    Attributes:
        kind (str): Name of the registered handler
        index (int): Position in the sweep, used to seed the point's generator
        ell (float): Lattice spacing
        radius (float): Dirichlet box half-width
        z (complex): Spectral parameter (0 when unused)
        seed (int): Run seed
    """

    kind: str
    index: int
    ell: float = field(converter=float)
    radius: float = field(converter=float)
    z: complex = field(default=0j, converter=complex)
    seed: int = 0

    @property
    def key(self) -> Tuple[float, ...]:
        """Sort key: coarse ell first, then radius and z."""
        return (-self.ell, self.radius, self.z.real, self.z.imag)

    @property
    def label(self) -> str:
        """Readable identifier."""
        text = f"{self.kind}[ell={self.ell:g}, R={self.radius:g}"
        if self.z != 0:
            text += f", z={self.z.real:g}{self.z.imag:+g}j"
        return text + "]"

    def rng(self) -> np.random.Generator:
        """Generator seeded by (seed, index)."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.index]))


class SweepRunner:
    """
    Runs sweep points in a thread pool and merges results in parameter order.

    Attributes:
        workers (int): Worker threads
        handlers (Dict[str, Handler]): Registered point handlers
        middlewares (List[Tuple[Type[BaseMiddleware], Dict[str, Any]]]): Middleware classes, outermost first
        timings (Dict[str, float]): Seconds per point label of the last run
        failures (Dict[str, str]): Error messages per point label of the last run
    """

    def __init__(self, workers: int = 1):
        """
        Initialize the runner.

        Args:
            workers (int): Worker threads
        """
        if workers < 1:
            raise InvalidParameterError("workers must be positive")
        self.workers = workers
        self.handlers: Dict[str, Handler] = {}
        self.middlewares: List[Tuple[Type[BaseMiddleware], Dict[str, Any]]] = []
        self.timings: Dict[str, float] = {}
        self.failures: Dict[str, str] = {}

    def register_handler(self, kind: str, handler: Handler) -> None:
        """
        Register the handler computing one kind of sweep point.

        Args:
            kind (str): Point kind
            handler (Handler): Synchronous function point -> SweepRecord
        """
        self.handlers[kind] = handler

    def register_middleware(self, middleware: Type[BaseMiddleware], **options: Any) -> None:
        """
        Register a middleware class; the first registered is the outermost.

        Args:
            middleware (Type[BaseMiddleware]): The middleware class
            **options: Extra constructor arguments
        """
        self.middlewares.append((middleware, options))

    def _build_chain(self, innermost) -> Tuple[BaseMiddleware, List[BaseMiddleware]]:
        chain: BaseMiddleware = BaseMiddleware(innermost)
        instances = []
        for middleware, options in reversed(self.middlewares):
            chain = middleware(chain, **options)
            instances.append(chain)
        return chain, instances

    async def run(self, points: Sequence[SweepPoint]) -> List[SweepRecord]:
        """
        Process every point and return the records sorted by key.

        Args:
            points (Sequence[SweepPoint]): The sweep

        Returns:
            List[SweepRecord]: One record per point, in parameter order

        Raises:
            InvalidParameterError: If a point has no registered handler
        """
        missing = {p.kind for p in points} - set(self.handlers)
        if missing:
            raise InvalidParameterError(f"no handler registered for {sorted(missing)}")

        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="qglab-sweep") as executor:

            async def execute(point: SweepPoint) -> SweepRecord:
                return await loop.run_in_executor(executor, functools.partial(self.handlers[point.kind], point))

            chain, instances = self._build_chain(execute)
            records = await asyncio.gather(*(chain.process_point(p) for p in points), return_exceptions=True)

        self.timings, self.failures = {}, {}
        for instance in instances:
            self.timings.update(getattr(instance, "timings", {}))
            self.failures.update(getattr(instance, "failures", {}))
        for result in records:
            if isinstance(result, BaseException):
                raise result
        logger.info("Sweep of %d points finished with %d workers", len(points), self.workers)
        return sorted(records, key=lambda r: r.key)


def default_runner(workers: int = 1, middlewares: Optional[Sequence[Type[BaseMiddleware]]] = None) -> SweepRunner:
    """
    A runner with logging, timing and error handling middlewares.

    Args:
        workers (int): Worker threads
        middlewares (Optional[Sequence[Type[BaseMiddleware]]]): Override the middleware stack
    """
    runner = SweepRunner(workers)
    for middleware in middlewares or (ErrorHandlingMiddleware, LoggingMiddleware, TimingMiddleware):
        runner.register_middleware(middleware)
    return runner
