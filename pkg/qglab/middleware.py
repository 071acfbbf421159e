"""
Middleware system for processing sweep points.
"""
import logging
import time
from typing import Any, Awaitable, Callable, Dict, Union

from .errors import QGLabError
from .types import SweepRecord

logger = logging.getLogger(__name__)

PointHandler = Callable[[Any], Awaitable[SweepRecord]]


class BaseMiddleware:
    """
    Base class for all middlewares.

    Attributes:
        handler (Callable): The next handler in the chain
    """

    def __init__(self, handler: Union[PointHandler, "BaseMiddleware"]):
        """
        Initialize the middleware.

        Args:
            handler (Callable): The next handler, or another middleware
        """
        self.handler = handler

    async def process_point(self, point) -> SweepRecord:
        """
        Process a sweep point.

        Args:
            point (SweepPoint): The point to process

        Returns:
            SweepRecord: The measurements
        """
        if isinstance(self.handler, BaseMiddleware):
            return await self.handler.process_point(point)
        return await self.handler(point)


class LoggingMiddleware(BaseMiddleware):
    """Middleware for logging sweep points."""

    async def process_point(self, point) -> SweepRecord:
        """
        Log the point before and after processing.

        Args:
            point (SweepPoint): The point to process
        """
        logger.info("Starting %s", point.label)
        record = await super().process_point(point)
        logger.info("Finished %s", point.label)
        return record


class TimingMiddleware(BaseMiddleware):
    """
    Middleware for timing sweep points.

    Attributes:
        timings (Dict[str, float]): Wall-clock seconds per point label
    """

    def __init__(self, handler: Union[PointHandler, BaseMiddleware]):
        """
        Initialize the timing middleware.

        Args:
            handler (Callable): The next handler
        """
        super().__init__(handler)
        self.timings: Dict[str, float] = {}

    async def process_point(self, point) -> SweepRecord:
        """
        Process a point and record its duration.

        Args:
            point (SweepPoint): The point to process
        """
        start = time.perf_counter()
        try:
            return await super().process_point(point)
        finally:
            self.timings[point.label] = time.perf_counter() - start


class ErrorHandlingMiddleware(BaseMiddleware):
    """
    Middleware for reporting failures with the point that caused them.

    Attributes:
        failures (Dict[str, str]): Error messages per point label
    """

    def __init__(self, handler: Union[PointHandler, BaseMiddleware]):
        """
        Initialize the error handling middleware.

        Args:
            handler (Callable): The next handler
        """
        super().__init__(handler)
        self.failures: Dict[str, str] = {}

    async def process_point(self, point) -> SweepRecord:
        """
        Process a point, logging failures before they propagate.

        Args:
            point (SweepPoint): The point to process

        Raises:
            QGLabError: Re-raised after logging
        """
        try:
            return await super().process_point(point)
        except QGLabError as e:
            self.failures[point.label] = str(e)
            logger.error("Error processing %s: %s", point.label, e)
            raise
        except Exception as e:
            self.failures[point.label] = f"{type(e).__name__}: {e}"
            logger.exception("Unexpected error processing %s", point.label)
            raise
