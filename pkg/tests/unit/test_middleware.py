import logging
import pytest

from qglab.middleware import BaseMiddleware, ErrorHandlingMiddleware, LoggingMiddleware, TimingMiddleware
from qglab.sweep import SweepPoint
from qglab.types import SweepRecord


class RecordingMiddleware(BaseMiddleware):
    """Appends its name to a shared list on the way in."""

    def __init__(self, handler, name, calls):
        super().__init__(handler)
        self.name = name
        self.calls = calls

    async def process_point(self, point):
        self.calls.append(self.name)
        return await super().process_point(point)


@pytest.fixture
def point():
    return SweepPoint("measure", 0, 0.1, 1.0)


async def _handler(point):
    return SweepRecord(key=point.key, ell=point.ell, radius=point.radius)


@pytest.mark.asyncio
async def test_base_middleware_forwards(point):
    """Test that the base middleware calls the wrapped handler."""
    record = await BaseMiddleware(_handler).process_point(point)
    assert record.ell == 0.1


@pytest.mark.asyncio
async def test_chain_order(point):
    """Test that the outermost middleware runs first."""
    calls = []
    inner = RecordingMiddleware(_handler, "inner", calls)
    outer = RecordingMiddleware(inner, "outer", calls)
    await outer.process_point(point)
    assert calls == ["outer", "inner"]


@pytest.mark.asyncio
async def test_logging_middleware(point, caplog):
    with caplog.at_level(logging.INFO, logger="qglab.middleware"):
        await LoggingMiddleware(_handler).process_point(point)
    assert "Starting measure[ell=0.1, R=1]" in caplog.text
    assert "Finished measure[ell=0.1, R=1]" in caplog.text


@pytest.mark.asyncio
async def test_timing_middleware_records_failures(point):
    """Test that failed points are timed as well."""

    async def failing(point):
        raise RuntimeError("boom")

    middleware = TimingMiddleware(failing)
    with pytest.raises(RuntimeError):
        await middleware.process_point(point)
    assert point.label in middleware.timings


@pytest.mark.asyncio
async def test_error_middleware_records_unexpected_errors(point):
    async def failing(point):
        raise ZeroDivisionError("division by zero")

    middleware = ErrorHandlingMiddleware(failing)
    with pytest.raises(ZeroDivisionError):
        await middleware.process_point(point)
    assert middleware.failures == {point.label: "ZeroDivisionError: division by zero"}
