import logging
import pytest

import numpy as np

from qglab.errors import InvalidParameterError, ResolventSingularError
from qglab.middleware import ErrorHandlingMiddleware, TimingMiddleware
from qglab.sweep import SweepPoint, SweepRunner, default_runner
from qglab.types import SweepRecord


def _measure(point):
    return SweepRecord(
        key=point.key,
        ell=point.ell,
        radius=point.radius,
        z=(point.z.real, point.z.imag),
        measures={"draw": float(point.rng().standard_normal())},
    )


def _points(kind="measure"):
    return [SweepPoint(kind, i, ell, 1.0, 1j, seed=3) for i, ell in enumerate((0.05, 0.2, 0.1))]


def test_point_key_and_label():
    """Test ordering keys and readable labels."""
    point = SweepPoint("resolvent", 0, 0.1, 2.0, 1 - 2j)
    assert point.key == (-0.1, 2.0, 1.0, -2.0)
    assert point.label == "resolvent[ell=0.1, R=2, z=1-2j]"
    assert SweepPoint("spectrum", 0, 0.1, 2.0).label == "spectrum[ell=0.1, R=2]"


def test_point_rng_is_reproducible():
    a = SweepPoint("m", 4, 0.1, 1.0, seed=9).rng().standard_normal(3)
    b = SweepPoint("m", 4, 0.2, 2.0, seed=9).rng().standard_normal(3)
    c = SweepPoint("m", 5, 0.1, 1.0, seed=9).rng().standard_normal(3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.asyncio
@pytest.mark.parametrize("workers", [1, 2])
async def test_records_are_sorted(workers):
    """Test that records come back coarse ell first whatever the worker count."""
    runner = default_runner(workers)
    runner.register_handler("measure", _measure)
    records = await runner.run(_points())
    assert [r.ell for r in records] == [0.2, 0.1, 0.05]
    assert set(runner.timings) == {p.label for p in _points()}
    assert runner.failures == {}


@pytest.mark.asyncio
async def test_results_do_not_depend_on_workers():
    """Test that the per-point generators make runs reproducible."""
    draws = []
    for workers in (1, 3):
        runner = default_runner(workers)
        runner.register_handler("measure", _measure)
        draws.append([r.measures["draw"] for r in await runner.run(_points())])
    assert draws[0] == draws[1]


@pytest.mark.asyncio
async def test_missing_handler():
    runner = SweepRunner()
    with pytest.raises(InvalidParameterError):
        await runner.run(_points("unknown"))


def test_invalid_workers():
    with pytest.raises(InvalidParameterError):
        SweepRunner(0)


@pytest.mark.asyncio
async def test_failures_are_recorded(caplog):
    """Test that a failing point is logged, recorded and re-raised."""

    def handler(point):
        if point.ell == 0.05:
            raise ResolventSingularError("vertex system is singular")
        return _measure(point)

    runner = default_runner()
    runner.register_handler("measure", handler)
    with caplog.at_level(logging.ERROR, logger="qglab.middleware"):
        with pytest.raises(ResolventSingularError):
            await runner.run(_points())
    assert runner.failures == {"measure[ell=0.05, R=1, z=0+1j]": "vertex system is singular"}
    assert "measure[ell=0.05, R=1, z=0+1j]" in caplog.text


@pytest.mark.asyncio
async def test_custom_middleware_stack():
    runner = default_runner(middlewares=[TimingMiddleware])
    runner.register_handler("measure", _measure)
    await runner.run(_points())
    assert len(runner.timings) == 3
    assert [m for m, _ in runner.middlewares] == [TimingMiddleware]
    assert ErrorHandlingMiddleware not in [m for m, _ in runner.middlewares]
