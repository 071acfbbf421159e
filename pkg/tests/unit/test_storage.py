import os
import pytest

import pandas as pd

from qglab.errors import ReportIOError
from qglab.storage import BaseStorage, FileStorage, render_table


@pytest.mark.asyncio
async def test_report_round_trip(storage, sample_report):
    """Test writing and reading back a report."""
    path = await storage.save_report(sample_report)
    assert os.path.basename(path) == "test-resolvent-compare.json"
    loaded = await storage.load_report(path)
    assert loaded == sample_report


@pytest.mark.asyncio
async def test_save_table(storage):
    """Test the CSV format with a provenance column."""
    frame = pd.DataFrame({"ell": [0.1, 0.05], "value": [1.5, 0.25]})
    path = await storage.save_table("measures", frame, config_hash="abc")
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert lines[0] == "ell,value,config_hash"
    assert lines[1] == "1.000000000000e-01,1.500000000000e+00,abc"


@pytest.mark.asyncio
async def test_save_text_creates_directory(tmp_path):
    storage = FileStorage(str(tmp_path / "nested" / "out"), prefix="run")
    path = await storage.save_text("summary.txt", "ok\n")
    assert path.endswith(os.path.join("out", "run-summary.txt"))
    with open(path, encoding="utf-8") as f:
        assert f.read() == "ok\n"


@pytest.mark.asyncio
async def test_missing_report(storage, tmp_path):
    """Test that a missing file is reported with its path."""
    location = str(tmp_path / "absent.json")
    with pytest.raises(ReportIOError) as info:
        await storage.load_report(location)
    assert info.value.path == location


@pytest.mark.asyncio
@pytest.mark.parametrize("content", ["{broken", '{"command": "lemma-check"}', "[]"])
async def test_corrupt_report(storage, tmp_path, content):
    """Test that malformed reports are rejected."""
    path = tmp_path / "corrupt.json"
    path.write_text(content)
    with pytest.raises(ReportIOError):
        await storage.load_report(str(path))


@pytest.mark.asyncio
async def test_base_storage_is_abstract(sample_report):
    storage = BaseStorage()
    with pytest.raises(NotImplementedError):
        await storage.save_report(sample_report)
    with pytest.raises(NotImplementedError):
        await storage.save_text("x", "")


def test_get_key():
    """Test key construction from the prefix."""
    assert BaseStorage("lab")._get_key("plot1", "lemma-check") == "lab-plot1-lemma-check"


def test_render_table_without_hash():
    assert render_table(pd.DataFrame({"a": [1]})) == "a\n1\n"
