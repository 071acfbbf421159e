"""
Storage backends for experiment reports, tables and figures.
"""
import logging
import os
from typing import Optional

import aiofiles
import pandas as pd
import ujson
from pydantic import ValidationError

from .errors import ReportIOError
from .types import ExperimentReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


class BaseStorage:
    """
    Base class for storage backends.

    Attributes:
        prefix (str): Name prefix of every stored artifact
    """

    def __init__(self, prefix: str = "qglab"):
        """
        Initialize the storage.

        Args:
            prefix (str): Name prefix
        """
        self.prefix = prefix

    def _get_key(self, *parts: str) -> str:
        """
        Get a storage key.

        Args:
            *parts: Key parts

        Returns:
            str: Full key
        """
        return "-".join((self.prefix,) + parts)

    async def save_report(self, report: ExperimentReport) -> str:
        """
        Store a report under its command name.

        Args:
            report (ExperimentReport): The report

        Returns:
            str: Where the report was stored
        """
        raise NotImplementedError

    async def load_report(self, location: str) -> ExperimentReport:
        """
        Load a stored report.

        Args:
            location (str): Where the report was stored

        Returns:
            ExperimentReport: The report
        """
        raise NotImplementedError

    async def save_table(self, name: str, frame: pd.DataFrame, config_hash: Optional[str] = None) -> str:
        """
        Store a table.

        Args:
            name (str): Table name
            frame (pd.DataFrame): The table
            config_hash (Optional[str]): Provenance column value

        Returns:
            str: Where the table was stored
        """
        raise NotImplementedError

    async def save_text(self, name: str, text: str) -> str:
        """
        Store a text artifact such as a summary or an SVG figure.

        Args:
            name (str): Artifact name including its extension
            text (str): Content

        Returns:
            str: Where the artifact was stored
        """
        raise NotImplementedError


def render_table(frame: pd.DataFrame, config_hash: Optional[str] = None) -> str:
    """
    CSV text of a table: UTF-8, header row, '.' decimals, %.12e floats.

    A config_hash column is appended when a hash is given.
    """
    if config_hash is not None:
        frame = frame.assign(config_hash=config_hash)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def render_report(report: ExperimentReport) -> str:
    """Canonical JSON text of a report."""
    return ujson.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2, escape_forward_slashes=False) + "\n"


class FileStorage(BaseStorage):
    """
    Storage in an output directory.

    Attributes:
        out_dir (str): Output directory, created on first write
    """

    def __init__(self, out_dir: str = "qglab-out", prefix: str = "qglab"):
        """
        Initialize file storage.

        Args:
            out_dir (str): Output directory
            prefix (str): File name prefix
        """
        super().__init__(prefix)
        self.out_dir = out_dir

    def path_for(self, *parts: str, suffix: str = "") -> str:
        """Path of an artifact inside the output directory."""
        return os.path.join(self.out_dir, self._get_key(*parts) + suffix)

    async def _write(self, path: str, text: str) -> str:
        try:
            os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
            async with aiofiles.open(path, "w", encoding="utf-8", newline="\n") as f:
                await f.write(text)
        except OSError as e:
            logger.error("Cannot write %s: %s", path, e)
            raise ReportIOError(path, str(e)) from e
        logger.info("Wrote %s", path)
        return path

    async def save_report(self, report: ExperimentReport) -> str:
        """
        Write <prefix>-<command>.json.

        Raises:
            ReportIOError: If the file cannot be written
        """
        return await self._write(self.path_for(report.command, suffix=".json"), render_report(report))

    async def load_report(self, location: str) -> ExperimentReport:
        """
        Read a report file.

        Raises:
            ReportIOError: If the file is missing, unreadable or not a report
        """
        try:
            async with aiofiles.open(location, "r", encoding="utf-8") as f:
                text = await f.read()
        except OSError as e:
            raise ReportIOError(location, str(e)) from e
        try:
            return ExperimentReport.model_validate(ujson.loads(text))
        except (ValueError, ValidationError) as e:
            raise ReportIOError(location, f"not a valid report: {e}") from e

    async def save_table(self, name: str, frame: pd.DataFrame, config_hash: Optional[str] = None) -> str:
        """
        Write <prefix>-<name>.csv.

        Raises:
            ReportIOError: If the file cannot be written
        """
        return await self._write(self.path_for(name, suffix=".csv"), render_table(frame, config_hash))

    async def save_text(self, name: str, text: str) -> str:
        """
        Write <prefix>-<name>.

        Raises:
            ReportIOError: If the file cannot be written
        """
        return await self._write(self.path_for(name), text)
