"""
Records shared across qglab: diagnostics, sweep results and reports.
"""
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class AssumptionReport(BaseModel):
    """
    Sampled diagnostics for a shifted potential V + M.

    Attributes:
        m_shift (float): The shift M
        c1_estimate (float): Largest ratio (V(y)+M)/(V(x)+M) over sampled |x-y| <= 1
        modulus_samples (List[Tuple[float, float]]): (delta, sampled modulus of (V+M)^-1)
        bounded_below_ok (bool): Whether every sample respects the certified lower bound
        sampled_minimum (float): Smallest sampled value of V
        region (List[Tuple[float, float]]): The sampled box, one interval per axis
    """

    model_config = ConfigDict(frozen=True)

    m_shift: float
    c1_estimate: float = Field(ge=1.0)
    modulus_samples: List[Tuple[float, float]]
    bounded_below_ok: bool
    sampled_minimum: float
    region: List[Tuple[float, float]]


class InequalityCheck(BaseModel):
    """
    A measured quantity and the bound it should respect.

    Attributes:
        name (str): What was measured
        lhs (float): Measured value
        bound (float): Reference bound
        passed (bool): lhs <= bound (within the configured noise band)
    """

    name: str
    lhs: float
    bound: float
    passed: bool


class SlopeFit(BaseModel):
    """
    Log-log least-squares fit of an error against ell.

    Attributes:
        name (str): Measured series
        slope (Optional[float]): Fitted slope, None when too few points
        stderr (Optional[float]): Standard error of the slope
        ci_low (Optional[float]): Lower end of the 95% confidence interval
        ci_high (Optional[float]): Upper end of the 95% confidence interval
        constant (Optional[float]): Fitted prefactor C in error ~ C ell**slope
        points (int): Number of fitted points
        threshold (Optional[float]): Slope the fit must reach
        passed (Optional[bool]): Whether the threshold was met, None when unavailable
        x (List[float]): Fitted ell values
        y (List[float]): Fitted measurements
    """

    name: str
    slope: Optional[float] = None
    stderr: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    constant: Optional[float] = None
    points: int = 0
    threshold: Optional[float] = None
    passed: Optional[bool] = None
    x: List[float] = Field(default_factory=list)
    y: List[float] = Field(default_factory=list)


class SweepRecord(BaseModel):
    """
    Measurements at one sweep point.

    Attributes:
        key (Tuple[float, ...]): Sort key (sweep parameters in order)
        ell (float): Lattice spacing
        radius (float): Dirichlet box half-width
        z (Tuple[float, float]): Spectral parameter as (real, imag)
        measures (Dict[str, float]): Named scalar results
        checks (List[InequalityCheck]): Inequality checks at this point
        spectra (Dict[str, List[float]]): Named eigenvalue lists
        artifacts (Dict[str, str]): Serialized offending probes and similar payloads
    """

    key: Tuple[float, ...]
    ell: float
    radius: float
    z: Tuple[float, float] = (0.0, 0.0)
    measures: Dict[str, float] = Field(default_factory=dict)
    checks: List[InequalityCheck] = Field(default_factory=list)
    spectra: Dict[str, List[float]] = Field(default_factory=dict)
    artifacts: Dict[str, str] = Field(default_factory=dict)


class Provenance(BaseModel):
    """
    Where a report came from.

    Attributes:
        config_hash (str): SHA-256 of the canonical configuration
        versions (Dict[str, str]): Package versions
        started (datetime): UTC start time
        finished (Optional[datetime]): UTC finish time
        timings (Dict[str, float]): Seconds spent per sweep point
    """

    config_hash: str
    versions: Dict[str, str] = Field(default_factory=dict)
    started: datetime
    finished: Optional[datetime] = None
    timings: Dict[str, float] = Field(default_factory=dict)


class ExperimentReport(BaseModel):
    """
    Result of one CLI command.

    Attributes:
        command (str): Subcommand name
        config (Dict[str, Any]): The validated configuration
        records (List[SweepRecord]): Per-point measurements, sorted by key
        fits (List[SlopeFit]): Convergence fits
        criteria (Dict[str, bool]): Pass/fail per acceptance criterion
        notes (List[str]): Warnings attached to the run
        assumptions (Optional[AssumptionReport]): Sampled diagnostics of the potential
        provenance (Provenance): Run metadata
    """

    command: str
    config: Dict[str, Any]
    records: List[SweepRecord] = Field(default_factory=list)
    fits: List[SlopeFit] = Field(default_factory=list)
    criteria: Dict[str, bool] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    assumptions: Optional[AssumptionReport] = None
    provenance: Provenance

    @field_validator("records")
    @classmethod
    def sort_records(cls, v: List[SweepRecord]) -> List[SweepRecord]:
        """Keep records in parameter order."""
        return sorted(v, key=lambda r: r.key)

    @property
    def passed(self) -> bool:
        """Whether every acceptance criterion holds."""
        return all(self.criteria.values())
