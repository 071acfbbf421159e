"""
Experiment configuration.

Values are resolved from model defaults, then a JSON config file, then
QGLAB_* environment variables (a .env file is honoured), then CLI flags.
"""
import hashlib
import logging
import math
import os
from typing import Any, Dict, List, Mapping, Optional, Tuple

import ujson
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import InvalidParameterError
from .potentials import Potential, make_potential

logger = logging.getLogger(__name__)

ENV_PREFIX = "QGLAB_"


class PotentialSpec(BaseModel):
    """
    A registered potential by label.

    Attributes:
        label (str): Registry key
        params (Dict[str, float]): Potential parameters
    """

    model_config = ConfigDict(extra="forbid")

    label: str = "harmonic"
    params: Dict[str, float] = Field(default_factory=dict)

    def build(self) -> Potential:
        """Instantiate the potential."""
        return make_potential(self.label, **self.params)


class ProbeSpec(BaseModel):
    """
    Probe suites of the lemma checks and resolvent comparisons.

    Attributes:
        random (int): Restrictions of random smooth fields per ell
        bubbles (int): Probes vanishing at every vertex
        mixtures (int): Interpolated random vertex data plus bubbles
        bubble_modes (List[int]): Sine modes used by bubble probes
        samples_per_edge (int): Sampling sub-intervals of sampled probes
        radius (float): Vertex radius of the lattice used by the lemma checks
        adjoint_pairs (int): Random pairs of the adjointness check
        resolvent_probes (int): Probes of the graph-space resolvent comparison
        resolvent_max_vertices (int): Vertex budget of the box for the Laplacian-resolvent norms
    """

    model_config = ConfigDict(extra="forbid")

    random: int = Field(100, ge=0)
    bubbles: int = Field(50, ge=1)
    mixtures: int = Field(50, ge=0)
    bubble_modes: List[int] = Field(default_factory=lambda: [1, 2, 3])
    samples_per_edge: int = Field(8, ge=2)
    radius: float = Field(0.5, gt=0)
    adjoint_pairs: int = Field(100, ge=1)
    resolvent_probes: int = Field(8, ge=1)
    resolvent_max_vertices: int = Field(20_000, ge=3)


class ToleranceSpec(BaseModel):
    """
    Numerical tolerances and acceptance thresholds.

    Attributes:
        power_tol (float): Relative stagnation tolerance of power iteration
        power_max_iter (int): Power iteration budget
        secular_tol (float): Fixed-point tolerance of the secular solver
        richardson_tol (Optional[float]): Largest accepted continuum error estimate
        slope_threshold (float): Slope every rate fit must reach
        slope_max_stderr (float): Largest accepted slope standard error
        noise_band (float): Allowed increase of sequences asserted to decrease
        adjoint_tol (float): Normalized adjointness defect bound
        band_factor (float): Allowed growth of ||Delta_d R|| ell over the sweep
    """

    model_config = ConfigDict(extra="forbid")

    power_tol: float = Field(1e-6, gt=0)
    power_max_iter: int = Field(500, ge=1)
    secular_tol: float = Field(1e-12, gt=0)
    richardson_tol: Optional[float] = Field(None, gt=0)
    slope_threshold: float = 0.9
    slope_max_stderr: float = Field(0.1, gt=0)
    noise_band: float = Field(1e-4, ge=0)
    adjoint_tol: float = Field(1e-10, gt=0)
    band_factor: float = Field(2.0, ge=1)


class ExperimentConfig(BaseModel):
    """
    Configuration of one experiment run.

    Attributes:
        nu (int): Dimension
        potential (PotentialSpec): The potential
        m_shift (float): Shift M for inverse-shifted spectra
        z (List[complex]): Spectral parameters
        ell_list (List[float]): Strictly decreasing lattice spacings
        radius (float): Half-width of the Dirichlet box
        radius_list (Optional[List[float]]): Box half-widths of a truncation sweep
        fine_h (Optional[float]): Continuum mesh width (derived when unset)
        window (Tuple[float, float]): Spectral window
        seed (int): Random seed
        out_dir (str): Output directory
        prefix (str): File name prefix
        workers (int): Worker threads of the sweep runner
        probes (ProbeSpec): Probe suites
        tolerances (ToleranceSpec): Tolerances
    """

    model_config = ConfigDict(extra="forbid")

    nu: int = Field(1, ge=1, le=2)
    potential: PotentialSpec = Field(default_factory=PotentialSpec)
    m_shift: float = 1.0
    z: List[complex] = Field(default_factory=lambda: [1j])
    ell_list: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    radius: float = Field(6.0, gt=0)
    radius_list: Optional[List[float]] = None
    fine_h: Optional[float] = Field(None, gt=0)
    window: Tuple[float, float] = (0.0, 8.0)
    seed: int = 0
    out_dir: str = "qglab-out"
    prefix: str = "qglab"
    workers: int = Field(1, ge=1)
    probes: ProbeSpec = Field(default_factory=ProbeSpec)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)

    @field_validator("ell_list")
    @classmethod
    def check_ell_list(cls, v: List[float]) -> List[float]:
        """Require a non-empty, positive, strictly decreasing list."""
        if not v:
            raise ValueError("ell_list must not be empty")
        if any(x <= 0 for x in v):
            raise ValueError("every ell must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("ell_list must be strictly decreasing")
        return v

    @field_validator("window")
    @classmethod
    def check_window(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        """Require a < b."""
        if not v[0] < v[1]:
            raise ValueError("window must satisfy a < b")
        return v

    @model_validator(mode="after")
    def check_geometry(self) -> "ExperimentConfig":
        """Every ell must fit inside the box, and h must resolve the finest ell."""
        for radius in self.radii:
            if self.ell_list[0] > radius + 1e-12:
                raise ValueError(f"ell = {self.ell_list[0]:g} exceeds the box half-width {radius:g}")
        if self.fine_h is None:
            self.fine_h = default_fine_h(self.radius, min(self.ell_list))
        if self.fine_h > min(self.ell_list) / 4 + 1e-15:
            raise ValueError(f"fine_h = {self.fine_h:g} must be at most min(ell)/4 = {min(self.ell_list) / 4:g}")
        return self

    @property
    def radii(self) -> List[float]:
        """Box half-widths to sweep."""
        return list(self.radius_list) if self.radius_list else [self.radius]

    def lattice_radius(self, ell: float, radius: Optional[float] = None) -> float:
        """
        Vertex radius for a Dirichlet box: the exterior layer sits on the box boundary.

        Boxes narrower than 2 ell keep the smallest lattice of radius ell, whose
        exterior layer lies at 2 ell.
        """
        return max((self.radius if radius is None else radius) - ell, ell)

    def build_potential(self) -> Potential:
        """Instantiate the configured potential."""
        return self.potential.build()


def default_fine_h(radius: float, ell_min: float) -> float:
    """Largest mesh width <= ell_min/4 that divides the box width 2 radius."""
    cells = math.ceil(2 * radius / (ell_min / 4) - 1e-9)
    return 2 * radius / cells


def parse_potential(text: str) -> Dict[str, Any]:
    """
    Parse `label` or `label:key=value,key=value`.

    Returns:
        Dict[str, Any]: A PotentialSpec payload
    """
    label, _, rest = text.partition(":")
    params: Dict[str, float] = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidParameterError(f"malformed potential parameter {item!r}")
        params[key.strip()] = float(value)
    return {"label": label.strip(), "params": params}


def _parse_env_value(raw: str) -> Any:
    try:
        return ujson.loads(raw)
    except ValueError:
        if "," in raw:
            return [part.strip() for part in raw.split(",")]
        return raw


def _env_overrides(environ: Mapping[str, str]) -> Dict[str, Any]:
    data: Dict[str, Any] = {}
    for name in ExperimentConfig.model_fields:
        key = ENV_PREFIX + name.upper()
        if key not in environ:
            continue
        raw = environ[key]
        if name == "potential" and not raw.lstrip().startswith("{"):
            data[name] = parse_potential(raw)
        else:
            data[name] = _parse_env_value(raw)
    return data


def _merge(base: Dict[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
    dotenv: bool = True,
) -> ExperimentConfig:
    """
    Resolve and validate a configuration.

    Args:
        path (Optional[str]): JSON config file
        overrides (Optional[Mapping[str, Any]]): Values from CLI flags (None entries are ignored)
        environ (Optional[Mapping[str, str]]): Environment, os.environ by default
        dotenv (bool): Load a .env file into the environment first

    Returns:
        ExperimentConfig: The validated configuration

    Raises:
        InvalidParameterError: If the file cannot be read or a value is invalid
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = ujson.load(f)
        except (OSError, ValueError) as e:
            raise InvalidParameterError(f"cannot read config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise InvalidParameterError(f"config file {path} must contain an object")
    if environ is None:
        if dotenv:
            load_dotenv(override=False)
        environ = os.environ
    data = _merge(data, _env_overrides(environ))
    data = _merge(data, {k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "config"
        raise InvalidParameterError(f"{location}: {first['msg']}") from e
    logger.debug("Loaded config %s", config_hash(config)[:12])
    return config


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON dump of a configuration."""
    payload = ujson.dumps(config.model_dump(mode="json"), sort_keys=True, escape_forward_slashes=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
