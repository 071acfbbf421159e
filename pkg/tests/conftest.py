import pytest
from datetime import datetime, timezone

import numpy as np

from qglab.config import ExperimentConfig, ProbeSpec
from qglab.lattice import build_lattice
from qglab.potentials import make_potential, zero_potential
from qglab.storage import FileStorage
from qglab.types import ExperimentReport, InequalityCheck, Provenance, SlopeFit, SweepRecord


@pytest.fixture
def rng():
    """A seeded generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def line():
    """The 1D lattice of spacing 0.1 on [-1, 1]."""
    return build_lattice(1, 0.1, 1.0)


@pytest.fixture
def square():
    """A small 2D lattice of spacing 0.25 on [-1, 1]**2."""
    return build_lattice(2, 0.25, 1.0)


@pytest.fixture
def harmonic():
    """V(x) = |x|**2."""
    return make_potential("harmonic")


@pytest.fixture
def zero():
    """V = 0."""
    return zero_potential()


@pytest.fixture
def small_probes():
    """Probe counts small enough for unit tests."""
    return ProbeSpec(random=3, bubbles=2, mixtures=2, adjoint_pairs=3, resolvent_probes=2, radius=0.5)


@pytest.fixture
def small_config(tmp_path, small_probes):
    """A two-point 1D sweep writing into a temporary directory."""
    return ExperimentConfig(
        nu=1,
        ell_list=[0.2, 0.1],
        radius=1.0,
        window=(0.5, 8.0),
        probes=small_probes,
        out_dir=str(tmp_path),
    )


@pytest.fixture
def storage(tmp_path):
    """File storage in a temporary directory."""
    return FileStorage(str(tmp_path), prefix="test")


@pytest.fixture
def sample_report():
    """A small report with one record, one fit and one criterion."""
    record = SweepRecord(
        key=(-0.1, 1.0, 0.0, 1.0),
        ell=0.1,
        radius=1.0,
        z=(0.0, 1.0),
        measures={"resolvent_difference_K": 0.0125},
        checks=[InequalityCheck(name="vertex_condition", lhs=1e-12, bound=1e-8, passed=True)],
        spectra={"nuH1": [1.0, 3.0]},
    )
    fit = SlopeFit(
        name="resolvent_difference_K",
        slope=1.02,
        stderr=0.01,
        ci_low=0.99,
        ci_high=1.05,
        constant=0.13,
        points=4,
        threshold=0.9,
        passed=True,
        x=[0.2, 0.1, 0.05, 0.025],
        y=[0.026, 0.0125, 0.0063, 0.0031],
    )
    return ExperimentReport(
        command="resolvent-compare",
        config={"nu": 1, "seed": 0},
        records=[record],
        fits=[fit],
        criteria={"vertex_condition": True, "slope:resolvent_difference_K": True},
        provenance=Provenance(
            config_hash="0" * 64,
            versions={"qglab": "0.1.0"},
            started=datetime(2026, 1, 1, tzinfo=timezone.utc),
        ),
    )
