"""
qglab - A numerical laboratory for the continuum limit of quantum graph Hamiltonians on lattices.
"""

__version__ = "0.1.0"
__author__ = "qglab Team"

from .config import ExperimentConfig, load_config
from .continuum import ContinuumGrid, continuum_eigenvalues
from .discrete import assemble_h2, assemble_laplacian, laplacian_resolvent_check
from .errors import QGLabError
from .experiments import cmd_lemma_check, cmd_report, cmd_resolvent_compare, cmd_spectrum_converge
from .lattice import LatticeGraph, build_lattice
from .potentials import Potential, make_potential
from .quantum_graph import GraphResolvent, resolvent_params, secular_eigenvalues
from .spaces import GraphFunction, VertexFunction, adjoint_Istar, embed_I, trace_K
from .spectral import SpectrumSlice, eigenpairs
from .storage import BaseStorage, FileStorage
from .types import ExperimentReport

__all__ = [
    "ExperimentConfig",
    "load_config",
    "ContinuumGrid",
    "continuum_eigenvalues",
    "assemble_h2",
    "assemble_laplacian",
    "laplacian_resolvent_check",
    "QGLabError",
    "cmd_lemma_check",
    "cmd_report",
    "cmd_resolvent_compare",
    "cmd_spectrum_converge",
    "LatticeGraph",
    "build_lattice",
    "Potential",
    "make_potential",
    "GraphResolvent",
    "resolvent_params",
    "secular_eigenvalues",
    "GraphFunction",
    "VertexFunction",
    "adjoint_Istar",
    "embed_I",
    "trace_K",
    "SpectrumSlice",
    "eigenpairs",
    "BaseStorage",
    "FileStorage",
    "ExperimentReport",
]
