"""
Random probe functions in the graph space.

All probes are continuous sampled functions with exact derivative samples,
so they lie in H1 of the graph and every quantity measured on them is the
quantity of their cubic Hermite interpolant.
"""
import logging
from typing import Iterator, Sequence, Tuple

import numpy as np

from .lattice import LatticeGraph
from .spaces import GraphFunction, VertexFunction

logger = logging.getLogger(__name__)

SMOOTH_WAVES = 4
SUITES = ("random", "bubbles", "mixtures")


def _grid(g: LatticeGraph, m: int) -> np.ndarray:
    return np.linspace(0.0, g.ell, m + 1)


def _complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)


def random_vertex_function(g: LatticeGraph, rng: np.random.Generator) -> VertexFunction:
    """Complex Gaussian vertex data."""
    return VertexFunction(g, _complex_normal(rng, g.num_vertices))


def bubble_probe(g: LatticeGraph, amplitudes, modes, m: int) -> GraphFunction:
    """
    Edgewise sine bubbles a_e sin(n_e pi t / ell), zero at every vertex.

    Args:
        g (LatticeGraph): The lattice
        amplitudes: One amplitude per edge (or a scalar)
        modes: One positive mode number per edge (or a scalar)
        m (int): Sampling sub-intervals per edge
    """
    t = _grid(g, m)
    k = np.broadcast_to(np.asarray(modes, dtype=float), (g.num_edges,))[:, None] * np.pi / g.ell
    amp = np.broadcast_to(np.asarray(amplitudes, dtype=complex), (g.num_edges,))[:, None]
    return GraphFunction.sampled(g, amp * np.sin(k * t), amp * k * np.cos(k * t))


def smooth_probe(g: LatticeGraph, rng: np.random.Generator, m: int, waves: int = SMOOTH_WAVES) -> GraphFunction:
    """
    Restriction of a random field sum c_w exp(i kappa_w . x) to the edges.

    Wave numbers are log-uniform between 1 and 1/ell, so the probes mix
    scales that the lattice resolves well and barely at all.
    """
    scale = np.exp(rng.uniform(0.0, np.log(max(1.0 / g.ell, 1.0 + 1e-12)), size=waves))
    kappa = rng.standard_normal((waves, g.nu)) * scale[:, None]
    coef = _complex_normal(rng, waves) / np.sqrt(waves)
    t = _grid(g, m)
    phase = np.exp(1j * g.vertices[g.edges[:, 0]] @ kappa.T)
    along = kappa[:, g.edge_axis].T
    wave = np.exp(1j * along[:, :, None] * t)
    values = np.einsum("w,ew,ewm->em", coef, phase, wave)
    derivatives = np.einsum("w,ew,ewm->em", coef, phase * 1j * along, wave)
    return GraphFunction.sampled(g, values, derivatives)


def mixture_probe(g: LatticeGraph, rng: np.random.Generator, m: int, modes: Sequence[int]) -> GraphFunction:
    """Interpolated random vertex data plus random bubbles."""
    u = _complex_normal(rng, g.num_vertices)
    start, end = u[g.edges[:, 0]], u[g.edges[:, 1]]
    t = _grid(g, m)
    slope = (end - start) / g.ell
    bubbles = bubble_probe(g, _complex_normal(rng, g.num_edges), rng.choice(modes, g.num_edges), m)
    values = start[:, None] + slope[:, None] * t + bubbles.samples
    derivatives = slope[:, None] + bubbles.derivatives
    return GraphFunction.sampled(g, values, derivatives)


def probe_suite(
    g: LatticeGraph,
    rng: np.random.Generator,
    random: int,
    bubbles: int,
    mixtures: int,
    modes: Sequence[int],
    m: int,
) -> Iterator[Tuple[str, int, GraphFunction]]:
    """
    Yield (suite, index, probe) for every probe of a lemma check.

    The first bubble probe has amplitude 1 and mode 1 on every edge; it is
    the probe that nearly saturates the adjoint-versus-trace bound.
    """
    for i in range(random):
        yield "random", i, smooth_probe(g, rng, m)
    for i in range(bubbles):
        if i == 0:
            yield "bubbles", i, bubble_probe(g, 1.0, 1, m)
        else:
            yield "bubbles", i, bubble_probe(g, _complex_normal(rng, g.num_edges), rng.choice(modes, g.num_edges), m)
    for i in range(mixtures):
        yield "mixtures", i, mixture_probe(g, rng, m, modes)
