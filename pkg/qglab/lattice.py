"""
Truncated square lattice graphs.
"""
import itertools
import logging
from typing import List, Tuple

import numpy as np

from .errors import InvalidParameterError

logger = logging.getLogger(__name__)

SNAP_TOLERANCE = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class LatticeGraph:
    """
    The square lattice graph of spacing ell in dimension nu, truncated to the
    closed box [-radius, radius]**nu.

    Vertices are ordered lexicographically on their integer coordinates j/ell.
    Every edge is stored once, oriented from its lexicographically smaller
    endpoint, which is also the endpoint with the smaller vertex index.

    Attributes:
        nu (int): Dimension
        ell (float): Lattice spacing
        radius (float): Truncation half-width
        half_width (int): Largest integer coordinate K, so coordinates run over -K..K
        coords (np.ndarray): Integer coordinates, shape (N, nu)
        vertices (np.ndarray): Vertex positions, shape (N, nu)
        edges (np.ndarray): Vertex index pairs (j, n) with j < n, shape (E, 2)
        edge_axis (np.ndarray): Coordinate direction of each edge, shape (E,)
        degree (np.ndarray): Number of in-box neighbours per vertex
        missing (np.ndarray): Number of truncated couplings per vertex (2 nu - degree)
    """

    def __init__(self, nu: int, ell: float, radius: float):
        """
        Initialize the graph; prefer build_lattice, which validates parameters.

        Args:
            nu (int): Dimension
            ell (float): Lattice spacing
            radius (float): Truncation half-width
        """
        self.nu = int(nu)
        self.ell = float(ell)
        self.radius = float(radius)
        self.half_width = int(np.floor((self.radius + SNAP_TOLERANCE) / self.ell))

        side = 2 * self.half_width + 1
        axis = range(-self.half_width, self.half_width + 1)
        coords = np.array(list(itertools.product(axis, repeat=self.nu)), dtype=np.int64)
        coords = coords.reshape(side ** self.nu, self.nu)
        self.coords = _frozen(coords)
        self.vertices = _frozen(coords * self.ell)

        strides = side ** np.arange(self.nu - 1, -1, -1)
        index = np.arange(len(coords))
        pairs: List[np.ndarray] = []
        axes: List[np.ndarray] = []
        for d in range(self.nu):
            forward = coords[:, d] < self.half_width
            start = index[forward]
            pairs.append(np.stack([start, start + strides[d]], axis=1))
            axes.append(np.full(len(start), d, dtype=np.int64))
        edges = np.concatenate(pairs) if pairs else np.empty((0, 2), dtype=np.int64)
        edge_axis = np.concatenate(axes) if axes else np.empty(0, dtype=np.int64)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        self.edges = _frozen(edges[order])
        self.edge_axis = _frozen(edge_axis[order])

        degree = np.bincount(self.edges.ravel(), minlength=len(coords))
        self.degree = _frozen(degree)
        self.missing = _frozen(2 * self.nu - degree)
        self._adjacency = None

    @property
    def num_vertices(self) -> int:
        """Number of vertices."""
        return len(self.coords)

    @property
    def num_edges(self) -> int:
        """Number of edges."""
        return len(self.edges)

    @property
    def cell_volume(self) -> float:
        """The weight ell**nu of the vertex space norm."""
        return self.ell ** self.nu

    @property
    def edge_weight(self) -> float:
        """The weight ell**(nu - 1) / nu of the graph space inner product."""
        return self.ell ** (self.nu - 1) / self.nu

    @property
    def adjacency(self) -> List[np.ndarray]:
        """
        Neighbour lists inside the box.

        Returns:
            List[np.ndarray]: Sorted neighbour indices for every vertex
        """
        if self._adjacency is None:
            both = np.concatenate([self.edges, self.edges[:, ::-1]])
            both = both[np.lexsort((both[:, 1], both[:, 0]))]
            splits = np.cumsum(self.degree)[:-1]
            self._adjacency = [_frozen(a) for a in np.split(both[:, 1], splits)]
        return self._adjacency

    def vertex_index(self, point: Tuple[float, ...]) -> int:
        """
        Look up the index of a lattice point.

        Args:
            point (Tuple[float, ...]): Position in the box

        Returns:
            int: Vertex index

        Raises:
            InvalidParameterError: If the point is not a vertex of the graph
        """
        k = np.rint(np.asarray(point, dtype=float) / self.ell).astype(np.int64)
        if k.shape != (self.nu,) or np.any(np.abs(k) > self.half_width):
            raise InvalidParameterError(f"{point} is not a vertex of this lattice")
        if not np.allclose(k * self.ell, point, atol=SNAP_TOLERANCE + 1e-9 * self.ell):
            raise InvalidParameterError(f"{point} is not a lattice point")
        side = 2 * self.half_width + 1
        strides = side ** np.arange(self.nu - 1, -1, -1)
        return int(np.dot(k + self.half_width, strides))

    def same_as(self, other: "LatticeGraph") -> bool:
        """Check whether two graphs describe the same lattice."""
        return other is self or (
            self.nu == other.nu
            and self.ell == other.ell
            and self.half_width == other.half_width
        )

    def __repr__(self) -> str:
        return (
            f"LatticeGraph(nu={self.nu}, ell={self.ell:g}, radius={self.radius:g}, "
            f"vertices={self.num_vertices}, edges={self.num_edges})"
        )


def build_lattice(nu: int, ell: float, radius: float) -> LatticeGraph:
    """
    Build the truncated square lattice graph.

    Args:
        nu (int): Dimension, at least 1
        ell (float): Positive lattice spacing
        radius (float): Truncation half-width, at least ell

    Returns:
        LatticeGraph: All lattice vertices in [-radius, radius]**nu and all
        length-ell edges between them

    Raises:
        InvalidParameterError: If a parameter is out of range
    """
    if int(nu) != nu or nu < 1:
        raise InvalidParameterError(f"dimension must be a positive integer, got {nu}")
    if not np.isfinite(ell) or ell <= 0:
        raise InvalidParameterError(f"lattice spacing must be positive, got {ell}")
    if not np.isfinite(radius) or radius + SNAP_TOLERANCE < ell:
        raise InvalidParameterError(f"radius {radius} must be at least the spacing {ell}")
    graph = LatticeGraph(int(nu), float(ell), float(radius))
    logger.debug("Built %r", graph)
    return graph


def interior_mask(g: LatticeGraph) -> np.ndarray:
    """
    Mark the vertices with the full 2 nu neighbours inside the box.

    Args:
        g (LatticeGraph): The graph

    Returns:
        np.ndarray: Boolean mask over vertices
    """
    return g.degree == 2 * g.nu
