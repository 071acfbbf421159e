import pytest

import numpy as np

from qglab.probes import SUITES, bubble_probe, mixture_probe, probe_suite, random_vertex_function, smooth_probe
from qglab.spaces import h1_norm, trace_K


def test_bubbles_vanish_at_vertices(line):
    """Test that bubble probes have zero vertex trace."""
    probe = bubble_probe(line, 2.0, 3, 16)
    assert np.allclose(trace_K(probe).values, 0.0)
    assert h1_norm(probe) == pytest.approx(2.0 * np.sqrt(line.edge_weight * line.num_edges * line.ell / 2), rel=1e-3)


@pytest.mark.parametrize("make", [
    lambda g, rng: smooth_probe(g, rng, 8),
    lambda g, rng: mixture_probe(g, rng, 8, [1, 2, 3]),
])
def test_probes_are_continuous(square, rng, make):
    """Test that smooth and mixture probes lie in H1 of the graph."""
    probe = make(square, rng)
    trace_K(probe)
    assert probe.derivatives is not None


def test_random_vertex_function(line, rng):
    u = random_vertex_function(line, rng)
    assert u.values.shape == (line.num_vertices,)
    assert np.iscomplexobj(u.values)


def test_suite_counts(line, rng):
    """Test the composition of a probe suite."""
    suite = list(probe_suite(line, rng, random=2, bubbles=3, mixtures=1, modes=[1, 2], m=4))
    assert [s for s, _, _ in suite] == ["random"] * 2 + ["bubbles"] * 3 + ["mixtures"]
    assert set(s for s, _, _ in suite) == set(SUITES)
    first_bubble = suite[2][2]
    assert np.allclose(np.abs(first_bubble.samples).max(axis=1), 1.0)


def test_suite_is_deterministic(line):
    a = [h1_norm(p) for _, _, p in probe_suite(line, np.random.default_rng(5), 2, 2, 2, [1, 2], 4)]
    b = [h1_norm(p) for _, _, p in probe_suite(line, np.random.default_rng(5), 2, 2, 2, [1, 2], 4)]
    assert a == b
