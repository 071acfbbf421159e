import pytest

import numpy as np

from qglab.errors import IncompatibleSpacesError, MissingDerivativeError, NotInH1Error, UndefinedRatioError
from qglab.lattice import build_lattice
from qglab.probes import bubble_probe, smooth_probe
from qglab.spaces import (
    GraphFunction,
    VertexFunction,
    adjoint_Istar,
    adjoint_trace_check,
    derivative_norm,
    embed_I,
    h1_inner,
    h1_norm,
    h1_sobolev_norm,
    interpolation_adjoint_ratio,
    interpolation_trace_check,
    trace_K,
)


def _random_vertex(g, rng):
    return VertexFunction(g, rng.standard_normal(g.num_vertices) + 1j * rng.standard_normal(g.num_vertices))


def test_vertex_norm(line):
    """Test the weighted vertex space norm."""
    u = VertexFunction(line, np.ones(line.num_vertices))
    assert u.norm() == pytest.approx(np.sqrt(0.1 * 21))


def test_vertex_inner_is_conjugate_linear(line, rng):
    """Test sesquilinearity of the vertex inner product."""
    u, w = _random_vertex(line, rng), _random_vertex(line, rng)
    assert (u * 1j).inner(w) == pytest.approx(-1j * u.inner(w))
    assert u.inner(w * 1j) == pytest.approx(1j * u.inner(w))
    assert u.inner(u).real == pytest.approx(u.norm() ** 2)


def test_vertex_shape_mismatch(line):
    """Test that wrongly sized data is rejected."""
    with pytest.raises(IncompatibleSpacesError):
        VertexFunction(line, np.zeros(5))
    other = VertexFunction(build_lattice(1, 0.2, 1.0), np.zeros(11))
    with pytest.raises(IncompatibleSpacesError):
        VertexFunction.zeros(line).inner(other)


def test_constant_graph_norm(line):
    """Test the graph space norm of the constant function."""
    one = GraphFunction.constant(line, 1.0)
    assert h1_norm(one) == pytest.approx(np.sqrt(20 * 0.1))
    assert derivative_norm(one) == pytest.approx(0.0)


def test_trace_of_embedding(square, rng):
    """Test that K I is the identity on vertex data."""
    u = _random_vertex(square, rng)
    assert np.allclose(trace_K(embed_I(u)).values, u.values)


def test_trace_rejects_discontinuous(line, rng):
    """Test that K reports the worst vertex of a discontinuous function."""
    start = np.zeros(line.num_edges)
    end = np.zeros(line.num_edges)
    end[4] = 1.0
    with pytest.raises(NotInH1Error) as info:
        trace_K(GraphFunction.linear(line, start, end))
    assert info.value.vertex == 5


@pytest.mark.parametrize("nu,ell", [(1, 0.1), (2, 0.25)])
def test_istar_is_adjoint_of_embedding(nu, ell, rng):
    """Test <I u, phi> = <u, I* phi> on a smooth sampled probe."""
    g = build_lattice(nu, ell, 1.0)
    u = _random_vertex(g, rng)
    phi = smooth_probe(g, rng, 8)
    lhs = h1_inner(embed_I(u), phi)
    rhs = u.inner(adjoint_Istar(phi))
    assert abs(lhs - rhs) <= 1e-10 * h1_norm(embed_I(u)) * h1_norm(phi)


def test_istar_of_constant(line):
    """Test that I* maps the constant 1 to 1 at interior vertices and 1/2 at the ends."""
    values = adjoint_Istar(GraphFunction.constant(line, 1.0)).values
    assert np.allclose(values[1:-1], 1.0)
    assert values[0] == pytest.approx(0.5)


def test_sinusoidal_combines_exactly(line):
    """Test that adding a linear function keeps sinusoidal edges closed form."""
    sin = GraphFunction.sinusoidal(line, 3.0, [1.0, 0.5, 0.0, 0.0])
    lin = GraphFunction.constant(line, 2.0)
    total = sin + lin
    assert total.samples is None
    x = np.linspace(0.0, line.ell, 7)
    assert np.allclose(total.evaluate(x), sin.evaluate(x) + 2.0)


def test_sampled_without_derivatives(line):
    """Test that Sobolev norms need derivative samples on sampled edges."""
    f = GraphFunction.from_callable(line, lambda t: np.sin(t), m=4)
    assert h1_norm(f) > 0
    with pytest.raises(MissingDerivativeError):
        h1_sobolev_norm(f)


def test_text_format(square, rng):
    """Test that the text format restores a mixed function."""
    phi = smooth_probe(square, rng, 4) + embed_I(_random_vertex(square, rng))
    restored = GraphFunction.from_text(square, phi.to_text())
    assert h1_norm(restored - phi) <= 1e-12 * h1_norm(phi)
    assert phi.to_text().splitlines()[1].split()[:2] == ["0", "sampled"]


@pytest.mark.parametrize("nu,ell", [(1, 0.1), (1, 0.05), (2, 0.25)])
def test_interpolation_trace_bound(nu, ell, rng):
    """Test ||I K phi - phi|| <= ell ||phi||_H1 on smooth probes."""
    g = build_lattice(nu, ell, 0.5)
    for _ in range(5):
        ratio, bound = interpolation_trace_check(smooth_probe(g, rng, 8))
        assert bound == ell
        assert ratio <= bound


@pytest.mark.parametrize("nu,ell", [(1, 0.1), (2, 0.25)])
def test_adjoint_trace_bound(nu, ell, rng):
    """Test ||I* phi - K phi|| <= ell/sqrt(5) ||phi||_H1 on smooth and bubble probes."""
    g = build_lattice(nu, ell, 0.5)
    probes = [smooth_probe(g, rng, 8) for _ in range(5)] + [bubble_probe(g, 1.0, 1, 8)]
    for phi in probes:
        ratio, bound = adjoint_trace_check(phi)
        assert bound == pytest.approx(ell / np.sqrt(5.0))
        assert ratio <= bound


def test_bubble_nearly_saturates_adjoint_trace_bound(line):
    """Test that the single-mode bubble is a non-vacuous probe."""
    ratio, bound = adjoint_trace_check(bubble_probe(line, 1.0, 1, 16))
    assert ratio >= 0.3 * bound


def test_interpolation_adjoint_ratio_scales_with_ell(rng):
    """Test that ||I I* phi - phi|| / ||phi||_H1 shrinks with ell."""
    coarse = build_lattice(1, 0.1, 0.5)
    fine = build_lattice(1, 0.05, 0.5)
    phi_coarse = GraphFunction.from_callable(coarse, lambda t: np.ones_like(t), 4, lambda t: np.zeros_like(t))
    phi_fine = GraphFunction.from_callable(fine, lambda t: np.ones_like(t), 4, lambda t: np.zeros_like(t))
    assert interpolation_adjoint_ratio(bubble_probe(fine, 1.0, 1, 8)) < interpolation_adjoint_ratio(bubble_probe(coarse, 1.0, 1, 8))
    assert interpolation_adjoint_ratio(phi_fine) < interpolation_adjoint_ratio(phi_coarse)


def test_zero_probe_ratio_is_undefined(line):
    """Test that a zero probe has no ratio."""
    with pytest.raises(UndefinedRatioError):
        interpolation_trace_check(GraphFunction.constant(line, 0.0))
