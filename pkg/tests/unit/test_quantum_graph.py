import pytest

import numpy as np

from qglab.discrete import assemble_h2
from qglab.errors import EdgeSingularError, InvalidIntervalError, InvalidParameterError
from qglab.lattice import build_lattice
from qglab.norms import power_iteration
from qglab.probes import random_vertex_function
from qglab.quantum_graph import (
    GraphResolvent,
    assemble_corrections,
    edge_derivative_at_origin,
    edge_resolvent_solution,
    eigenfunction_mapping,
    fem_distance,
    graph_eigenfunction,
    metric_graph_fem_resolvent,
    reconstruct_graph_resolvent,
    resolvent_params,
    sandwiched_resolvent,
    secular_eigenvalues,
    secular_slice,
    validity_cap,
)
from qglab.spaces import VertexFunction, h1_norm, trace_K


@pytest.fixture
def path():
    """Three vertices and two Dirichlet stubs: the interval [-0.5, 0.5]."""
    return build_lattice(1, 0.25, 0.25)


def test_resolvent_params():
    """Test k, k' and the conjugate parameters."""
    p = resolvent_params(-4.0, 0.1, 2)
    assert p.k == pytest.approx(2j)
    assert p.k_prime == pytest.approx(2j / np.sqrt(2))
    assert p.w == pytest.approx(0.2j / np.sqrt(2))
    assert p.conjugate.z == pytest.approx(-4.0)
    assert resolvent_params(1 + 2j, 0.1, 1).conjugate.z == 1 - 2j


def test_resolvent_params_rejects_zero():
    """Test that z = 0 and bad lattices are rejected."""
    with pytest.raises(InvalidParameterError):
        resolvent_params(0, 0.1, 1)
    with pytest.raises(InvalidParameterError):
        resolvent_params(1j, 0.0, 1)


def test_edge_resonance():
    """Test that z on the Dirichlet spectrum of an edge is rejected."""
    with pytest.raises(EdgeSingularError):
        resolvent_params((np.pi / 0.25) ** 2, 0.25, 1)


def test_reconstruction_satisfies_vertex_condition(line, harmonic, rng):
    """Test the reconstructed resolvent against its vertex condition and edge equation."""
    phi = random_vertex_function(line, rng)
    resolvent = GraphResolvent(line, harmonic, resolvent_params(1j, line.ell, line.nu))
    w, psi = resolvent.reconstruct(phi.values)
    assert resolvent.check_vertex_condition(w, phi.values) <= 1e-8
    assert resolvent.check_edge_equation(psi, phi.values) <= 1e-10


def test_trace_of_reconstruction_is_sandwich(square, harmonic, rng):
    """Test K (nu H1 - z)^-1 I phi from the profiles and from the vertex system."""
    p = resolvent_params(-1.0 + 0.5j, square.ell, square.nu)
    phi = random_vertex_function(square, rng)
    psi = reconstruct_graph_resolvent(square, harmonic, p, phi)
    w = sandwiched_resolvent(square, harmonic, p, phi)
    assert np.allclose(trace_K(psi).values, w.values, atol=1e-9 * np.abs(w.values).max())


def test_sandwich_adjoint(line, harmonic, rng):
    """Test that sandwich_adjoint is the adjoint of sandwich."""
    resolvent = GraphResolvent(line, harmonic, resolvent_params(2 + 1j, line.ell, line.nu))
    f = random_vertex_function(line, rng).values
    g = random_vertex_function(line, rng).values
    lhs = np.vdot(resolvent.sandwich(f), g)
    rhs = np.vdot(f, resolvent.sandwich_adjoint(g))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_mismatched_parameters(line, harmonic):
    """Test that parameters for another lattice are rejected."""
    with pytest.raises(InvalidParameterError):
        GraphResolvent(line, harmonic, resolvent_params(1j, 0.2, 1))


def test_fem_oracle_agrees(line, harmonic, rng):
    """Test the closed-form resolvent against P1 elements on every edge."""
    z = 1j
    phi = random_vertex_function(line, rng)
    psi = reconstruct_graph_resolvent(line, harmonic, resolvent_params(z, line.ell, line.nu), phi)
    solution = metric_graph_fem_resolvent(line, harmonic, z, phi, subdivisions=32)
    assert fem_distance(solution, psi) < 1e-3 * h1_norm(psi)
    assert solution.edge_values.shape == (line.num_edges, 33)


def test_fem_rejects_subdivisions(line, harmonic, rng):
    with pytest.raises(InvalidParameterError):
        metric_graph_fem_resolvent(line, harmonic, 1j, random_vertex_function(line, rng), subdivisions=0)


def test_m1_vanishes_with_ell(harmonic):
    """Test that the diagonal correction shrinks with the edge length."""
    sizes = []
    for ell in (0.2, 0.1, 0.05):
        g = build_lattice(1, ell, 1.0)
        m1 = assemble_corrections(g, harmonic, resolvent_params(1j, ell, 1)).m1
        sizes.append(np.abs(m1.entries.diagonal()).max())
    assert sizes[0] > sizes[1] > sizes[2]


def test_m2_vanishes_on_smooth_data(harmonic):
    """Test that M2 phi shrinks with the edge length for smooth phi."""
    sizes = []
    for ell in (0.2, 0.1, 0.05):
        g = build_lattice(1, ell, 1.0)
        m2 = assemble_corrections(g, harmonic, resolvent_params(1j, ell, 1)).m2
        phi = VertexFunction(g, np.exp(-8.0 * g.vertices[:, 0] ** 2))
        sizes.append(m2.apply(phi).norm())
    assert sizes[0] > sizes[1] > sizes[2]


def test_secular_eigenvalues_of_free_interval(path, zero):
    """Test the secular eigenvalues against the Dirichlet interval of length 1."""
    pairs = secular_eigenvalues(path, zero, (1.0, 100.0))
    values = [lam for lam, _ in pairs]
    assert values == pytest.approx([np.pi ** 2, 4 * np.pi ** 2, 9 * np.pi ** 2], rel=1e-9)
    for _, vector in pairs:
        assert vector.norm() == pytest.approx(1.0)


def test_secular_window_limits(path, zero):
    """Test malformed windows and windows past the edge resonance."""
    assert validity_cap(path) == pytest.approx(0.9 * 16 * np.pi ** 2)
    with pytest.raises(InvalidIntervalError):
        secular_eigenvalues(path, zero, (1.0, 200.0))
    with pytest.raises(InvalidIntervalError):
        secular_eigenvalues(path, zero, (50.0, 10.0))


def test_secular_slice(path, zero):
    """Test that slice vectors are orthonormal in the plain inner product."""
    spectrum = secular_slice(path, zero, (1.0, 100.0))
    assert len(spectrum) == 3
    assert spectrum.operator_label == "nuH1"
    gram = spectrum.eigenvectors.conj().T @ spectrum.eigenvectors
    assert np.allclose(gram, np.eye(3), atol=1e-10)


def test_graph_eigenfunction(path, zero):
    """Test the profile of the lowest eigenfunction."""
    lam, vector = secular_eigenvalues(path, zero, (1.0, 20.0))[0]
    psi = graph_eigenfunction(path, lam, vector)
    assert h1_norm(psi) == pytest.approx(1.0)
    # cos(pi x) on the in-box edges [-0.25, 0.25]
    values = psi.evaluate(np.array([0.0, 0.25]))
    assert abs(values[1, 0]) == pytest.approx(abs(values[0, 0]) / np.cos(np.pi / 4))


def test_eigenfunction_mapping_shape(path, zero):
    spectrum = secular_slice(path, zero, (1.0, 100.0))
    mapped = eigenfunction_mapping(path, spectrum.eigenvalues)(spectrum.eigenvectors)
    assert mapped.shape == (3, 3)
    assert eigenfunction_mapping(path, [])(np.zeros((3, 0))).shape == (3, 0)


@pytest.mark.slow
def test_sandwich_approaches_discrete_resolvent(harmonic, rng):
    """Test that ||K (nu H1 - z)^-1 I - (H2 - z)^-1|| decreases with ell."""
    z = 1j
    distances = []
    for ell in (0.2, 0.1, 0.05):
        g = build_lattice(1, ell, 1.0)
        graph = GraphResolvent(g, harmonic, resolvent_params(z, ell, 1))
        discrete = assemble_h2(g, harmonic).resolvent(z)
        estimate = power_iteration(
            lambda x: graph.sandwich(x) - discrete.solve(x),
            lambda y: graph.sandwich_adjoint(y) - discrete.solve(y, adjoint=True),
            g.num_vertices,
            rng,
        )
        distances.append(estimate.value)
    assert distances[0] > distances[1] > distances[2]


@pytest.mark.parametrize("z", [1j, 3.0 + 0.5j, -7.0, 25.0 + 2j, 0.02])
def test_edge_solution(z, rng):
    """Test the closed-form edge solution, including imaginary k for z < 0."""
    ell, nu = 0.2, 2
    p = resolvent_params(z, ell, nu)
    psi_j, psi_n, phi_j, phi_n = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    profile = edge_resolvent_solution(psi_j, psi_n, phi_j, phi_n, p)
    x = np.linspace(0.0, ell, 11)
    values = profile.evaluate(x)
    second = profile.second_derivative(x)
    forcing = phi_j + (phi_n - phi_j) * x / ell
    residual = -nu * second - p.z * values - forcing
    scale = max(np.abs(nu * second).max(), np.abs(p.z * values).max(), np.abs(forcing).max())
    assert np.abs(residual).max() < 1e-10 * scale
    assert values[0] == pytest.approx(psi_j)
    assert values[-1] == pytest.approx(psi_n)

    slope = edge_derivative_at_origin(psi_j, psi_n, phi_j, phi_n, p)
    step = 1e-5
    central = (profile.evaluate(np.array([step]))[0] - profile.evaluate(np.array([-step]))[0]) / (2 * step)
    assert slope == pytest.approx(complex(profile.derivative(np.array([0.0]))[0]), rel=1e-9)
    assert abs(slope - central) < 1e-6 * max(1.0, abs(slope))


def test_secular_narrow_window(path, zero):
    """Test a window away from zero whose H2 seed lies far below it."""
    pairs = secular_eigenvalues(path, zero, (80.0, 100.0))
    assert [lam for lam, _ in pairs] == pytest.approx([9 * np.pi ** 2], rel=1e-9)


@pytest.mark.parametrize("ell", [1 / 8, 1 / 16])
def test_secular_eigenvalues_on_finer_lattices(ell, zero):
    """Test the first five Dirichlet modes of the unit interval."""
    g = build_lattice(1, ell, 0.5 - ell)
    values = [lam for lam, _ in secular_eigenvalues(g, zero, (1.0, 30 * np.pi ** 2))]
    expected = [(m * np.pi) ** 2 for m in range(1, 6)]
    assert values == pytest.approx(expected, rel=1e-9)


def test_secular_subwindows_cover_window(harmonic):
    """Test that sub-windows together find exactly the eigenvalues of the full window."""
    g = build_lattice(1, 1 / 8, 0.5 - 1 / 8)
    full = [lam for lam, _ in secular_eigenvalues(g, harmonic, (1.0, 250.0))]
    edges = [1.0, 60.0, 150.0, 250.0]
    parts = []
    for a, b in zip(edges, edges[1:]):
        parts.extend(lam for lam, _ in secular_eigenvalues(g, harmonic, (a, b)))
    assert len(full) == 5
    assert sorted(parts) == pytest.approx(full, rel=1e-10)
