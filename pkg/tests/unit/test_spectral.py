import pytest

import numpy as np

from qglab.discrete import assemble_h2
from qglab.errors import (
    BoundaryCollisionError,
    ConsistencyFailureError,
    EmptySetError,
    IncompatibleSpacesError,
    ShiftViolationError,
)
from qglab.spectral import (
    SpectrumSlice,
    cluster_multiplets,
    eigenpairs,
    ensure_window_clear,
    hausdorff_distance,
    inverse_shift_spectra_compare,
    multiplet_projection_distance,
    spectra_table,
    spectral_projection_distance,
)


def _free_eigenvalues(g):
    n = g.num_vertices
    return (2.0 / g.ell ** 2) * (1.0 - np.cos(np.arange(1, n + 1) * np.pi / (n + 1)))


def test_eigenpairs_in_window(line, zero):
    """Test the H2 eigenvalues of a window against the closed form."""
    exact = _free_eigenvalues(line)
    window = (0.5 * (exact[0] + exact[1]), 0.5 * (exact[4] + exact[5]))
    spectrum = eigenpairs(assemble_h2(line, zero), window)
    assert spectrum.eigenvalues == pytest.approx(exact[1:5])
    assert spectrum.first_index == 1
    assert np.allclose(spectrum.eigenvectors.T @ spectrum.eigenvectors, np.eye(4), atol=1e-10)


@pytest.mark.parametrize("backend", ["dense", "sparse"])
def test_backends_agree(line, harmonic, backend):
    """Test that both eigensolver backends find the same eigenvalues."""
    h2 = assemble_h2(line, harmonic)
    reference = np.linalg.eigvalsh(h2.dense())
    window = (0.5 * (reference[0] + reference[1]), 0.5 * (reference[6] + reference[7]))
    spectrum = eigenpairs(h2, window, backend=backend)
    assert spectrum.eigenvalues == pytest.approx(reference[1:7])


def test_empty_window(line, zero):
    """Test that a reversed window is empty."""
    assert len(eigenpairs(assemble_h2(line, zero), (5.0, 1.0))) == 0


def test_boundary_collision(line, zero):
    """Test that a window end on an eigenvalue is reported."""
    exact = _free_eigenvalues(line)
    with pytest.raises(BoundaryCollisionError):
        eigenpairs(assemble_h2(line, zero), (exact[2], exact[2] + 100.0))
    ensure_window_clear(exact, (exact[2] + 1e-3, np.inf))


def test_projection_distance(line, zero):
    """Test subspace distances for equal and unequal slices."""
    h2 = assemble_h2(line, zero)
    exact = _free_eigenvalues(line)
    spectrum = eigenpairs(h2, (1.0, 0.5 * (exact[2] + exact[3])))
    assert spectral_projection_distance(spectrum, spectrum) == pytest.approx(0.0, abs=1e-7)
    smaller = eigenpairs(h2, (1.0, 0.5 * (exact[1] + exact[2])))
    assert spectral_projection_distance(spectrum, smaller) == 1.0


def test_projection_distance_of_orthogonal_lines():
    a = SpectrumSlice(np.array([1.0]), np.array([[1.0], [0.0]]), (0.0, 2.0), "a")
    b = SpectrumSlice(np.array([1.0]), np.array([[0.0], [1.0]]), (0.0, 2.0), "b")
    assert spectral_projection_distance(a, b) == pytest.approx(1.0)


def test_projection_distance_needs_mapping():
    a = SpectrumSlice(np.array([1.0]), np.ones((3, 1)) / np.sqrt(3), (0.0, 2.0), "a")
    b = SpectrumSlice(np.array([1.0]), np.ones((2, 1)) / np.sqrt(2), (0.0, 2.0), "b")
    with pytest.raises(IncompatibleSpacesError):
        spectral_projection_distance(a, b)
    assert spectral_projection_distance(a, b, mapping=lambda v: v[:2] * np.sqrt(1.5)) == pytest.approx(0.0, abs=1e-7)


def test_cluster_multiplets():
    """Test grouping of nearly degenerate eigenvalues."""
    assert cluster_multiplets([1.0, 1.0 + 1e-10, 2.0, 3.0, 3.0], 1e-9) == [[0, 1], [2], [3, 4]]
    assert cluster_multiplets([], 1e-9) == []


def test_hausdorff_distance():
    """Test the Hausdorff distance of finite sets."""
    assert hausdorff_distance([0.0, 1.0], [0.0, 3.0]) == pytest.approx(2.0)
    assert hausdorff_distance([1.0], [1.0]) == 0.0
    with pytest.raises(EmptySetError):
        hausdorff_distance([], [1.0])


def test_inverse_shift_compare():
    """Test the distance of spectra after lambda -> 1 / (lambda + M)."""
    assert inverse_shift_spectra_compare([1.0], [3.0], 1.0) == pytest.approx(0.25)
    with pytest.raises(ShiftViolationError):
        inverse_shift_spectra_compare([-2.0], [3.0], 1.0)
    with pytest.raises(EmptySetError):
        inverse_shift_spectra_compare([], [3.0], 1.0)


def test_spectra_table():
    """Test the long-format spectra table."""
    frame = spectra_table([("H2", [1.0, 2.0]), ("nuH1", [1.5])])
    assert list(frame.columns) == ["operator_label", "index", "eigenvalue"]
    assert frame["operator_label"].tolist() == ["H2", "H2", "nuH1"]
    assert frame["index"].tolist() == [0, 1, 0]
    assert spectra_table([]).empty


def test_multiplet_distance_ignores_rotation_inside_a_multiplet():
    """Test that a rotated basis of a degenerate eigenspace is at distance zero."""
    values = np.array([1.0, 1.0, 2.0])
    a = SpectrumSlice(values, np.eye(3), (0.0, 3.0), "a")
    rotated = np.array([[1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, np.sqrt(2.0)]]) / np.sqrt(2.0)
    b = SpectrumSlice(values, rotated, (0.0, 3.0), "b")
    assert multiplet_projection_distance(a, b) == pytest.approx(0.0, abs=1e-12)


def test_multiplet_distance_separates_multiplets():
    """Test that swapped eigenspaces are caught although the total span agrees."""
    values = np.array([1.0, 1.0, 2.0])
    a = SpectrumSlice(values, np.eye(3), (0.0, 3.0), "a")
    b = SpectrumSlice(values, np.eye(3)[:, [0, 2, 1]], (0.0, 3.0), "b")
    assert spectral_projection_distance(a, b) == pytest.approx(0.0, abs=1e-12)
    assert multiplet_projection_distance(a, b) == pytest.approx(1.0)


def test_multiplet_distance_structure_mismatch():
    a = SpectrumSlice(np.array([1.0, 1.0, 2.0]), np.eye(3), (0.0, 3.0), "a")
    b = SpectrumSlice(np.array([1.0, 1.5, 2.0]), np.eye(3), (0.0, 3.0), "b")
    assert multiplet_projection_distance(a, b) == 1.0
    empty = SpectrumSlice(np.zeros(0), np.zeros((3, 0)), (0.0, 3.0), "e")
    assert multiplet_projection_distance(empty, empty) == 0.0


def test_multiplet_distance_on_square_lattice(square, zero):
    """Test degenerate H2 eigenvalues of the symmetric square lattice."""
    h2 = assemble_h2(square, zero)
    reference = np.linalg.eigvalsh(h2.dense())
    window = (reference[0] - 1.0, 0.5 * (reference[2] + reference[3]))
    spectrum = eigenpairs(h2, window)
    assert [len(group) for group in cluster_multiplets(spectrum.eigenvalues, 1e-8 * reference[2])] == [1, 2]
    assert multiplet_projection_distance(spectrum, spectrum) == pytest.approx(0.0, abs=1e-7)


def test_eigenpairs_residual_raises(mocker, line, zero):
    """Test that eigenpairs failing their own equation are rejected."""
    n = line.num_vertices
    mocker.patch("qglab.spectral._dense_window", return_value=(np.array([5.0]), np.eye(n)[:, :1], 0))
    with pytest.raises(ConsistencyFailureError):
        eigenpairs(assemble_h2(line, zero), (1.0, 10.0))
