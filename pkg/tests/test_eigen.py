"""Generalized eigensolver behavior and spectral bounds."""

import numpy as np
import pytest
import scipy.sparse as sp

import sgwshape as sg
from sgwshape.errors import InvalidParam, NumericalError

from conftest import random_rotation


def small_problem(mesh, k=10, method="auto"):
    stiffness, mass = sg.laplacian_matrices(mesh)
    return sg.solve_eigen(stiffness, mass, k, method=method)


class TestSolveEigen:
    def test_first_mode_is_constant(self, icosphere2_basis):
        basis = icosphere2_basis
        phi1 = basis.eigenvectors[:, 0]
        expected = 1.0 / np.sqrt(basis.vertex_areas.sum())
        np.testing.assert_allclose(phi1, expected, rtol=1e-8)
        assert basis.eigenvalues[0] < 1e-8 * basis.eigenvalues[-1]

    def test_eigenvalues_sorted_and_nonnegative(self, bumpy2_basis):
        vals = bumpy2_basis.eigenvalues
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] >= 0

    def test_area_orthonormality(self, bumpy2_basis):
        phi = bumpy2_basis.eigenvectors
        gram = phi.T @ (bumpy2_basis.vertex_areas[:, None] * phi)
        defect = np.abs(gram - np.eye(phi.shape[1])).max()
        assert defect < 1e-8

    def test_generalized_residual(self, bumpy2, bumpy2_basis):
        stiffness, mass = sg.laplacian_matrices(bumpy2)
        phi = bumpy2_basis.eigenvectors
        lam = bumpy2_basis.eigenvalues
        resid = stiffness @ phi - mass @ phi * lam
        scale = np.linalg.norm(mass @ phi, axis=0)
        assert (np.linalg.norm(resid, axis=0) / scale).max() < 1e-8

    def test_sign_convention(self, bumpy2_basis):
        phi = bumpy2_basis.eigenvectors
        peaks = phi[np.abs(phi).argmax(axis=0), np.arange(phi.shape[1])]
        assert np.all(peaks > 0)

    def test_repeat_solve_is_bitwise_identical(self, bumpy2):
        a = small_problem(bumpy2, k=12)
        b = small_problem(bumpy2, k=12)
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
        np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)

    def test_dense_and_sparse_agree(self, icosphere2):
        dense = small_problem(icosphere2, k=20, method="dense")
        sparse = small_problem(icosphere2, k=20, method="sparse")
        scale = dense.eigenvalues[-1]
        assert np.abs(dense.eigenvalues - sparse.eigenvalues).max() < 1e-9 * scale

    def test_rigid_motion_preserves_spectrum(self, bumpy2, bumpy2_basis):
        rng = np.random.default_rng(3)
        moved = sg.rigid_transform(bumpy2, random_rotation(rng), rng.standard_normal(3))
        moved_basis = small_problem(moved, k=31)
        np.testing.assert_allclose(
            moved_basis.eigenvalues[1:],
            bumpy2_basis.eigenvalues[1:],
            rtol=1e-10,
        )

    def test_uniform_scaling_divides_eigenvalues(self, bumpy2, bumpy2_basis):
        scaled = bumpy2.with_vertices(bumpy2.vertices * 2.0)
        scaled_basis = small_problem(scaled, k=31)
        np.testing.assert_allclose(
            scaled_basis.eigenvalues[1:] * 4.0,
            bumpy2_basis.eigenvalues[1:],
            rtol=1e-8,
        )

    def test_invalid_k(self, icosphere2):
        stiffness, mass = sg.laplacian_matrices(icosphere2)
        with pytest.raises(InvalidParam):
            sg.solve_eigen(stiffness, mass, 0)
        with pytest.raises(InvalidParam):
            sg.solve_eigen(stiffness, mass, icosphere2.m + 1)

    def test_unknown_method(self, icosphere2):
        stiffness, mass = sg.laplacian_matrices(icosphere2)
        with pytest.raises(InvalidParam, match="method"):
            sg.solve_eigen(stiffness, mass, 5, method="magic")

    def test_nonpositive_mass_rejected(self):
        stiffness = sp.identity(5, format="csr")
        mass = sp.diags([1.0, 1.0, 0.0, 1.0, 1.0]).tocsr()
        with pytest.raises(InvalidParam, match="mass"):
            sg.solve_eigen(stiffness, mass, 2)

    def test_indefinite_operator_rejected(self):
        stiffness = (-sp.identity(6)).tocsr()
        mass = sp.identity(6, format="csr")
        with pytest.raises(NumericalError, match="negative"):
            sg.solve_eigen(stiffness, mass, 3)


class TestEigenBasis:
    def test_truncate(self, bumpy2_basis):
        cut = bumpy2_basis.truncate(7)
        assert cut.k == 7
        np.testing.assert_array_equal(cut.eigenvalues, bumpy2_basis.eigenvalues[:7])
        np.testing.assert_array_equal(cut.eigenvectors, bumpy2_basis.eigenvectors[:, :7])
        np.testing.assert_array_equal(cut.vertex_areas, bumpy2_basis.vertex_areas)

    def test_truncate_full_is_self(self, bumpy2_basis):
        assert bumpy2_basis.truncate(bumpy2_basis.k) is bumpy2_basis

    def test_truncate_invalid(self, bumpy2_basis):
        with pytest.raises(InvalidParam):
            bumpy2_basis.truncate(0)
        with pytest.raises(InvalidParam):
            bumpy2_basis.truncate(bumpy2_basis.k + 1)

    def test_shape_properties(self, bumpy2, bumpy2_basis):
        assert bumpy2_basis.m == bumpy2.m
        assert bumpy2_basis.k == 31


class TestSpectrumBounds:
    def test_anchored_at_largest_eigenvalue(self):
        basis = sg.EigenBasis(
            eigenvalues=np.array([0.0, 1.0, 4.0, 20.0]),
            eigenvectors=np.eye(4),
            vertex_areas=np.ones(4),
        )
        lo, hi = sg.spectrum_bounds(basis)
        assert hi == 20.0
        assert lo == 1.0

    def test_requires_two_modes(self):
        basis = sg.EigenBasis(
            eigenvalues=np.array([0.0]),
            eigenvectors=np.ones((4, 1)),
            vertex_areas=np.ones(4),
        )
        with pytest.raises(InvalidParam):
            sg.spectrum_bounds(basis)

    def test_flat_spectrum_rejected(self):
        basis = sg.EigenBasis(
            eigenvalues=np.array([0.0, 0.0]),
            eigenvectors=np.ones((4, 2)),
            vertex_areas=np.ones(4),
        )
        with pytest.raises(NumericalError):
            sg.spectrum_bounds(basis)
