"""Shared fixtures: canonical meshes and their eigen decompositions."""

import numpy as np
import pytest

import sgwshape as sg


def planar_grid(nx=8, ny=8, spacing=1.0):
    """Flat rectangular patch with boundary, split into right triangles."""
    xs, ys = np.meshgrid(np.arange(nx) * spacing, np.arange(ny) * spacing)
    vertices = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(nx * ny)])
    triangles = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            a = j * nx + i
            b = a + 1
            c = a + nx
            d = c + 1
            triangles += [(a, b, d), (a, d, c)]
    return sg.TriangleMesh(vertices, triangles)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    return q * np.sign(np.diag(r))


@pytest.fixture(scope="session")
def icosphere2():
    return sg.make_synthetic("unit_sphere", 2)


@pytest.fixture(scope="session")
def icosphere3():
    return sg.make_synthetic("unit_sphere", 3)


@pytest.fixture(scope="session")
def bumpy2():
    return sg.make_synthetic("bumpy_sphere", 2, seed=5)


@pytest.fixture(scope="session")
def icosphere2_basis(icosphere2):
    stiffness, mass = sg.laplacian_matrices(icosphere2)
    return sg.solve_eigen(stiffness, mass, 31)


@pytest.fixture(scope="session")
def icosphere3_basis(icosphere3):
    stiffness, mass = sg.laplacian_matrices(icosphere3)
    return sg.solve_eigen(stiffness, mass, 31)


@pytest.fixture(scope="session")
def bumpy2_basis(bumpy2):
    stiffness, mass = sg.laplacian_matrices(bumpy2)
    return sg.solve_eigen(stiffness, mass, 31)


@pytest.fixture
def grid_mesh():
    return planar_grid()
