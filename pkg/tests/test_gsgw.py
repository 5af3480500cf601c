"""Area-weighted aggregation of signatures into one global descriptor."""

import numpy as np
import pytest

import sgwshape as sg
from sgwshape.errors import DimensionMismatch, InvalidParam

from conftest import random_rotation


def toy_signature():
    values = np.array(
        [
            [1.0, 2.0, 3.0],
            [0.5, 0.0, 1.5],
            [2.0, 2.0, 2.0],
            [0.1, 0.2, 0.3],
            [4.0, 0.0, 1.0],
        ]
    )
    return sg.SignatureMatrix(values, R=2, kernel_id="mexhat")


class TestAggregate:
    def test_hand_value(self):
        sig = toy_signature()
        areas = np.array([0.5, 1.0, 2.0])
        vec = sg.aggregate(sig, areas)
        np.testing.assert_allclose(vec.values, sig.values @ areas, rtol=1e-15)
        assert vec.R == 2

    def test_normalize_divides_by_total_area(self):
        sig = toy_signature()
        areas = np.array([0.5, 1.0, 2.0])
        plain = sg.aggregate(sig, areas)
        scaled = sg.aggregate(sig, areas, normalize=True)
        np.testing.assert_allclose(scaled.values, plain.values / areas.sum(), rtol=1e-15)

    def test_mesh_hash_is_carried(self):
        vec = sg.aggregate(toy_signature(), np.ones(3), mesh_hash="abc123")
        assert vec.mesh_hash == "abc123"

    def test_area_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            sg.aggregate(toy_signature(), np.ones(4))

    def test_nonpositive_area_rejected(self):
        with pytest.raises(InvalidParam, match="positive"):
            sg.aggregate(toy_signature(), np.array([1.0, 0.0, 1.0]))

    def test_vector_length_checked(self):
        with pytest.raises(InvalidParam):
            sg.GsgwVector(np.ones(3), R=2)  # length 5 expected for R = 2

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidParam, match="finite"):
            sg.GsgwVector(np.array([1.0, np.nan, 1.0, 1.0, 1.0]), R=2)


class TestDistance:
    def test_euclidean(self):
        a = sg.GsgwVector(np.array([0.0, 0.0, 0.0, 0.0, 0.0]), R=2)
        b = sg.GsgwVector(np.array([3.0, 4.0, 0.0, 0.0, 0.0]), R=2)
        assert sg.gsgw_distance(a, b) == pytest.approx(5.0, rel=1e-15)
        assert sg.gsgw_distance(a, a) == 0.0

    def test_resolution_mismatch(self):
        a = sg.GsgwVector(np.zeros(5), R=2)
        b = sg.GsgwVector(np.zeros(2), R=1)
        with pytest.raises(DimensionMismatch):
            sg.gsgw_distance(a, b)


class TestIsometryInvariance:
    def test_rigid_motion_leaves_descriptor_unchanged(self, icosphere2, icosphere2_basis):
        cfg = sg.KernelConfig.from_eigen(icosphere2_basis, R=4)
        sig = sg.signature_matrix(icosphere2_basis, cfg)
        ref = sg.aggregate(sig, icosphere2_basis.vertex_areas)

        rng = np.random.default_rng(12)
        moved = sg.rigid_transform(
            icosphere2, random_rotation(rng), rng.standard_normal(3)
        )
        stiffness, mass = sg.laplacian_matrices(moved)
        basis = sg.solve_eigen(stiffness, mass, 31)
        moved_cfg = sg.KernelConfig.from_eigen(basis, R=4)
        moved_vec = sg.aggregate(
            sg.signature_matrix(basis, moved_cfg), basis.vertex_areas
        )

        scale = np.linalg.norm(ref.values)
        assert sg.gsgw_distance(ref, moved_vec) < 1e-10 * scale
