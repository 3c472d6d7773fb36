import math

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from src.fpa_geometry import (CollimatorSpec, ElementIndex, HexLattice, element_position,
                              field_of_view, fill_factor, footprint, steering_angle,
                              steering_angles)
from src.utils.errors import DomainError


@pytest.fixture
def lattice() -> HexLattice:
    return HexLattice()


def test_element_count_and_center(lattice):
    assert lattice.element_count == 61
    assert len(lattice.indices) == 61
    assert lattice.center.id == 31
    assert lattice.elements_per_axis == 9


def test_row_major_numbering(lattice):
    # Верхній рядок (r = +4) має 5 елементів
    assert [idx.id for idx in lattice.indices if idx.axial_r == 4] == [1, 2, 3, 4, 5]
    assert lattice.index_at(-4, 4).id == 1
    assert lattice.index_at(1, 0).id == 32
    assert lattice.index_at(4, -4).id == 61
    assert lattice.index(32) == ElementIndex(32, 1, 0)


@pytest.mark.parametrize("ring, expected", [(0, 1), (1, 6), (2, 12), (3, 18), (4, 24)])
def test_ring_sizes(lattice, ring, expected):
    assert sum(1 for idx in lattice.indices if idx.ring == ring) == expected


@pytest.mark.parametrize("element_id", [0, 62, -1])
def test_index_out_of_range(lattice, element_id):
    with pytest.raises(DomainError):
        lattice.index(element_id)


def test_invalid_axial_coordinates(lattice):
    with pytest.raises(DomainError):
        lattice.index_at(5, 0)
    with pytest.raises(DomainError):
        element_position(lattice, ElementIndex(31, 1, 1))


def test_neighbours_are_one_pitch_apart(lattice):
    center = np.array(element_position(lattice, lattice.center))
    for q, r in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)]:
        neighbour = np.array(element_position(lattice, lattice.index_at(q, r)))
        assert np.linalg.norm(neighbour - center) == pytest.approx(lattice.pitch_m)


def test_min_pairwise_distance_is_pitch(lattice):
    distances = pdist(lattice.positions())
    assert distances.min() == pytest.approx(lattice.pitch_m)
    assert np.all(distances >= lattice.pitch_m * (1 - 1e-12))


def test_point_symmetry(lattice):
    positions = lattice.positions()
    for idx in lattice.indices:
        mirror = lattice.index_at(-idx.axial_q, -idx.axial_r)
        assert idx.id + mirror.id == lattice.element_count + 1
        np.testing.assert_allclose(positions[mirror.id - 1], -positions[idx.id - 1], atol=1e-18)


def test_id_axial_roundtrip(lattice):
    for element_id in range(1, lattice.element_count + 1):
        idx = lattice.index(element_id)
        assert lattice.index_at(idx.axial_q, idx.axial_r).id == element_id


def test_steering_angle_of_first_ring_element(lattice):
    theta = steering_angle(lattice, CollimatorSpec(), lattice.index(32))
    assert theta[0] == pytest.approx(-36.9e-6 / 0.150)
    assert theta[1] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(steering_angle(lattice, CollimatorSpec(), lattice.center), 0.0)


def test_steering_is_linear_in_offset(lattice):
    collimator = CollimatorSpec()
    for q, r in [(1, 0), (0, 1), (-1, 1), (1, -2)]:
        one = np.array(steering_angle(lattice, collimator, lattice.index_at(q, r)))
        two = np.array(steering_angle(lattice, collimator, lattice.index_at(2 * q, 2 * r)))
        np.testing.assert_allclose(two, 2 * one, atol=1e-18)


def test_steering_angles_shape(lattice):
    angles = steering_angles(lattice, CollimatorSpec(), [1, 31, 61])
    assert angles.shape == (3, 2)
    np.testing.assert_allclose(angles[0], -angles[2])


def test_field_of_view_and_footprint(lattice):
    collimator = CollimatorSpec()
    assert field_of_view(lattice, collimator) == pytest.approx(0.127, abs=0.005)
    assert footprint(lattice, collimator, 63.0) == pytest.approx(0.139, abs=0.005)
    ratio = math.radians(field_of_view(lattice, collimator)) * collimator.focal_length_m \
        / (lattice.elements_per_axis * lattice.pitch_m)
    assert ratio == pytest.approx(1.0)


def test_fill_factor(lattice):
    ratio, ratio_db = fill_factor(lattice)
    assert ratio == pytest.approx((8.4 / 36.9) ** 2)
    assert ratio_db == pytest.approx(10 * math.log10((8.4 / 36.9) ** 2))
    assert ratio_db < 0


def test_nearest_subset(lattice):
    ids = [idx.id for idx in lattice.nearest_subset(7)]
    assert ids == [22, 23, 30, 31, 32, 39, 40]
    assert len(lattice.nearest_subset(31)) == 31
    assert len(lattice.nearest_subset(61)) == 61
    with pytest.raises(DomainError):
        lattice.nearest_subset(0)


def test_invalid_lattice_parameters():
    with pytest.raises(DomainError):
        HexLattice(pitch_m=0.0)
    with pytest.raises(DomainError):
        HexLattice(rings=-1)
    with pytest.raises(DomainError):
        CollimatorSpec(focal_length_m=0.0)
