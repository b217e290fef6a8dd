#!/usr/bin/env python3
"""
Test geometry: generators, voxelize/devoxelize, point files
"""

import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from modules.errors import EmptyOutputError, PointParseError, RejectedInputError, StorageError
from modules.geometry import (
    DATASET_FLAVOURS,
    SPHERE_RADIUS,
    PointCloud,
    VoxelGrid,
    devoxelize,
    gen_dataset,
    gen_synthetic,
    load_points,
    occupancy_ratio,
    raw_size_bits,
    save_points,
    train_test_split,
    voxelize,
)


def test_sphere_single_point_on_radius():
    pc = gen_synthetic('sphere-surface', 1, seed=0)
    assert len(pc) == 1
    assert abs(np.linalg.norm(pc.points[0]) - SPHERE_RADIUS) < 1e-6


def test_generator_is_deterministic():
    a = gen_synthetic('cluster', 20000, seed=7)
    b = gen_synthetic('cluster', 20000, seed=7)
    assert a == b
    assert not np.array_equal(a.points, gen_synthetic('cluster', 20000, seed=8).points)


def test_box_points_in_range():
    pc = gen_synthetic('box-surface', 5000, seed=3)
    assert pc.points.min() >= -1.0 and pc.points.max() <= 1.0


def test_unknown_kind_rejected():
    with pytest.raises(RejectedInputError):
        gen_synthetic('torus', 10, seed=0)
    with pytest.raises(RejectedInputError):
        gen_synthetic('plane', 0, seed=0)


def test_point_cloud_invariants():
    with pytest.raises(RejectedInputError):
        PointCloud(np.zeros((0, 3)))
    with pytest.raises(RejectedInputError):
        PointCloud(np.array([[1.5, 0.0, 0.0]]))
    with pytest.raises(RejectedInputError):
        PointCloud(np.zeros((4, 2)))


def test_voxelize_corners():
    low = voxelize(PointCloud(np.array([[-1.0, -1.0, -1.0]])), 2)
    assert np.flatnonzero(low.occupancy).tolist() == [0]
    high = voxelize(PointCloud(np.array([[1.0, 1.0, 1.0]])), 2)
    assert np.flatnonzero(high.occupancy).tolist() == [63]


def test_voxelize_raster_order_x_fastest():
    # x in bin 1, y in bin 0, z in bin 0 at d=1
    grid = voxelize(PointCloud(np.array([[0.5, -0.5, -0.5]])), 1)
    assert np.flatnonzero(grid.occupancy).tolist() == [1]
    grid = voxelize(PointCloud(np.array([[-0.5, -0.5, 0.5]])), 1)
    assert np.flatnonzero(grid.occupancy).tolist() == [4]


def test_voxelize_matches_per_point_oracle(rng):
    pts = rng.uniform(-1.0, 1.0, size=(20000, 3))
    grid = voxelize(PointCloud(pts), 5)
    occupied = set()
    for x, y, z in pts.tolist():
        ix, iy, iz = (min(int(np.floor((c + 1.0) * 16)), 31) for c in (x, y, z))
        occupied.add(ix + 32 * iy + 1024 * iz)
    assert set(np.flatnonzero(grid.occupancy).tolist()) == occupied
    assert grid.occupied_count <= min(20000, 32 ** 3)


def test_voxelize_rejects_bad_depth():
    pc = gen_synthetic('plane', 10, seed=0)
    for d in (0, 9):
        with pytest.raises(RejectedInputError):
            voxelize(pc, d)


def test_devoxelize_first_octant():
    occ = np.zeros(8, dtype=np.uint8)
    occ[0] = 1
    pc = devoxelize(VoxelGrid(1, occ))
    assert pc.points.tolist() == [[-0.5, -0.5, -0.5]]


def test_devoxelize_empty_grid():
    with pytest.raises(EmptyOutputError):
        devoxelize(VoxelGrid(2, np.zeros(64, dtype=np.uint8)))


def test_voxelize_devoxelize_idempotent(rng):
    for d in (1, 3, 4):
        occ = (rng.random(1 << (3 * d)) < 0.2).astype(np.uint8)
        occ[0] = 1
        grid = VoxelGrid(d, occ)
        assert voxelize(devoxelize(grid), d) == grid


def test_devoxelize_point_count(rng):
    occ = np.zeros(4096, dtype=np.uint8)
    occ[rng.choice(4096, size=100, replace=False)] = 1
    assert len(devoxelize(VoxelGrid(4, occ))) == 100


def test_voxel_grid_validation():
    with pytest.raises(RejectedInputError):
        VoxelGrid(2, np.zeros(63, dtype=np.uint8))
    with pytest.raises(RejectedInputError):
        VoxelGrid(1, np.full(8, 2))


def test_load_single_origin(tmp_path):
    path = tmp_path / 'one.xyz'
    path.write_text("0 0 0\n")
    assert load_points(path).points.tolist() == [[0.0, 0.0, 0.0]]


def test_save_load_precision(tmp_path, rng):
    pc = PointCloud(rng.uniform(-1.0, 1.0, size=(1000, 3)))
    path = tmp_path / 'cloud.xyz'
    save_points(pc, path)
    loaded = load_points(path)
    assert np.max(np.abs(loaded.points - pc.points)) < 1e-8


def test_load_out_of_range_reports_line(tmp_path):
    path = tmp_path / 'bad.xyz'
    path.write_text("2.0 0 0\n")
    with pytest.raises(PointParseError) as exc:
        load_points(path)
    assert exc.value.line_number == 1


def test_load_malformed_line_number(tmp_path):
    path = tmp_path / 'bad.xyz'
    path.write_text("# header\n0 0 0\n0.1 0.2\n")
    with pytest.raises(PointParseError) as exc:
        load_points(path)
    assert exc.value.line_number == 3


def test_load_invalid_utf8_reports_line(tmp_path):
    path = tmp_path / 'binary.xyz'
    path.write_bytes(b'0 0 0\n0.1 \xff 0\n')
    with pytest.raises(PointParseError) as exc:
        load_points(path)
    assert exc.value.line_number == 2


def test_load_missing_file(tmp_path):
    with pytest.raises(StorageError):
        load_points(tmp_path / 'missing.xyz')


def test_dataset_flavours_and_split():
    for flavour in DATASET_FLAVOURS:
        clouds = gen_dataset(flavour, 8, 100, seed=5)
        assert len(clouds) == 8
        assert all(len(pc) == 100 for pc in clouds)
        assert clouds == gen_dataset(flavour, 8, 100, seed=5)
    train, test = train_test_split(list(range(20)), 0.25, seed=1)
    assert len(test) == 5 and len(train) == 15
    assert sorted(train + test) == list(range(20))
    assert (train, test) == train_test_split(list(range(20)), 0.25, seed=1)


def test_statistics_helpers():
    pc = gen_synthetic('sphere-surface', 200, seed=2)
    assert raw_size_bits(pc) == 200 * 96
    grid = voxelize(pc, 3)
    assert 0.0 < occupancy_ratio(grid) <= 200 / 512
