"""
Geometry - sinh, đọc/ghi, voxelize và devoxelize point cloud

Point cloud: các điểm (x, y, z) đã chuẩn hoá trong [-1, 1]^3.
Voxel grid: khối nhị phân cạnh 2^d, raster order x chạy nhanh nhất, rồi y, rồi z
(index = x + y*n + z*n*n).
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple, TypeVar, Union

import numpy as np

from modules.errors import (
    EmptyOutputError,
    PointParseError,
    RejectedInputError,
    StorageError,
)

logger = logging.getLogger(__name__)

MIN_DEPTH = 1
MAX_DEPTH = 8

SPHERE_RADIUS = 0.8
BOX_HALF_SIZE = 0.7
FLOAT32_BITS_PER_POINT = 3 * 32

T = TypeVar('T')


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered points, shape (n, 3), every coordinate in [-1, 1]"""
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise RejectedInputError(f"points must have shape (n, 3), got {pts.shape}")
        if pts.shape[0] == 0:
            raise RejectedInputError("point cloud must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise RejectedInputError("point coordinates must be finite")
        if pts.min() < -1.0 or pts.max() > 1.0:
            raise RejectedInputError("point coordinates must lie in [-1, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, 'points', pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, PointCloud) and np.array_equal(self.points, other.points)


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Binary occupancy of 2^(3d) voxels in raster order"""
    depth: int
    occupancy: np.ndarray

    def __post_init__(self):
        check_depth(self.depth)
        occ = np.array(self.occupancy)
        if occ.ndim != 1 or occ.shape[0] != 1 << (3 * self.depth):
            raise RejectedInputError(
                f"occupancy must have {1 << (3 * self.depth)} entries for d={self.depth}, "
                f"got shape {occ.shape}")
        if not np.all((occ == 0) | (occ == 1)):
            raise RejectedInputError("occupancy values must be 0 or 1")
        occ = occ.astype(np.uint8)
        occ.setflags(write=False)
        object.__setattr__(self, 'occupancy', occ)

    @property
    def side(self) -> int:
        return 1 << self.depth

    @property
    def size(self) -> int:
        return self.occupancy.shape[0]

    @property
    def occupied_count(self) -> int:
        return int(self.occupancy.sum())

    def as_volume(self) -> np.ndarray:
        """View as (z, y, x) cube; C-order flattening gives back raster order"""
        n = self.side
        return self.occupancy.reshape(n, n, n)

    def __eq__(self, other) -> bool:
        return (isinstance(other, VoxelGrid) and self.depth == other.depth
                and np.array_equal(self.occupancy, other.occupancy))


def check_depth(depth: int) -> int:
    if not isinstance(depth, (int, np.integer)) or not MIN_DEPTH <= depth <= MAX_DEPTH:
        raise RejectedInputError(f"bit-depth must be an integer in [{MIN_DEPTH}, {MAX_DEPTH}], got {depth!r}")
    return int(depth)


# ---------------------------------------------------------------------------
# Synthetic generators
# ---------------------------------------------------------------------------

def _sphere_surface(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # standard_normal returning an exact zero vector is practically impossible
    norms[norms == 0.0] = 1.0
    return SPHERE_RADIUS * v / norms


def _box_surface(rng: np.random.Generator, n: int) -> np.ndarray:
    pts = rng.uniform(-BOX_HALF_SIZE, BOX_HALF_SIZE, size=(n, 3))
    face_axis = rng.integers(0, 3, size=n)
    face_sign = np.where(rng.integers(0, 2, size=n) == 0, -1.0, 1.0)
    pts[np.arange(n), face_axis] = face_sign * BOX_HALF_SIZE
    return pts


def _plane(rng: np.random.Generator, n: int) -> np.ndarray:
    xy = rng.uniform(-0.9, 0.9, size=(n, 2))
    z = 0.3 * xy[:, 0] - 0.2 * xy[:, 1] + rng.normal(0.0, 0.01, size=n)
    return np.column_stack([xy, z])


def _cluster(rng: np.random.Generator, n: int) -> np.ndarray:
    centres = rng.uniform(-0.6, 0.6, size=(5, 3))
    labels = rng.integers(0, len(centres), size=n)
    return centres[labels] + rng.normal(0.0, 0.08, size=(n, 3))


SHAPE_GENERATORS: Dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    'sphere-surface': _sphere_surface,
    'box-surface': _box_surface,
    'plane': _plane,
    'cluster': _cluster,
}


# Hai "dataset flavour": vật thể dày đặc ở trung tâm vs cảnh trải rộng theo các trục
DATASET_FLAVOURS: Dict[str, Tuple[str, ...]] = {
    'objects': ('sphere-surface', 'box-surface'),
    'scenes': ('plane', 'cluster'),
}


def gen_synthetic(kind: str, n_points: int, seed: int) -> PointCloud:
    """
    Sinh point cloud tổng hợp, deterministic theo (kind, n_points, seed)
    Args:
        kind: sphere-surface | box-surface | plane | cluster
        n_points: số điểm (>= 1)
        seed: integer seed
    """
    generator = SHAPE_GENERATORS.get(kind)
    if generator is None:
        raise RejectedInputError(f"Unknown shape kind '{kind}', expected one of {sorted(SHAPE_GENERATORS)}")
    if n_points < 1:
        raise RejectedInputError(f"n_points must be >= 1, got {n_points}")
    rng = np.random.default_rng(seed)
    pts = np.clip(generator(rng, int(n_points)), -1.0, 1.0)
    return PointCloud(pts)


def gen_dataset(flavour: str, n_clouds: int, n_points: int, seed: int) -> List[PointCloud]:
    """
    Sinh một dataset iid gồm n_clouds point cloud thuộc flavour 'objects' hoặc 'scenes'.
    Mỗi cloud có scale/offset ngẫu nhiên riêng để batch không chứa bản sao giống hệt nhau.
    """
    kinds = DATASET_FLAVOURS.get(flavour)
    if kinds is None:
        raise RejectedInputError(f"Unknown dataset flavour '{flavour}', expected one of {sorted(DATASET_FLAVOURS)}")
    if n_clouds < 1:
        raise RejectedInputError(f"n_clouds must be >= 1, got {n_clouds}")

    seeds = np.random.SeedSequence(seed).spawn(n_clouds)
    clouds = []
    for child in seeds:
        rng = np.random.default_rng(child)
        kind = kinds[int(rng.integers(0, len(kinds)))]
        base = gen_synthetic(kind, n_points, int(rng.integers(0, 2**31)))
        scale = rng.uniform(0.75, 1.0)
        offset = rng.uniform(-0.1, 0.1, size=3)
        clouds.append(PointCloud(np.clip(base.points * scale + offset, -1.0, 1.0)))
    logger.info(f"Generated {n_clouds} '{flavour}' clouds x {n_points} points (seed={seed})")
    return clouds


def train_test_split(items: Sequence[T], test_fraction: float, seed: int) -> Tuple[List[T], List[T]]:
    """Deterministic shuffle-then-split; test set gets round(len * test_fraction) items"""
    if not 0.0 <= test_fraction < 1.0:
        raise RejectedInputError(f"test_fraction must be in [0, 1), got {test_fraction}")
    order = np.random.default_rng(seed).permutation(len(items))
    n_test = int(round(len(items) * test_fraction))
    test = [items[i] for i in order[:n_test]]
    train = [items[i] for i in order[n_test:]]
    return train, test


# ---------------------------------------------------------------------------
# Voxelization
# ---------------------------------------------------------------------------

def voxel_indices(points: np.ndarray, depth: int) -> np.ndarray:
    """Per-axis bin index floor((c + 1) * 2^(d-1)); c = 1.0 lands in the last bin"""
    n = 1 << depth
    idx = np.floor((points + 1.0) * (1 << (depth - 1))).astype(np.int64)
    return np.clip(idx, 0, n - 1)


def voxelize(pc: PointCloud, d: int) -> VoxelGrid:
    """Voxel bằng 1 nếu có ít nhất một điểm rơi vào, ngược lại bằng 0"""
    depth = check_depth(d)
    n = 1 << depth
    idx = voxel_indices(pc.points, depth)
    raster = idx[:, 0] + n * idx[:, 1] + n * n * idx[:, 2]
    occupancy = np.zeros(n ** 3, dtype=np.uint8)
    occupancy[raster] = 1
    return VoxelGrid(depth, occupancy)


def devoxelize(grid: VoxelGrid) -> PointCloud:
    """One point per occupied voxel, placed at the voxel centre, in raster order"""
    raster = np.flatnonzero(grid.occupancy)
    if raster.size == 0:
        raise EmptyOutputError("cannot devoxelize an all-zero grid")
    n = grid.side
    ix = raster % n
    iy = (raster // n) % n
    iz = raster // (n * n)
    idx = np.column_stack([ix, iy, iz]).astype(np.float64)
    return PointCloud((idx + 0.5) / (1 << (grid.depth - 1)) - 1.0)


def occupancy_ratio(grid: VoxelGrid) -> float:
    return grid.occupied_count / grid.size


def raw_size_bits(pc: PointCloud) -> int:
    """Uncompressed float32 geometry size"""
    return len(pc) * FLOAT32_BITS_PER_POINT


# ---------------------------------------------------------------------------
# Plain-text point files: one "x y z" per line
# ---------------------------------------------------------------------------

def save_points(pc: PointCloud, path: Union[str, Path]) -> None:
    """Ghi mỗi điểm một dòng "x y z" với 9 chữ số có nghĩa"""
    if not str(path):
        raise StorageError("empty output path")
    lines = [f"{x:.9g} {y:.9g} {z:.9g}\n" for x, y, z in pc.points.tolist()]
    try:
        with open(path, 'w', encoding='utf-8') as f:
            f.writelines(lines)
    except OSError as e:
        raise StorageError(f"Cannot write point file {path}: {e}") from e


def load_points(path: Union[str, Path]) -> PointCloud:
    """
    Đọc file text "x y z"; bỏ qua dòng trống và dòng bắt đầu bằng '#'
    Raises:
        PointParseError: dòng sai định dạng hoặc toạ độ ngoài [-1, 1] (kèm số dòng)
    """
    if not str(path):
        raise StorageError("empty input path")
    points = []
    try:
        with open(path, 'rb') as f:
            for line_number, raw in enumerate(f, start=1):
                try:
                    line = raw.decode('utf-8').strip()
                except UnicodeDecodeError as e:
                    raise PointParseError(f"not valid UTF-8 text: {e.reason}", line_number) from e
                if not line or line.startswith('#'):
                    continue
                fields = line.split()
                if len(fields) != 3:
                    raise PointParseError(f"expected 3 coordinates, got {len(fields)}", line_number)
                try:
                    coords = [float(v) for v in fields]
                except ValueError as e:
                    raise PointParseError(f"not a number: {e}", line_number) from e
                for c in coords:
                    if not np.isfinite(c) or c < -1.0 or c > 1.0:
                        raise PointParseError(f"coordinate {c!r} outside [-1, 1]", line_number)
                points.append(coords)
    except OSError as e:
        raise StorageError(f"Cannot read point file {path}: {e}") from e

    if not points:
        raise PointParseError("file contains no points")
    return PointCloud(np.asarray(points, dtype=np.float64))


__all__ = [
    'PointCloud', 'VoxelGrid', 'SHAPE_GENERATORS', 'DATASET_FLAVOURS',
    'gen_synthetic', 'gen_dataset', 'train_test_split', 'voxelize', 'devoxelize',
    'voxel_indices', 'occupancy_ratio', 'raw_size_bits', 'save_points', 'load_points',
    'check_depth',
]
