"""
Sequential coding baseline

Mỗi cloud được mã hoá độc lập bằng xác suất voxel của CVAE (posterior mean -> likelihood).
Decoder chỉ dùng các bảng xác suất đã lưu, không cần weight của model; các bảng này
chính là phần overhead phía decoder: B x 2^(3d) entry.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from modules.ans import AnsState, bernoulli_frequencies, flush, restore
from modules.cvae import CvaeModel, likelihood, posterior
from modules.errors import CodecError, ConfigurationError, MissingTableError, RejectedInputError
from modules.geometry import PointCloud, VoxelGrid, check_depth, voxelize

logger = logging.getLogger(__name__)

DEFAULT_BYTES_PER_ENTRY = 4


@dataclass
class SeqCompressed:
    """Per-cloud payloads + the symbol-1 frequency table each payload was coded with"""
    depth: int
    payloads: List[List[int]] = field(repr=False)
    tables: List[Optional[np.ndarray]] = field(repr=False)
    total_points: int = 1

    @property
    def batch_size(self) -> int:
        return len(self.payloads)

    @property
    def total_bits(self) -> int:
        return sum(32 * len(p) for p in self.payloads)

    @property
    def payload_bytes(self) -> int:
        return self.total_bits // 8

    @property
    def bpp(self) -> float:
        return self.total_bits / self.total_points

    def cloud_bits(self) -> List[int]:
        return [32 * len(p) for p in self.payloads]


def _code_grid(grid: VoxelGrid, f1: np.ndarray) -> List[int]:
    state = AnsState()
    bits = grid.occupancy.tolist()
    freqs = f1.tolist()
    for m in range(len(bits) - 1, -1, -1):
        state.push_bit(bits[m], freqs[m])
    return flush(state)


def seq_compress_grids(grids: Sequence[VoxelGrid], model: CvaeModel,
                       total_points: Optional[int] = None) -> SeqCompressed:
    if not grids:
        raise RejectedInputError("batch must contain at least one grid")
    payloads, tables = [], []
    for grid in grids:
        if grid.depth != model.depth:
            raise ConfigurationError(f"grid depth {grid.depth} does not match model depth {model.depth}")
        probs = likelihood(model, posterior(model, grid).mu)
        f1 = bernoulli_frequencies(probs.p).astype(np.uint16)
        payloads.append(_code_grid(grid, f1))
        tables.append(f1)
    if total_points is None:
        total_points = max(1, sum(g.occupied_count for g in grids))
    sc = SeqCompressed(model.depth, payloads, tables, int(total_points))
    logger.info(f"Sequential coding of {len(grids)} grid(s) at d={model.depth}: {sc.bpp:.3f} bpp")
    return sc


def seq_compress(clouds: Sequence[PointCloud], model: CvaeModel, d: int) -> SeqCompressed:
    if d != model.depth:
        raise ConfigurationError(f"requested depth {d} but the model was built for d={model.depth}")
    grids = [voxelize(pc, d) for pc in clouds]
    return seq_compress_grids(grids, model, total_points=sum(len(pc) for pc in clouds))


def seq_decompress_one(sc: SeqCompressed, index: int) -> VoxelGrid:
    """
    Raises:
        MissingTableError: không có bảng xác suất cho cloud này
    """
    table = sc.tables[index] if index < len(sc.tables) else None
    if table is None:
        raise MissingTableError(f"no probability table stored for cloud {index}", index)
    n_voxels = 1 << (3 * sc.depth)
    if table.shape != (n_voxels,):
        raise CodecError(f"table {index} has {table.shape[0]} entries, expected {n_voxels}")

    state = restore(sc.payloads[index])
    freqs = table.tolist()
    occupancy = np.empty(n_voxels, dtype=np.uint8)
    for m in range(n_voxels):
        occupancy[m] = state.pop_bit(freqs[m])
    if state != AnsState():
        raise CodecError(f"payload {index} was not fully consumed")
    return VoxelGrid(sc.depth, occupancy)


def seq_decompress(sc: SeqCompressed) -> List[VoxelGrid]:
    """Decode every cloud from its stored table (no model needed)"""
    return [seq_decompress_one(sc, i) for i in range(sc.batch_size)]


def seq_overhead_bytes(batch_size: int, d: int, bytes_per_entry: int = DEFAULT_BYTES_PER_ENTRY) -> int:
    """Decoder-side probability storage: B * 2^(3d) * bytes_per_entry"""
    if batch_size < 0 or bytes_per_entry < 0:
        raise RejectedInputError(f"batch size and bytes per entry must be >= 0, got {batch_size}, {bytes_per_entry}")
    return int(batch_size) * (1 << (3 * check_depth(d))) * int(bytes_per_entry)


def table_sizes(sc: SeqCompressed) -> Tuple[int, ...]:
    return tuple(0 if t is None else int(t.shape[0]) for t in sc.tables)


__all__ = [
    'SeqCompressed', 'seq_compress', 'seq_compress_grids', 'seq_decompress', 'seq_decompress_one',
    'seq_overhead_bytes', 'table_sizes', 'DEFAULT_BYTES_PER_ENTRY',
]
