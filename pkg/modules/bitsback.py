"""
Bits-back codec - nén chuỗi (chained) một batch voxel grid vào cùng một rANS state

Encode mỗi cloud (3 pha):
    1. POP chỉ số bucket latent theo posterior Q(z|x), dimension tăng dần
    2. PUSH voxel theo Bernoulli P(x|z*) (z* = tâm bucket), raster ngược
    3. PUSH chỉ số bucket theo prior đều, dimension ngược
Decode làm ngược lại đúng thứ tự, rồi trả lại các bit đã "mượn" bằng posterior.

Container (little-endian):
    magic "BBPC" | version u16 | d u8 | p_bits u8 | latent_dim u16 | B u32 | total_points u64
    | seed u64 | seeded-word-count u32 | model-hash u64 | payload-length u32 | payload u32[]
"""
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from modules.ans import (
    DEFAULT_P_BITS,
    AnsState,
    GaussianBuckets,
    bernoulli_frequencies,
    flush,
    gaussian_bucket_cdf_prior,
    init_state,
    make_buckets,
    restore,
    seed_words_from,
)
from modules.cvae import CvaeModel, content_hash, likelihood, posterior, quantized_posterior
from modules.errors import (
    CodecError,
    ConfigurationError,
    ContainerFormatError,
    InsufficientInitialBitsError,
    MessageExhaustedError,
    ModelMismatchError,
    RejectedInputError,
    StorageError,
)
from modules.geometry import FLOAT32_BITS_PER_POINT, PointCloud, VoxelGrid, voxelize

logger = logging.getLogger(__name__)

CONTAINER_MAGIC = b'BBPC'
CONTAINER_VERSION = 1
_HEADER = struct.Struct('<4sHBBHIQQIQI')
WORD_BYTES = 4
# every posterior pop consumes at most 16 bits
_SEED_MARGIN_WORDS = 3


@dataclass
class CompressedContainer:
    depth: int
    p_bits: int
    latent_dim: int
    batch_size: int
    total_points: int
    seed: int
    seeded_words: int
    model_hash: int
    payload: List[int] = field(repr=False)
    # per-cloud information-content change, only known right after encoding
    cloud_net_bits: List[int] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ContainerFormatError(f"batch size must be >= 1, got {self.batch_size}")
        if len(self.payload) < 2:
            raise ContainerFormatError("payload must hold at least the two head words")

    @property
    def payload_bytes(self) -> int:
        return WORD_BYTES * len(self.payload)


@dataclass(frozen=True)
class CodeLengthReport:
    total_bits: int
    initial_bits: int
    net_bits: int
    bpp: float
    total_points: int
    batch_size: int
    raw_bits: int
    compression_ratio: float
    cloud_net_bits: Tuple[int, ...] = ()


def seeded_word_count(latent_dim: int) -> int:
    """Số word seed tối thiểu để pop posterior của cloud đầu tiên luôn hợp lệ"""
    return _SEED_MARGIN_WORDS + math.ceil(latent_dim / 2)


def _check_buckets(buckets: GaussianBuckets, p_bits: Optional[int]) -> None:
    if p_bits is not None and buckets.p_bits != p_bits:
        raise ConfigurationError(f"bucket table has p_bits={buckets.p_bits}, codec asked for {p_bits}")


def bb_encode_one(state: AnsState, grid: VoxelGrid, model: CvaeModel, buckets: GaussianBuckets,
                  p_bits: Optional[int] = None) -> AnsState:
    """
    Encode một grid vào state (state bị thay đổi tại chỗ và được trả về).
    Raises:
        InsufficientInitialBitsError: state hết bit khi pop posterior
    """
    _check_buckets(buckets, p_bits)
    if grid.depth != model.depth:
        raise ConfigurationError(f"grid depth {grid.depth} does not match model depth {model.depth}")

    tables = quantized_posterior(posterior(model, grid), buckets)
    try:
        indices = [state.pop(table) for table in tables]
    except MessageExhaustedError as e:
        raise InsufficientInitialBitsError(
            f"not enough bits to pop {model.latent_dim} latent buckets; seed more initial words") from e

    probs = likelihood(model, buckets.centers[indices])
    f1 = bernoulli_frequencies(probs.p).tolist()
    occupancy = grid.occupancy.tolist()
    for m in range(len(occupancy) - 1, -1, -1):
        state.push_bit(occupancy[m], f1[m])

    prior = gaussian_bucket_cdf_prior(buckets)
    for index in reversed(indices):
        state.push(index, prior)
    return state


def bb_decode_one(state: AnsState, model: CvaeModel, buckets: GaussianBuckets,
                  p_bits: Optional[int] = None) -> Tuple[VoxelGrid, AnsState]:
    """Exact inverse of bb_encode_one"""
    _check_buckets(buckets, p_bits)
    prior = gaussian_bucket_cdf_prior(buckets)
    indices = [state.pop(prior) for _ in range(model.latent_dim)]

    probs = likelihood(model, buckets.centers[indices])
    f1 = bernoulli_frequencies(probs.p).tolist()
    occupancy = np.empty(model.n_voxels, dtype=np.uint8)
    for m in range(model.n_voxels):
        occupancy[m] = state.pop_bit(f1[m])
    grid = VoxelGrid(model.depth, occupancy)

    # return the borrowed bits: re-encode z under Q(z|x_hat)
    tables = quantized_posterior(posterior(model, grid), buckets)
    for index, table in zip(reversed(indices), reversed(tables)):
        state.push(index, table)
    return grid, state


def _initial_state(seed: int, count: int) -> AnsState:
    return init_state(seed_words_from(seed, count))


def compress_grids(grids: Sequence[VoxelGrid], model: CvaeModel, p_bits: int = DEFAULT_P_BITS,
                   seed: int = 0, total_points: Optional[int] = None) -> CompressedContainer:
    """
    Chained bits-back over a batch of grids.
    Args:
        total_points: mẫu số của bpp; mặc định là tổng số voxel bị chiếm
    """
    if not grids:
        raise RejectedInputError("batch must contain at least one grid")
    # the container hash names the float32 weights, so code with exactly those
    model = model.at_stored_precision()
    depths = sorted({g.depth for g in grids})
    if depths != [model.depth]:
        raise ConfigurationError(f"batch depths {depths} do not match model depth {model.depth}")
    buckets = make_buckets(p_bits)
    if total_points is None:
        total_points = max(1, sum(g.occupied_count for g in grids))

    n_words = seeded_word_count(model.latent_dim)
    state = _initial_state(seed, n_words)
    net_bits = []
    for grid in grids:
        before = state.information_bits()
        bb_encode_one(state, grid, model, buckets, p_bits)
        net_bits.append(state.information_bits() - before)

    container = CompressedContainer(
        depth=model.depth, p_bits=p_bits, latent_dim=model.latent_dim, batch_size=len(grids),
        total_points=int(total_points), seed=int(seed), seeded_words=n_words,
        model_hash=content_hash(model), payload=flush(state), cloud_net_bits=net_bits)
    logger.info(f"Compressed {len(grids)} grid(s) at d={model.depth}: {len(container.payload)} words, "
                f"{32 * len(container.payload) / container.total_points:.3f} bpp")
    return container


def compress_batch(clouds: Sequence[PointCloud], model: CvaeModel, d: int, p_bits: int = DEFAULT_P_BITS,
                   seed: int = 0) -> CompressedContainer:
    if d != model.depth:
        raise ConfigurationError(f"requested depth {d} but the model was built for d={model.depth}")
    grids = [voxelize(pc, d) for pc in clouds]
    return compress_grids(grids, model, p_bits, seed, total_points=sum(len(pc) for pc in clouds))


def decompress_batch(container: CompressedContainer, model: CvaeModel) -> List[VoxelGrid]:
    """
    Giải nén toàn bộ batch; các grid được giải mã theo thứ tự LIFO rồi đảo lại.
    Raises:
        ModelMismatchError: hash của model khác hash trong container (trước khi decode)
        CodecError: payload hỏng hoặc bị cắt
    """
    model = model.at_stored_precision()
    if container.model_hash != content_hash(model):
        raise ModelMismatchError(
            f"container expects model hash {container.model_hash:016x}, got {content_hash(model):016x}")
    if container.depth != model.depth or container.latent_dim != model.latent_dim:
        raise ModelMismatchError("container depth/latent size disagree with the model")

    buckets = make_buckets(container.p_bits)
    state = restore(container.payload)
    decoded = []
    for _ in range(container.batch_size):
        grid, state = bb_decode_one(state, model, buckets, container.p_bits)
        decoded.append(grid)

    if state != _initial_state(container.seed, container.seeded_words):
        raise CodecError("residual state differs from the seeded initial state; payload is corrupted")
    decoded.reverse()
    return decoded


def report(container: CompressedContainer) -> CodeLengthReport:
    total_bits = 32 * len(container.payload)
    initial_bits = 32 * container.seeded_words
    raw_bits = container.total_points * FLOAT32_BITS_PER_POINT
    return CodeLengthReport(
        total_bits=total_bits,
        initial_bits=initial_bits,
        net_bits=total_bits - initial_bits,
        bpp=total_bits / container.total_points,
        total_points=container.total_points,
        batch_size=container.batch_size,
        raw_bits=raw_bits,
        compression_ratio=total_bits / raw_bits,
        cloud_net_bits=tuple(container.cloud_net_bits),
    )


# ---------------------------------------------------------------------------
# Container file
# ---------------------------------------------------------------------------

def container_to_bytes(container: CompressedContainer) -> bytes:
    header = _HEADER.pack(
        CONTAINER_MAGIC, CONTAINER_VERSION, container.depth, container.p_bits, container.latent_dim,
        container.batch_size, container.total_points, container.seed, container.seeded_words,
        container.model_hash, len(container.payload))
    return header + np.asarray(container.payload, dtype='<u4').tobytes()


def container_from_bytes(data: bytes) -> CompressedContainer:
    if len(data) < _HEADER.size:
        raise ContainerFormatError(f"container too short ({len(data)} bytes)")
    (magic, version, depth, p_bits, latent_dim, batch_size, total_points,
     seed, seeded_words, model_hash, n_words) = _HEADER.unpack_from(data, 0)
    if magic != CONTAINER_MAGIC:
        raise ContainerFormatError(f"bad magic {magic!r}, expected {CONTAINER_MAGIC!r}")
    if version != CONTAINER_VERSION:
        raise ContainerFormatError(f"unsupported container version {version}")
    body = data[_HEADER.size:]
    if len(body) != WORD_BYTES * n_words:
        raise ContainerFormatError(f"payload length {len(body)} bytes does not match header ({n_words} words)")
    if total_points < 1:
        raise ContainerFormatError("container reports zero points")
    payload = np.frombuffer(body, dtype='<u4').astype(np.int64).tolist()
    return CompressedContainer(depth, p_bits, latent_dim, batch_size, total_points, seed,
                               seeded_words, model_hash, payload)


def save_container(container: CompressedContainer, path: Union[str, Path]) -> int:
    if not str(path):
        raise StorageError("container path is empty")
    data = container_to_bytes(container)
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(data)
    except OSError as e:
        raise StorageError(f"cannot write container {path}: {e}") from e
    logger.info(f"Saved container {path} ({len(data)} bytes, B={container.batch_size})")
    return len(data)


def load_container(path: Union[str, Path]) -> CompressedContainer:
    if not str(path):
        raise StorageError("container path is empty")
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read container {path}: {e}") from e
    return container_from_bytes(data)


__all__ = [
    'CompressedContainer', 'CodeLengthReport', 'seeded_word_count', 'bb_encode_one', 'bb_decode_one',
    'compress_grids', 'compress_batch', 'decompress_batch', 'report',
    'container_to_bytes', 'container_from_bytes', 'save_container', 'load_container',
]
