"""
CVAE - convolutional variational autoencoder cho voxel grid

- Posterior net Q(z|x): conv3d x3 -> linear -> 2 head (mu, log_var)
- Prior P(z) = N(0, I)
- Likelihood net P(x|z): linear x2 -> convtranspose3d x3 -> sigmoid (Bernoulli per voxel)

Weight file (little-endian):
    magic "CVAE" | version u16 | depth u8 | latent_dim u16 | hidden u32 | channels 3 x u16
    | schedule length u16 + ascii "k4s2p1,..." | param count u32 | float32 params
    | u64 content hash (md5 của toàn bộ phần đứng trước, 8 byte đầu)
"""
import hashlib
import logging
import math
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from modules.ans import (
    TOTAL_FREQ,
    GaussianBuckets,
    QuantizedCdf,
    bernoulli_code_bits,
    bernoulli_frequencies,
    gaussian_bucket_cdf_posterior,
)
from modules.errors import (
    ConfigurationError,
    ModelFormatError,
    NumericError,
    RejectedInputError,
    ShapeError,
    StorageError,
    TrainingDivergedError,
)
from modules.geometry import VoxelGrid, check_depth
from modules.nncore import (
    Adam,
    LayerKind,
    LayerParams,
    Tape,
    add,
    apply_layer,
    bernoulli_log_likelihood,
    exp,
    gaussian_kl,
    grad_of,
    init_layer,
    mean,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    sub,
    value_of,
)
from modules.nncore.layers import conv_output_size
from modules.nncore.tape import Tensorish

logger = logging.getLogger(__name__)

MAGIC = b'CVAE'
FORMAT_VERSION = 1
_HEADER = struct.Struct('<4sHBHI3H')
_HASH = struct.Struct('<Q')
STORED_DTYPE = np.float32

DEFAULT_LATENT_DIM = 50
DEFAULT_HIDDEN = 500
DEFAULT_CHANNELS = (8, 16, 32)
LN2 = math.log(2.0)

# (kernel, stride, padding) của 3 conv layer theo bit-depth; convtranspose dùng ngược lại
_HALVE = (4, 2, 1)
_QUARTER = (4, 4, 0)
_KEEP = (1, 1, 0)
LAYER_SCHEDULES: Dict[int, Tuple[Tuple[int, int, int], ...]] = {
    1: (_HALVE, _KEEP, _KEEP),
    2: (_HALVE, _HALVE, _KEEP),
    3: (_HALVE, _HALVE, _HALVE),
    4: (_HALVE, _HALVE, _HALVE),
    5: (_HALVE, _HALVE, _HALVE),
    6: (_QUARTER, _HALVE, _HALVE),
    7: (_QUARTER, _QUARTER, _HALVE),
    8: (_QUARTER, _QUARTER, _QUARTER),
}
_SCHEDULE_RE = re.compile(r'^k(\d+)s(\d+)p(\d+)$')

Schedule = Tuple[Tuple[int, int, int], ...]


def layer_schedule(depth: int) -> Schedule:
    return LAYER_SCHEDULES[check_depth(depth)]


def schedule_descriptor(schedule: Schedule) -> str:
    return ','.join(f"k{k}s{s}p{p}" for k, s, p in schedule)


def parse_schedule(descriptor: str) -> Schedule:
    layers = []
    for part in descriptor.split(','):
        m = _SCHEDULE_RE.match(part.strip())
        if not m:
            raise ModelFormatError(f"invalid layer schedule entry '{part}'")
        layers.append(tuple(int(v) for v in m.groups()))
    if len(layers) != 3:
        raise ModelFormatError(f"layer schedule needs 3 entries, got {len(layers)}")
    return tuple(layers)


class LayerSpec(NamedTuple):
    name: str
    kind: LayerKind
    weight_shape: Tuple[int, ...]
    stride: int
    padding: int


def _bottleneck_side(depth: int, schedule: Schedule) -> int:
    n = 1 << depth
    for k, s, p in schedule:
        n = conv_output_size(n, k, s, p)
        if n < 1:
            raise ConfigurationError(f"layer schedule {schedule_descriptor(schedule)} collapses a 2^{depth} grid")
    return n


def architecture(depth: int, latent_dim: int, hidden: int, channels: Sequence[int],
                 schedule: Schedule) -> List[LayerSpec]:
    """Ordered layer list; parameter order in the weight file follows it"""
    c0, c1, c2 = channels
    side = _bottleneck_side(depth, schedule)
    flat = c2 * side ** 3
    (k0, s0, p0), (k1, s1, p1), (k2, s2, p2) = schedule
    conv, convt, lin = LayerKind.CONV3D, LayerKind.CONVTRANSPOSE3D, LayerKind.LINEAR
    return [
        LayerSpec('enc.conv0', conv, (c0, 1, k0, k0, k0), s0, p0),
        LayerSpec('enc.conv1', conv, (c1, c0, k1, k1, k1), s1, p1),
        LayerSpec('enc.conv2', conv, (c2, c1, k2, k2, k2), s2, p2),
        LayerSpec('enc.fc', lin, (hidden, flat), 1, 0),
        LayerSpec('enc.mu', lin, (latent_dim, hidden), 1, 0),
        LayerSpec('enc.log_var', lin, (latent_dim, hidden), 1, 0),
        LayerSpec('dec.fc0', lin, (hidden, latent_dim), 1, 0),
        LayerSpec('dec.fc1', lin, (flat, hidden), 1, 0),
        LayerSpec('dec.deconv0', convt, (c2, c1, k2, k2, k2), s2, p2),
        LayerSpec('dec.deconv1', convt, (c1, c0, k1, k1, k1), s1, p1),
        LayerSpec('dec.deconv2', convt, (c0, 1, k0, k0, k0), s0, p0),
    ]


def _bias_len(spec: LayerSpec) -> int:
    return spec.weight_shape[1] if spec.kind is LayerKind.CONVTRANSPOSE3D else spec.weight_shape[0]


# ---------------------------------------------------------------------------
# Model types
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CvaeModel:
    """
    Trọng số + kiến trúc. Coi như immutable sau khi build/train;
    train() trả về model mới.
    """
    depth: int
    latent_dim: int
    hidden: int
    channels: Tuple[int, int, int]
    schedule: Schedule
    params: Dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        check_depth(self.depth)
        self.channels = tuple(int(c) for c in self.channels)
        self.schedule = tuple(tuple(int(v) for v in layer) for layer in self.schedule)
        self.layers = architecture(self.depth, self.latent_dim, self.hidden, self.channels, self.schedule)
        expected = self.param_shapes()
        if list(self.params) != list(expected):
            raise ShapeError(f"model parameters {list(self.params)} do not match the architecture {list(expected)}")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ShapeError(f"parameter '{name}' has shape {self.params[name].shape}, expected {shape}")

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes: Dict[str, Tuple[int, ...]] = {}
        for spec in self.layers:
            shapes[f"{spec.name}.weight"] = spec.weight_shape
            shapes[f"{spec.name}.bias"] = (_bias_len(spec),)
        return shapes

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    @property
    def n_voxels(self) -> int:
        return 1 << (3 * self.depth)

    @property
    def bottleneck_side(self) -> int:
        return _bottleneck_side(self.depth, self.schedule)

    @property
    def flat_features(self) -> int:
        return self.channels[2] * self.bottleneck_side ** 3

    @property
    def param_count(self) -> int:
        return sum(int(a.size) for a in self.params.values())

    def with_params(self, params: Mapping[str, np.ndarray]) -> 'CvaeModel':
        return CvaeModel(self.depth, self.latent_dim, self.hidden, self.channels, self.schedule,
                         {name: np.array(params[name]) for name in self.params})

    def astype(self, dtype) -> 'CvaeModel':
        return self.with_params({k: v.astype(dtype) for k, v in self.params.items()})

    def at_stored_precision(self) -> 'CvaeModel':
        """Model exactly as the weight file would hold it (float32)"""
        return self if self.dtype == STORED_DTYPE else self.astype(STORED_DTYPE)


@dataclass(frozen=True, eq=False)
class PosteriorParams:
    """Diagonal Gaussian Q(z|x)"""
    mu: np.ndarray
    log_var: np.ndarray

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(0.5 * self.log_var)


@dataclass(frozen=True, eq=False)
class VoxelProbs:
    """Bernoulli occupancy probability per voxel, raster order"""
    p: np.ndarray

    def __len__(self) -> int:
        return self.p.shape[0]


@dataclass
class TrainResult:
    model: CvaeModel
    losses: List[float]     # mean -ELBO per epoch, bits per grid


@dataclass(frozen=True)
class EvalResult:
    neg_elbo_bits: float
    recon_bits: float
    kl_bits: float
    count: int


def build_model(depth: int, latent_dim: int = DEFAULT_LATENT_DIM, hidden: int = DEFAULT_HIDDEN,
                channels: Sequence[int] = DEFAULT_CHANNELS, seed: int = 0, dtype=np.float32,
                zero: bool = False) -> CvaeModel:
    """
    Khởi tạo deterministic (He-normal, bias 0).
    Args:
        zero: mọi weight bằng 0, chỉ bias đi qua (dùng cho test)
    """
    depth = check_depth(depth)
    if latent_dim < 1 or hidden < 1 or len(channels) != 3 or min(channels) < 1:
        raise ConfigurationError(f"invalid model size latent_dim={latent_dim}, hidden={hidden}, channels={channels}")
    schedule = layer_schedule(depth)
    rng = np.random.default_rng(seed)
    params: Dict[str, np.ndarray] = {}
    for spec in architecture(depth, latent_dim, hidden, channels, schedule):
        # heads and the logits layer are not followed by a relu
        gain = 1.0 if spec.name in ('enc.mu', 'enc.log_var', 'dec.deconv2') else 2.0
        layer = init_layer(spec.kind, spec.weight_shape, rng, spec.stride, spec.padding,
                           dtype=dtype, gain=gain, zero=zero)
        params[f"{spec.name}.weight"] = layer.weight
        params[f"{spec.name}.bias"] = layer.bias
    model = CvaeModel(depth, latent_dim, hidden, tuple(channels), schedule, params)
    logger.debug(f"Built CVAE d={depth} ({model.param_count} parameters, schedule {schedule_descriptor(schedule)})")
    return model


# ---------------------------------------------------------------------------
# Forward graphs (work on plain arrays or tape Vars)
# ---------------------------------------------------------------------------

def _layer(model: CvaeModel, params: Mapping[str, Tensorish], index: int) -> LayerParams:
    spec = model.layers[index]
    return LayerParams(spec.kind, params[f"{spec.name}.weight"], params[f"{spec.name}.bias"],
                       spec.stride, spec.padding)


def grids_to_volumes(model: CvaeModel, grids: Sequence[VoxelGrid]) -> np.ndarray:
    """(N, 1, n, n, n) input batch in the model dtype"""
    for grid in grids:
        if grid.depth != model.depth:
            raise ConfigurationError(f"grid depth {grid.depth} does not match model depth {model.depth}")
    n = 1 << model.depth
    vols = np.stack([g.occupancy for g in grids]).astype(model.dtype)
    return vols.reshape(len(grids), 1, n, n, n)


def encode_graph(model: CvaeModel, volumes: np.ndarray,
                 params: Optional[Mapping[str, Tensorish]] = None) -> Tuple[Tensorish, Tensorish]:
    params = model.params if params is None else params
    h = volumes
    for i in range(3):
        h = relu(apply_layer(h, _layer(model, params, i)))
    h = reshape(h, (volumes.shape[0], model.flat_features))
    h = relu(apply_layer(h, _layer(model, params, 3)))
    mu = apply_layer(h, _layer(model, params, 4))
    log_var = apply_layer(h, _layer(model, params, 5))
    return mu, log_var


def decode_graph(model: CvaeModel, z: Tensorish,
                 params: Optional[Mapping[str, Tensorish]] = None) -> Tensorish:
    """Batched logits (N, 2^(3d)) for latents z (N, latent_dim)"""
    params = model.params if params is None else params
    n = value_of(z).shape[0]
    side = model.bottleneck_side
    h = relu(apply_layer(z, _layer(model, params, 6)))
    h = relu(apply_layer(h, _layer(model, params, 7)))
    h = reshape(h, (n, model.channels[2], side, side, side))
    h = relu(apply_layer(h, _layer(model, params, 8)))
    h = relu(apply_layer(h, _layer(model, params, 9)))
    h = apply_layer(h, _layer(model, params, 10))
    return reshape(h, (n, model.n_voxels))


def elbo_loss(model: CvaeModel, volumes: np.ndarray, noise: np.ndarray,
              params: Optional[Mapping[str, Tensorish]] = None) -> Tuple[Tensorish, Tensorish, Tensorish]:
    """
    Single-sample -ELBO (nats), trung bình trên batch.
    Returns:
        (loss, recon_ll per sample, kl per sample)
    """
    mu, log_var = encode_graph(model, volumes, params)
    noise = np.asarray(noise, dtype=value_of(mu).dtype).reshape(value_of(mu).shape)
    z = add(mu, mul(exp(scale(log_var, 0.5)), noise))
    logits = decode_graph(model, z, params)
    targets = volumes.reshape(volumes.shape[0], -1)
    recon = bernoulli_log_likelihood(logits, targets)
    kl = gaussian_kl(mu, log_var)
    return mean(sub(kl, recon)), recon, kl


# ---------------------------------------------------------------------------
# Inference API
# ---------------------------------------------------------------------------

def posterior(model: CvaeModel, grid: VoxelGrid) -> PosteriorParams:
    """Deterministic Q(z|x) parameters for one grid"""
    mu, log_var = encode_graph(model, grids_to_volumes(model, [grid]))
    mu = np.asarray(mu[0], dtype=np.float64)
    log_var = np.asarray(log_var[0], dtype=np.float64)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(log_var))):
        raise NumericError("posterior network produced non-finite parameters")
    return PosteriorParams(mu, log_var)


def sample_latent(pp: PosteriorParams, noise) -> np.ndarray:
    """Reparameterisation: z = mu + sigma * noise"""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != pp.mu.shape:
        raise ShapeError(f"noise shape {noise.shape} does not match latent shape {pp.mu.shape}")
    return pp.mu + pp.sigma * noise


def likelihood(model: CvaeModel, z) -> VoxelProbs:
    z = np.asarray(z, dtype=model.dtype)
    if z.shape != (model.latent_dim,):
        raise ShapeError(f"latent must have shape ({model.latent_dim},), got {z.shape}")
    logits = decode_graph(model, z.reshape(1, -1))
    return VoxelProbs(np.asarray(sigmoid(logits)[0], dtype=np.float64))


def elbo(model: CvaeModel, grid: VoxelGrid, noise) -> Tuple[float, Dict[str, float]]:
    """
    -ELBO của một grid (nats) với một mẫu noise.
    Returns:
        (loss, {'recon_ll', 'kl'})
    Raises:
        NumericError: loss không hữu hạn
    """
    loss, recon, kl = elbo_loss(model, grids_to_volumes(model, [grid]),
                                np.asarray(noise).reshape(1, model.latent_dim))
    parts = {'recon_ll': float(recon[0]), 'kl': float(kl[0])}
    loss = float(loss)
    if not math.isfinite(loss):
        raise NumericError(f"non-finite ELBO (recon_ll={parts['recon_ll']}, kl={parts['kl']})")
    return loss, parts


def quantized_posterior(pp: PosteriorParams, buckets: GaussianBuckets) -> List[QuantizedCdf]:
    """One bucket table per latent dimension"""
    return [gaussian_bucket_cdf_posterior(m, s, buckets)
            for m, s in zip(pp.mu.tolist(), pp.sigma.tolist())]


def negative_elbo_bits_discrete(model: CvaeModel, grid: VoxelGrid, buckets: GaussianBuckets,
                                noise=None) -> float:
    """
    -ELBO (bits) với latent lượng tử hoá: z* = tâm bucket chứa mu + sigma * noise,
    KL tính trên bảng posterior/prior đã lượng tử hoá.
    Đây là độ dài mã bits-back kỳ vọng cho grid.
    """
    pp = posterior(model, grid)
    noise = np.zeros(model.latent_dim) if noise is None else noise
    z = sample_latent(pp, noise)
    idx = [buckets.bucket_of(v) for v in z.tolist()]
    kl_bits = 0.0
    for cdf in quantized_posterior(pp, buckets):
        q = np.asarray(cdf.frequencies(), dtype=np.float64) / TOTAL_FREQ
        kl_bits += float(np.sum(q * (np.log2(q) + buckets.p_bits)))
    probs = likelihood(model, buckets.centers[idx])
    recon_bits = bernoulli_code_bits(bernoulli_frequencies(probs.p), grid.occupancy)
    return recon_bits + kl_bits


def reconstruct(model: CvaeModel, grid: VoxelGrid, threshold: float = 0.5) -> VoxelGrid:
    """Posterior mean -> likelihood -> threshold"""
    probs = likelihood(model, posterior(model, grid).mu)
    return VoxelGrid(model.depth, (probs.p >= threshold).astype(np.uint8))


def evaluate(model: CvaeModel, grids: Sequence[VoxelGrid], seed: int = 0) -> EvalResult:
    if not grids:
        raise RejectedInputError("evaluate needs at least one grid")
    rng = np.random.default_rng(seed)
    losses, recons, kls = [], [], []
    for grid in grids:
        loss, parts = elbo(model, grid, rng.standard_normal(model.latent_dim))
        losses.append(loss)
        recons.append(-parts['recon_ll'])
        kls.append(parts['kl'])
    return EvalResult(float(np.mean(losses)) / LN2, float(np.mean(recons)) / LN2,
                      float(np.mean(kls)) / LN2, len(grids))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def train(model: CvaeModel, dataset: Sequence[VoxelGrid], epochs: int, lr: float = 0.001,
          batch_size: int = 16, seed: int = 0) -> TrainResult:
    """
    Adam trên -ELBO (single-sample). Deterministic theo seed.
    Raises:
        TrainingDivergedError: loss không hữu hạn (kèm epoch index)
    """
    if not dataset:
        raise RejectedInputError("training dataset is empty")
    if epochs < 0 or batch_size < 1 or lr <= 0:
        raise ConfigurationError(f"invalid training recipe epochs={epochs}, batch_size={batch_size}, lr={lr}")
    volumes = grids_to_volumes(model, dataset)
    n = volumes.shape[0]
    rng = np.random.default_rng(seed)
    params = {k: v.copy() for k, v in model.params.items()}
    optimizer = Adam(lr=lr)
    losses: List[float] = []

    for epoch in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            noise = rng.standard_normal((idx.shape[0], model.latent_dim)).astype(model.dtype)
            tape = Tape()
            leaves = {k: tape.variable(v, name=k) for k, v in params.items()}
            loss, _, _ = elbo_loss(model, volumes[idx], noise, leaves)
            value = float(value_of(loss))
            if not math.isfinite(value):
                raise TrainingDivergedError(f"non-finite loss {value} at batch offset {start}", epoch)
            tape.backward(loss)
            params = optimizer.step(params, {k: grad_of(v) for k, v in leaves.items()})
            epoch_loss += value * idx.shape[0]
        losses.append(epoch_loss / n / LN2)
        logger.info(f"Epoch {epoch + 1}/{epochs}: -ELBO {losses[-1]:.2f} bits/grid")

    return TrainResult(model.with_params(params) if epochs else model, losses)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _body_bytes(model: CvaeModel) -> bytes:
    schedule = schedule_descriptor(model.schedule).encode('ascii')
    flat = np.concatenate([a.ravel() for a in model.params.values()]).astype('<f4')
    return b''.join([
        _HEADER.pack(MAGIC, FORMAT_VERSION, model.depth, model.latent_dim, model.hidden, *model.channels),
        struct.pack('<H', len(schedule)), schedule,
        struct.pack('<I', flat.size), flat.tobytes(),
    ])


def _digest(body: bytes) -> int:
    return int.from_bytes(hashlib.md5(body).digest()[:8], 'little')


def to_bytes(model: CvaeModel) -> bytes:
    body = _body_bytes(model)
    return body + _HASH.pack(_digest(body))


def content_hash(model: CvaeModel) -> int:
    """64-bit hash carried in the weight file and in every container"""
    return _digest(_body_bytes(model))


def decoder_size_bytes(model: CvaeModel) -> int:
    return len(to_bytes(model))


def from_bytes(data: bytes) -> CvaeModel:
    if len(data) < _HEADER.size + 2 + 4 + _HASH.size:
        raise ModelFormatError(f"weight file too short ({len(data)} bytes)")
    magic, version, depth, latent_dim, hidden, c0, c1, c2 = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported weight format version {version}")
    body, (stored_hash,) = data[:-_HASH.size], _HASH.unpack(data[-_HASH.size:])
    if _digest(body) != stored_hash:
        raise ModelFormatError("weight file content hash mismatch")

    offset = _HEADER.size
    (slen,) = struct.unpack_from('<H', body, offset)
    offset += 2
    try:
        schedule = parse_schedule(body[offset:offset + slen].decode('ascii'))
    except UnicodeDecodeError as e:
        raise ModelFormatError("layer schedule is not ascii") from e
    offset += slen
    if offset + 4 > len(body):
        raise ModelFormatError("weight file truncated before the parameter count")
    (count,) = struct.unpack_from('<I', body, offset)
    offset += 4
    if len(body) - offset != 4 * count:
        raise ModelFormatError(f"expected {count} float32 parameters, found {(len(body) - offset) / 4:g}")
    flat = np.frombuffer(body, dtype='<f4', count=count, offset=offset).astype(np.float32)

    try:
        check_depth(depth)
        specs = architecture(depth, latent_dim, hidden, (c0, c1, c2), schedule)
    except (RejectedInputError, ConfigurationError) as e:
        raise ModelFormatError(f"weight file describes an invalid architecture: {e}") from e
    params: Dict[str, np.ndarray] = {}
    pos = 0
    for spec in specs:
        for name, shape in ((f"{spec.name}.weight", spec.weight_shape), (f"{spec.name}.bias", (_bias_len(spec),))):
            size = int(np.prod(shape))
            if pos + size > count:
                raise ModelFormatError("parameter count does not match the architecture")
            params[name] = flat[pos:pos + size].reshape(shape).copy()
            pos += size
    if pos != count:
        raise ModelFormatError(f"{count - pos} trailing parameters do not belong to the architecture")
    return CvaeModel(depth, latent_dim, hidden, (c0, c1, c2), schedule, params)


def serialize(model: CvaeModel, path: Union[str, Path]) -> int:
    """Write the weight file; returns its size in bytes"""
    if not str(path):
        raise StorageError("weight file path is empty")
    path = Path(path)
    data = to_bytes(model)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise StorageError(f"cannot write weight file {path}: {e}") from e
    logger.info(f"Saved CVAE d={model.depth} to {path} ({len(data)} bytes)")
    return len(data)


def deserialize(path: Union[str, Path]) -> CvaeModel:
    if not str(path):
        raise StorageError("weight file path is empty")
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read weight file {path}: {e}") from e
    return from_bytes(data)


__all__ = [
    'CvaeModel', 'PosteriorParams', 'VoxelProbs', 'TrainResult', 'EvalResult', 'LayerSpec',
    'LAYER_SCHEDULES', 'layer_schedule', 'schedule_descriptor', 'parse_schedule', 'architecture',
    'build_model', 'grids_to_volumes', 'encode_graph', 'decode_graph', 'elbo_loss',
    'posterior', 'sample_latent', 'likelihood', 'elbo', 'quantized_posterior',
    'negative_elbo_bits_discrete', 'reconstruct', 'evaluate', 'train',
    'to_bytes', 'from_bytes', 'content_hash', 'decoder_size_bytes', 'serialize', 'deserialize',
]
