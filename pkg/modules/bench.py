"""
Bench - dataset pipeline, training entry point, compression runs và CSV report

Các cmd_* là wrapper mỏng, deterministic quanh geometry / cvae / bitsback / seqcodec;
run_pcc.py chỉ parse argument rồi gọi vào đây.
"""
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from modules.ans import DEFAULT_P_BITS
from modules.bitsback import (
    CodeLengthReport,
    compress_batch,
    decompress_batch,
    load_container,
    report,
    save_container,
)
from modules.cvae import (
    DEFAULT_CHANNELS,
    DEFAULT_HIDDEN,
    DEFAULT_LATENT_DIM,
    CvaeModel,
    EvalResult,
    TrainResult,
    build_model,
    decoder_size_bytes,
    deserialize,
    evaluate,
    serialize,
    train,
)
from modules.errors import CodecError, ConfigurationError, RejectedInputError
from modules.geometry import (
    MAX_DEPTH,
    MIN_DEPTH,
    PointCloud,
    devoxelize,
    gen_dataset,
    load_points,
    save_points,
    train_test_split,
    voxelize,
)
from modules.seqcodec import DEFAULT_BYTES_PER_ENTRY, seq_compress, seq_decompress, seq_overhead_bytes
from modules.settings_manager import SettingsManager

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ['method', 'd', 'B', 'bpp', 'payload_bytes', 'decoder_bytes', 'wall_time_ms']
METHOD_BITSBACK = 'bitsback'
METHOD_SEQUENTIAL = 'sequential'
POINT_FILE_SUFFIX = '.xyz'
# held-out clouds for the sweeps come from a seed next to the training seed
EVAL_SEED_OFFSET = 1


@dataclass
class BenchConfig:
    """Mọi tham số của một lần bench; mặc định lấy từ config.yaml"""
    flavour: str = 'objects'
    clouds: int = 200
    points: int = 2000
    dataset_seed: int = 7
    test_fraction: float = 0.25
    depth: int = 4
    depths: List[int] = field(default_factory=lambda: [3, 4, 5])
    batches: List[int] = field(default_factory=lambda: [1, 10, 100])
    model_path: str = 'models/cvae_d{d}.bin'
    p_bits: int = DEFAULT_P_BITS
    seed: int = 0
    out_dir: str = 'bench_out'
    latent_dim: int = DEFAULT_LATENT_DIM
    hidden: int = DEFAULT_HIDDEN
    channels: Tuple[int, int, int] = DEFAULT_CHANNELS
    epochs: int = 30
    lr: float = 0.001
    batch_size: int = 16
    train_seed: int = 0
    bytes_per_entry: int = DEFAULT_BYTES_PER_ENTRY
    record_wall_time: bool = False

    def __post_init__(self):
        if not self.depths or not self.batches:
            raise ConfigurationError("bench depth and batch lists must be non-empty")
        for d in list(self.depths) + [self.depth]:
            if not MIN_DEPTH <= d <= MAX_DEPTH:
                raise ConfigurationError(f"bit-depth {d} outside [{MIN_DEPTH}, {MAX_DEPTH}]")
        if min(self.batches) < 1:
            raise ConfigurationError(f"batch sizes must be >= 1, got {self.batches}")
        self.depths = sorted(set(int(d) for d in self.depths))
        self.batches = sorted(set(int(b) for b in self.batches))
        self.channels = tuple(self.channels)

    @classmethod
    def from_settings(cls, settings: SettingsManager, **overrides) -> 'BenchConfig':
        codec = settings.get_codec_config()
        model = settings.get_model_config()
        train_cfg = settings.get_train_config()
        dataset = settings.get_dataset_config()
        bench = settings.get_bench_config()
        values = dict(
            flavour=dataset['flavour'], clouds=dataset['clouds'], points=dataset['points'],
            dataset_seed=dataset['seed'], test_fraction=dataset['test_fraction'],
            depth=codec['depth'], depths=bench['depths'], batches=bench['batches'],
            model_path=model['path'], p_bits=codec['p_bits'], seed=codec['seed'],
            out_dir=bench['out_dir'], latent_dim=codec['latent_dim'], hidden=model['hidden'],
            channels=tuple(model['channels']), epochs=train_cfg['epochs'], lr=train_cfg['lr'],
            batch_size=train_cfg['batch_size'], train_seed=train_cfg['seed'],
            bytes_per_entry=bench['bytes_per_entry'], record_wall_time=bench['record_wall_time'],
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def model_path_for(self, depth: int) -> Path:
        return Path(self.model_path.format(d=depth))


@dataclass(frozen=True)
class BenchRow:
    method: str
    d: int
    B: int
    bpp: float
    payload_bytes: int
    decoder_bytes: int
    wall_time_ms: float = 0.0

    def __post_init__(self):
        if self.method not in (METHOD_BITSBACK, METHOD_SEQUENTIAL):
            raise RejectedInputError(f"unknown method '{self.method}'")
        if not self.bpp > 0:
            raise RejectedInputError(f"bpp must be positive, got {self.bpp}")
        if self.decoder_bytes < 0:
            raise RejectedInputError(f"decoder_bytes must be >= 0, got {self.decoder_bytes}")


# ---------------------------------------------------------------------------
# Dataset / model plumbing
# ---------------------------------------------------------------------------

def point_files(input_dir: Union[str, Path]) -> List[Path]:
    files = sorted(Path(input_dir).glob(f"*{POINT_FILE_SUFFIX}"))
    if not files:
        raise RejectedInputError(f"no {POINT_FILE_SUFFIX} files in {input_dir}")
    return files


def load_point_dir(input_dir: Union[str, Path]) -> List[PointCloud]:
    return [load_points(p) for p in point_files(input_dir)]


def bench_dataset(config: BenchConfig) -> Tuple[List[PointCloud], List[PointCloud]]:
    """(train, test) split of the configured synthetic dataset"""
    clouds = gen_dataset(config.flavour, config.clouds, config.points, config.dataset_seed)
    return train_test_split(clouds, config.test_fraction, config.dataset_seed)


def eval_clouds(config: BenchConfig, count: int) -> List[PointCloud]:
    """Fresh iid clouds, disjoint from the training draw"""
    return gen_dataset(config.flavour, count, config.points, config.dataset_seed + EVAL_SEED_OFFSET)


def train_model(config: BenchConfig, depth: int, clouds: Sequence[PointCloud]) -> TrainResult:
    grids = [voxelize(pc, depth) for pc in clouds]
    model = build_model(depth, config.latent_dim, config.hidden, config.channels, seed=config.train_seed)
    return train(model, grids, config.epochs, config.lr, config.batch_size, config.train_seed)


def load_or_train_model(config: BenchConfig, depth: int) -> CvaeModel:
    path = config.model_path_for(depth)
    if path.exists():
        logger.info(f"Loading CVAE weights for d={depth} from {path}")
        return deserialize(path)
    logger.info(f"No weights at {path}, training d={depth} model ({config.epochs} epochs)")
    train_clouds, _ = bench_dataset(config)
    result = train_model(config, depth, train_clouds)
    serialize(result.model, path)
    return result.model


# ---------------------------------------------------------------------------
# Bench cells
# ---------------------------------------------------------------------------

def _elapsed_ms(start: float, config: BenchConfig) -> float:
    # wall time is opt-in so that CSVs stay reproducible
    return (time.perf_counter() - start) * 1000.0 if config.record_wall_time else 0.0


def run_bitsback_cell(model: CvaeModel, clouds: Sequence[PointCloud], config: BenchConfig) -> BenchRow:
    start = time.perf_counter()
    container = compress_batch(clouds, model, model.depth, config.p_bits, config.seed)
    decoded = decompress_batch(container, model)
    elapsed = _elapsed_ms(start, config)
    if decoded != [voxelize(pc, model.depth) for pc in clouds]:
        raise CodecError(f"bits-back round trip failed at d={model.depth}, B={len(clouds)}")
    rep = report(container)
    logger.info(f"bitsback d={model.depth} B={len(clouds)}: {rep.bpp:.4f} bpp, "
                f"compression ratio {rep.compression_ratio:.4f}")
    return BenchRow(METHOD_BITSBACK, model.depth, len(clouds), rep.bpp, container.payload_bytes,
                    decoder_size_bytes(model), elapsed)


def run_sequential_cell(model: CvaeModel, clouds: Sequence[PointCloud], config: BenchConfig) -> BenchRow:
    start = time.perf_counter()
    sc = seq_compress(clouds, model, model.depth)
    decoded = seq_decompress(sc)
    elapsed = _elapsed_ms(start, config)
    if decoded != [voxelize(pc, model.depth) for pc in clouds]:
        raise CodecError(f"sequential round trip failed at d={model.depth}, B={len(clouds)}")
    overhead = seq_overhead_bytes(len(clouds), model.depth, config.bytes_per_entry)
    logger.info(f"sequential d={model.depth} B={len(clouds)}: {sc.bpp:.4f} bpp, decoder tables {overhead} bytes")
    return BenchRow(METHOD_SEQUENTIAL, model.depth, len(clouds), sc.bpp, sc.payload_bytes, overhead, elapsed)


def rows_to_frame(rows: Sequence[BenchRow]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(r) for r in rows], columns=BENCH_COLUMNS)
    return frame.sort_values(['method', 'd', 'B'], kind='mergesort').reset_index(drop=True)


def write_rows(rows: Sequence[BenchRow], path: Union[str, Path]) -> pd.DataFrame:
    frame = rows_to_frame(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format='%.6f')
    logger.info(f"✅ Wrote {len(frame)} rows to {path}")
    return frame


def _model_for(config: BenchConfig, depth: int, models: Optional[Dict[int, CvaeModel]]) -> CvaeModel:
    if models is not None and depth in models:
        return models[depth]
    return load_or_train_model(config, depth)


def cmd_sweep_batch(config: BenchConfig, models: Optional[Dict[int, CvaeModel]] = None) -> pd.DataFrame:
    """bpp theo B cho cả hai method, tại config.depth"""
    model = _model_for(config, config.depth, models)
    clouds = eval_clouds(config, max(config.batches))
    rows = []
    for b in config.batches:
        rows.append(run_bitsback_cell(model, clouds[:b], config))
        rows.append(run_sequential_cell(model, clouds[:b], config))
    return write_rows(rows, Path(config.out_dir) / 'sweep_batch.csv')


def cmd_sweep_depth(config: BenchConfig, models: Optional[Dict[int, CvaeModel]] = None) -> pd.DataFrame:
    """bpp và decoder bytes theo d, tại B = max(batches)"""
    b = max(config.batches)
    clouds = eval_clouds(config, b)
    rows = []
    for d in config.depths:
        model = _model_for(config, d, models)
        rows.append(run_bitsback_cell(model, clouds, config))
        rows.append(run_sequential_cell(model, clouds, config))
    return write_rows(rows, Path(config.out_dir) / 'sweep_depth.csv')


# ---------------------------------------------------------------------------
# Artifact commands
# ---------------------------------------------------------------------------

def cmd_gen(out_dir: Union[str, Path], flavour: str, clouds: int, points: int, seed: int) -> List[Path]:
    """Ghi dataset tổng hợp ra out_dir/cloud_XXXX.xyz"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, pc in enumerate(gen_dataset(flavour, clouds, points, seed)):
        path = out_dir / f"cloud_{i:04d}{POINT_FILE_SUFFIX}"
        save_points(pc, path)
        paths.append(path)
    logger.info(f"✅ Wrote {len(paths)} point files to {out_dir}")
    return paths


def cmd_train(input_dir: Union[str, Path], config: BenchConfig, model_path: Union[str, Path],
              depth: Optional[int] = None) -> TrainResult:
    """Train trên phần train của input_dir, log -ELBO trên phần test"""
    depth = config.depth if depth is None else depth
    clouds = load_point_dir(input_dir)
    train_clouds, test_clouds = train_test_split(clouds, config.test_fraction, config.dataset_seed)
    if not train_clouds:
        raise RejectedInputError("training split is empty")
    result = train_model(config, depth, train_clouds)
    serialize(result.model, model_path)
    if test_clouds:
        held_out = evaluate(result.model, [voxelize(pc, depth) for pc in test_clouds], config.train_seed)
        logger.info(f"Held-out -ELBO: {held_out.neg_elbo_bits:.2f} bits/grid "
                    f"(recon {held_out.recon_bits:.2f}, kl {held_out.kl_bits:.2f})")
    return result


def cmd_compress(input_dir: Union[str, Path], model_path: Union[str, Path], out_path: Union[str, Path],
                 p_bits: int = DEFAULT_P_BITS, seed: int = 0, depth: Optional[int] = None,
                 verify: bool = False) -> CodeLengthReport:
    model = deserialize(model_path)
    depth = model.depth if depth is None else depth
    clouds = load_point_dir(input_dir)
    container = compress_batch(clouds, model, depth, p_bits, seed)
    if verify:
        ok = decompress_batch(container, model) == [voxelize(pc, depth) for pc in clouds]
        logger.info(f"lossless: {str(ok).lower()}")
        if not ok:
            raise CodecError("round trip check failed after compression")
    save_container(container, out_path)
    rep = report(container)
    logger.info(f"B={rep.batch_size} total {rep.total_bits} bits, {rep.bpp:.4f} bpp, "
                f"ratio {rep.compression_ratio:.4f} vs float32")
    return rep


def cmd_decompress(container_path: Union[str, Path], model_path: Union[str, Path],
                   out_dir: Optional[Union[str, Path]] = None,
                   verify_dir: Optional[Union[str, Path]] = None, verify: bool = False) -> bool:
    """
    Giải nén container.
    Args:
        verify: xác nhận lossless dựa trên việc message trở về đúng initial state đã seed
        verify_dir: các point file gốc để so sánh bitwise thêm (ngụ ý verify)
    Returns:
        True nếu lossless đã được kiểm tra (hoặc không yêu cầu kiểm tra)
    """
    container = load_container(container_path)
    model = deserialize(model_path)
    grids = decompress_batch(container, model)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, grid in enumerate(grids):
            save_points(devoxelize(grid), out_dir / f"decoded_{i:04d}{POINT_FILE_SUFFIX}")
    if verify_dir is None:
        if verify:
            # decompress_batch raises unless the message unwound to the seeded state
            logger.info(f"lossless: true ({len(grids)} grid(s), residual state equals the initial bits)")
        else:
            logger.info(f"Decoded {len(grids)} grid(s)")
        return True
    originals = [voxelize(pc, container.depth) for pc in load_point_dir(verify_dir)]
    ok = grids == originals
    logger.info(f"lossless: {str(ok).lower()}")
    if not ok:
        raise CodecError("decoded grids differ from the voxelized originals")
    return ok


def cmd_eval(model_path: Union[str, Path], config: BenchConfig, clouds: Optional[int] = None) -> EvalResult:
    """Mean -ELBO (bits/grid) trên một tập held-out mới sinh"""
    model = deserialize(model_path)
    test = eval_clouds(config, clouds or config.clouds)
    result = evaluate(model, [voxelize(pc, model.depth) for pc in test], config.seed)
    logger.info(f"-ELBO {result.neg_elbo_bits:.2f} bits/grid over {result.count} clouds "
                f"(recon {result.recon_bits:.2f}, kl {result.kl_bits:.2f}, "
                f"{result.neg_elbo_bits / config.points:.4f} bits/point)")
    return result


__all__ = [
    'BENCH_COLUMNS', 'BenchConfig', 'BenchRow', 'bench_dataset', 'eval_clouds', 'train_model',
    'load_or_train_model', 'run_bitsback_cell', 'run_sequential_cell', 'rows_to_frame', 'write_rows',
    'cmd_gen', 'cmd_train', 'cmd_compress', 'cmd_decompress', 'cmd_eval',
    'cmd_sweep_batch', 'cmd_sweep_depth', 'load_point_dir', 'point_files',
]
