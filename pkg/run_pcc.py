#!/usr/bin/env python3
"""
Point cloud bits-back compression toolkit - command line

Usage:
    python run_pcc.py gen --out data/train --clouds 200 --points 2000
    python run_pcc.py train --input data/train --depth 4 --epochs 30 --model models/cvae_d4.bin
    python run_pcc.py compress --input data/test --model models/cvae_d4.bin --out batch.bbpc --verify
    python run_pcc.py decompress --input batch.bbpc --model models/cvae_d4.bin --out decoded --verify data/test
    python run_pcc.py sweep-batch --depth 4 --batch 1 10 100
    python run_pcc.py sweep-depth --depth 3 4 5 --batch 100
    python run_pcc.py eval --model models/cvae_d4.bin

Mặc định lấy từ config/config.yaml; flag trên command line ghi đè config.
"""

import sys
import logging
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent))

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

COMMANDS = ('gen', 'train', 'compress', 'decompress', 'sweep-batch', 'sweep-depth', 'eval')


def build_parser():
    import argparse

    parser = argparse.ArgumentParser(description='Lossless point cloud geometry compression (bits-back + CVAE)')
    parser.add_argument('command', choices=COMMANDS, help='Sub-command to run')
    parser.add_argument('--config', help='YAML config (default: config/config.yaml)')
    parser.add_argument('--depth', type=int, nargs='+', help='Voxel bit-depth d (a list for sweep-depth)')
    parser.add_argument('--batch', type=int, nargs='+', help='Batch size(s) B for the sweeps')
    parser.add_argument('--pbits', type=int, help='Latent bucket precision p_bits')
    parser.add_argument('--model', help='CVAE weight file; a {d} template is filled with the bit-depth')
    parser.add_argument('--seed', type=int, help='Seed (dataset for gen, training for train, initial bits for compress and the sweeps)')
    parser.add_argument('--epochs', type=int, help='Training epochs')
    parser.add_argument('--lr', type=float, help='Adam learning rate')
    parser.add_argument('--verify', nargs='?', const='', default=None,
                        help='Check the round trip; decompress also takes an optional directory of original point files')
    parser.add_argument('--out', help='Output directory / container path')
    parser.add_argument('--input', help='Input directory / container path')
    parser.add_argument('--flavour', choices=('objects', 'scenes'), help='Synthetic dataset flavour')
    parser.add_argument('--clouds', type=int, help='Number of clouds to generate / evaluate')
    parser.add_argument('--points', type=int, help='Points per generated cloud')
    parser.add_argument('--timing', action='store_true', help='Record wall time in bench CSVs')
    return parser


def _require(value, flag: str, command: str):
    from modules.errors import ConfigurationError

    if value is None or value == '':
        raise ConfigurationError(f"'{command}' needs {flag}")
    return value


def run(args) -> int:
    from modules import bench
    from modules.errors import ConfigurationError
    from modules.settings_manager import get_settings_manager

    settings = get_settings_manager(args.config)
    first_depth = args.depth[0] if args.depth else None
    config = bench.BenchConfig.from_settings(
        settings,
        flavour=args.flavour, clouds=args.clouds, points=args.points,
        depth=first_depth, depths=args.depth, batches=args.batch, p_bits=args.pbits,
        epochs=args.epochs, lr=args.lr, model_path=args.model,
        out_dir=args.out if args.command.startswith('sweep') else None,
        record_wall_time=True if args.timing else None,
    )
    model_path = str(config.model_path_for(config.depth))
    if args.command == 'sweep-depth' and len(config.depths) > 1 and '{d}' not in config.model_path:
        raise ConfigurationError(f"--model {config.model_path} names one weight file; sweep-depth needs a '{{d}}' template")
    if args.command.startswith('sweep') and args.seed is not None:
        config.seed = args.seed

    if args.command == 'gen':
        seed = config.dataset_seed if args.seed is None else args.seed
        bench.cmd_gen(_require(args.out, '--out', 'gen'), config.flavour, config.clouds, config.points, seed)
    elif args.command == 'train':
        if args.seed is not None:
            config.train_seed = args.seed
        bench.cmd_train(_require(args.input, '--input', 'train'), config, model_path, config.depth)
    elif args.command == 'compress':
        seed = config.seed if args.seed is None else args.seed
        bench.cmd_compress(_require(args.input, '--input', 'compress'), model_path,
                           _require(args.out, '--out', 'compress'), config.p_bits, seed,
                           depth=first_depth, verify=args.verify is not None)
    elif args.command == 'decompress':
        bench.cmd_decompress(_require(args.input, '--input', 'decompress'), model_path,
                             out_dir=args.out, verify_dir=args.verify or None, verify=args.verify is not None)
    elif args.command == 'sweep-batch':
        print(bench.cmd_sweep_batch(config).to_string(index=False))
    elif args.command == 'sweep-depth':
        print(bench.cmd_sweep_depth(config).to_string(index=False))
    elif args.command == 'eval':
        if args.seed is not None:
            config.seed = args.seed
        bench.cmd_eval(model_path, config)
    return 0


def main(argv=None) -> int:
    """Main entry point"""
    from modules.errors import PccError

    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except PccError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130


if __name__ == '__main__':
    sys.exit(main())
