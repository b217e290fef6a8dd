"""
Settings Manager - Quản lý cấu hình codec, training, dataset và bench
Tự động load config/config.yaml, điền giá trị mặc định khi thiếu key
"""
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from modules.config_loader import load_config_with_env
from modules.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Dict[str, Any]] = {
    'codec': {
        'depth': 4,
        'latent_dim': 50,
        'p_bits': 12,
        'seed': 0,
    },
    'model': {
        'hidden': 500,
        'channels': [8, 16, 32],
        'path': 'models/cvae_d{d}.bin',
    },
    'train': {
        'epochs': 30,
        'lr': 0.001,
        'batch_size': 16,
        'seed': 0,
    },
    'dataset': {
        'flavour': 'objects',
        'clouds': 200,
        'points': 2000,
        'test_fraction': 0.25,
        'seed': 7,
    },
    'bench': {
        'depths': [3, 4, 5],
        'batches': [1, 10, 100],
        'bytes_per_entry': 4,
        'record_wall_time': False,
        'out_dir': 'bench_out',
    },
}


class SettingsManager:
    """Manager để đọc các section của config.yaml"""

    def __init__(self, config_path: Optional[Union[str, Path]] = None):
        self.config_path = config_path
        self.config = self._load_config()

    def _load_config(self) -> Dict:
        """Load config từ YAML file với env vars"""
        try:
            return load_config_with_env(self.config_path)
        except ConfigurationError as e:
            if self.config_path is None:
                logger.warning(f"Default config unavailable ({e}), using built-in defaults")
                return {}
            logger.error(f"Không thể load config: {e}")
            raise

    def _section(self, name: str) -> Dict[str, Any]:
        section = dict(DEFAULTS[name])
        loaded = self.config.get(name) or {}
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"Section '{name}' must be a mapping")
        unknown = set(loaded) - set(section)
        if unknown:
            logger.warning(f"Ignoring unknown keys in section '{name}': {sorted(unknown)}")
        section.update({k: v for k, v in loaded.items() if k in section})
        return section

    def get_codec_config(self) -> Dict[str, Any]:
        """depth, latent_dim, p_bits, seed"""
        codec = self._section('codec')
        codec['depth'] = int(codec['depth'])
        codec['latent_dim'] = int(codec['latent_dim'])
        codec['p_bits'] = int(codec['p_bits'])
        codec['seed'] = int(codec['seed'])
        return codec

    def get_model_config(self) -> Dict[str, Any]:
        model = self._section('model')
        model['hidden'] = int(model['hidden'])
        model['channels'] = [int(c) for c in model['channels']]
        return model

    def get_train_config(self) -> Dict[str, Any]:
        train = self._section('train')
        train['epochs'] = int(train['epochs'])
        train['lr'] = float(train['lr'])
        train['batch_size'] = int(train['batch_size'])
        train['seed'] = int(train['seed'])
        return train

    def get_dataset_config(self) -> Dict[str, Any]:
        dataset = self._section('dataset')
        dataset['clouds'] = int(dataset['clouds'])
        dataset['points'] = int(dataset['points'])
        dataset['test_fraction'] = float(dataset['test_fraction'])
        dataset['seed'] = int(dataset['seed'])
        return dataset

    def get_bench_config(self) -> Dict[str, Any]:
        bench = self._section('bench')
        bench['depths'] = [int(d) for d in bench['depths']]
        bench['batches'] = [int(b) for b in bench['batches']]
        bench['bytes_per_entry'] = int(bench['bytes_per_entry'])
        bench['record_wall_time'] = bool(bench['record_wall_time'])
        return bench

    def model_path_for(self, depth: int) -> str:
        """Đường dẫn weight file cho một bit-depth"""
        return self.get_model_config()['path'].format(d=depth)


# Singleton instance
_settings_manager: Optional[SettingsManager] = None


def get_settings_manager(config_path: Optional[Union[str, Path]] = None) -> SettingsManager:
    """Lấy singleton instance của SettingsManager (truyền config_path để load lại)"""
    global _settings_manager
    if _settings_manager is None or config_path is not None:
        _settings_manager = SettingsManager(config_path)
    return _settings_manager
