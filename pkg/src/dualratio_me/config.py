import logging
import os
from pathlib import Path
from typing import Any, Optional

import tomlkit
from tomlkit.container import Container
from tomlkit.exceptions import ParseError
from tomlkit.items import Item, Table

from .errors import ConfigError

# environment variable overriding [paths] output
OUTPUT_ENV_VAR = 'DUALRATIO_ME_OUTPUT'

LOG_LEVELS = ('debug', 'info', 'warning', 'error', 'critical')

# mapping of Config attribute to config.toml path
# by convention, names ending with _dir or _file become Path values.
# default - value used when the property is missing from config.toml
config_map: dict[str, dict[str, Any]] = {
    'log_level': {
        'toml_path': ('logging', 'level'),
        'default': 'info',
    },
    'log_format': {
        'toml_path': ('logging', 'format'),
        'default': '%(levelname)s: %(message)s',
    },
    'output_dir': {
        'toml_path': ('paths', 'output'),
        'default': 'results',
    },
    'run_log_file': {
        'toml_path': ('paths', 'run_log'),
        'default': None,
    },
    'mc_replications': {
        'toml_path': ('monte_carlo', 'replications'),
        'default': 20000,
    },
    'mc_sample_size': {
        'toml_path': ('monte_carlo', 'sample_size'),
        'default': 500,
    },
    'mc_seed': {
        'toml_path': ('monte_carlo', 'seed'),
        'default': 12345,
    },
    'mc_workers': {
        'toml_path': ('monte_carlo', 'workers'),
        'default': 1,
    },
    'mc_max_flagged_fraction': {
        'toml_path': ('monte_carlo', 'max_flagged_fraction'),
        'default': 0.001,
    },
    'flag_threshold': {
        'toml_path': ('analysis', 'flag_threshold'),
        'default': 0.05,
    },
    'yp_member': {
        'toml_path': ('analysis', 'yp_member'),
        'default': 'yp1',
    },
}


def resolve_toml_path(doc: tomlkit.TOMLDocument, toml_path: tuple[str, ...]) -> Any:
    """
    Follow toml_path through nested tables.
    @throws KeyError if any segment is missing
    """
    item: Any = doc
    for segment in toml_path:
        if not isinstance(item, (Container, Table)):
            raise KeyError(segment)
        item = item[segment]
    return item.value if isinstance(item, Item) else item


class Config:
    """
    Application configuration from config.toml. Every attribute in config_map is always set,
    to its default when the file or the key is missing.
    """

    # path to file used for this Config, None when running on defaults
    config_file: Optional[Path]

    log_level: str
    log_format: str
    output_dir: Path
    run_log_file: Optional[Path]

    mc_replications: int
    mc_sample_size: int
    mc_seed: int
    mc_workers: int
    mc_max_flagged_fraction: float

    # relative difference above which a reproduced cell is flagged
    flag_threshold: float
    # diff_cum_dual member used by the efficiency predicates
    yp_member: str

    def __init__(self, path: Optional[Path] = None) -> None:
        """
        @param path: explicit config file, must exist. Otherwise ./config.toml is used if present.
        @throws ConfigError for a missing explicit file or a malformed one
        """
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ConfigError(f'config file not found: {path}')
        else:
            path = self.find_config()

        self.config_file = path.resolve() if path else None

        if self.config_file is None:
            logging.debug('config.toml not found, using defaults')
            self.load_config(tomlkit.document())
        else:
            self.__read_config_file()

    def __read_config_file(self):
        assert self.config_file is not None
        try:
            with open(self.config_file, 'r', newline='') as f:
                toml_doc = tomlkit.load(f)
        except ParseError as e:
            raise ConfigError(f'{self.config_file}: {e}') from e

        self.load_config(toml_doc)
        logging.debug(f'loaded config toml: {self.config_file}')

    @staticmethod
    def find_config() -> Optional[Path]:
        p = Path('config.toml')
        return p if p.is_file() else None

    def load_config(self, toml_doc: tomlkit.TOMLDocument):
        """
        Set every config_map attribute from toml_doc, falling back to its default.
        @throws ConfigError for values of the wrong type
        """
        for attr, info in config_map.items():
            toml_path = info['toml_path']
            try:
                value = resolve_toml_path(toml_doc, toml_path)
            except KeyError:
                if self.config_file is not None:
                    logging.debug(f'{self.config_file} missing "{".".join(toml_path)}", using default')
                value = info['default']

            default = info['default']
            if value is not None and default is not None and not isinstance(value, type(default)):
                # ints are acceptable where a float default is declared
                if not (isinstance(default, float) and isinstance(value, int)):
                    raise ConfigError(f'[{toml_path[0]}] {toml_path[-1]} should be {type(default).__name__}, got {value!r}')

            if value is not None and (attr.endswith('_dir') or attr.endswith('_file')):
                value = Path(value)

            setattr(self, attr, value)

        if str(self.log_level).lower() not in LOG_LEVELS:
            raise ConfigError(f'[logging] level must be one of {", ".join(LOG_LEVELS)}, got {self.log_level!r}')

        env_output = os.environ.get(OUTPUT_ENV_VAR)
        if env_output:
            self.output_dir = Path(env_output)

    def setup_logging(self, verbose: bool = False):
        level = 'DEBUG' if verbose else self.log_level.upper()
        logging.basicConfig(level=level, format=self.log_format, force=True)

    def resolve_output_dir(self, out: Optional[Path] = None) -> Path:
        """--out wins over the environment variable, which wins over [paths] output."""
        output = Path(out) if out is not None else self.output_dir
        output.mkdir(parents=True, exist_ok=True)
        return output
