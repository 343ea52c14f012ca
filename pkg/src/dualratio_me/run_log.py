from csv import DictReader, DictWriter
from dataclasses import asdict, dataclass, field
from datetime import datetime
import hashlib
from io import TextIOWrapper
import json
import logging
from pathlib import Path
import threading
from typing import Any, TypedDict

from . import __version__


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(',', ':'), default=str)


def compute_run_id(command: str, inputs: dict[str, Any], seed: int | None, version: str = __version__) -> str:
    """
    Short sha1 over everything that determines a command's results.
    Wall-clock data is excluded so reruns produce the same id.
    """
    payload = canonical_json({'command': command, 'inputs': inputs, 'seed': seed, 'version': version})
    return hashlib.sha1(payload.encode('utf-8')).hexdigest()[:12]


@dataclass
class RunManifest:
    command: str
    # config paths or preset names, plus the parsed inputs that produced the results
    inputs: dict[str, Any]
    seed: int | None
    version: str = __version__
    outputs: list[str] = field(default_factory=list)
    duration_s: float = 0.0

    @property
    def run_id(self) -> str:
        return compute_run_id(self.command, self.inputs, self.seed, self.version)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d['run_id'] = self.run_id
        return d

    def write(self, path: Path) -> Path:
        path = Path(path)
        with open(path, 'w', newline='\n') as f:
            json.dump(self.to_dict(), f, indent=2, default=str)
            f.write('\n')
        return path


class RunLogRow(TypedDict):
    run_id: str
    command: str
    inputs: str
    seed: str
    version: str
    outputs: str
    duration_s: str
    finished: str


class RunLog:
    """
    Append-only CSV log with one row per command run.
    thread-safe
    """

    lock: threading.RLock

    filepath: Path
    "path to csv file"

    file: TextIOWrapper | None

    # if these change, an existing log cannot be appended to and must be moved
    columns: list[str] = [
        'run_id',
        'command',
        'inputs',
        'seed',
        'version',
        'outputs',
        'duration_s',
        'finished',
    ]

    datetime_format = '%Y-%m-%d %H:%M:%S'

    def __init__(self, filepath: str | Path) -> None:
        """
        Open the log for appending, writing the header to a new or empty file.
        @throws ValueError if filepath is a directory or the existing header differs
        """
        filepath = Path(filepath)
        self.filepath = filepath
        self.lock = threading.RLock()
        self.file = None

        if filepath.is_dir():
            raise ValueError(f'run log path is a directory: {filepath}')

        is_newfile = not filepath.exists() or filepath.stat().st_size == 0
        if not is_newfile:
            self._check_existing_file()

        self.file = open(filepath, 'a', newline='')
        self.writer = DictWriter(self.file, fieldnames=self.columns, dialect='excel')
        if is_newfile:
            self.writer.writeheader()
            self.file.flush()

    def _check_existing_file(self):
        with open(self.filepath, 'r', newline='') as f:
            r = DictReader(f, dialect='excel')
            if self.columns != r.fieldnames:
                raise ValueError(f"Cannot append to run log '{self.filepath.resolve()}'; columns have changed since it was written")

    def log(self, manifest: RunManifest):
        row: RunLogRow = {
            'run_id': manifest.run_id,
            'command': manifest.command,
            'inputs': canonical_json(manifest.inputs),
            'seed': '' if manifest.seed is None else str(manifest.seed),
            'version': manifest.version,
            'outputs': ';'.join(manifest.outputs),
            'duration_s': f'{manifest.duration_s:.3f}',
            'finished': datetime.now().strftime(self.datetime_format),
        }
        with self.lock:
            assert self.file is not None
            self.writer.writerow(row)
            self.file.flush()
        logging.debug(f'run log: {manifest.command} {manifest.run_id}')

    def close(self):
        with self.lock:
            if self.file:
                self.file.close()
