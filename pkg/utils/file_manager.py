"""
File Manager for the sub-Finsler toolkit
Single writer for run artifacts: curve CSVs, JSON reports and plot scripts.
Writes of a run are staged in memory and flushed together at the end.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from models.data_models import serialize_for_json

logger = logging.getLogger(__name__)


class FileManagerError(Exception):
    """Custom exception for FileManager operations"""
    pass


def format_float(value: Any) -> str:
    """Shortest round-tripping text for numbers, empty for missing values"""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def render_json(data: Any) -> str:
    return json.dumps(serialize_for_json(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(value) for value in row])
    return buffer.getvalue()


class FileManager:
    """Stages text artifacts and writes them atomically on flush"""

    def __init__(self, base_dir: Union[str, Path, None] = None):
        self.base_dir = Path(base_dir or ".").resolve()
        self._staged: Dict[Path, str] = {}

    def _resolve(self, filename: Union[str, Path]) -> Path:
        if not str(filename):
            raise FileManagerError("Filename cannot be empty")
        path = Path(filename)
        return path if path.is_absolute() else self.base_dir / path

    def stage_text(self, filename: Union[str, Path], content: str) -> Path:
        path = self._resolve(filename)
        self._staged[path] = content
        logger.debug(f"Staged {path} ({len(content)} characters)")
        return path

    def stage_json(self, filename: Union[str, Path], data: Any) -> Path:
        return self.stage_text(filename, render_json(data))

    def stage_csv(self, filename: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        return self.stage_text(filename, render_csv(header, rows))

    @property
    def staged(self) -> List[Path]:
        return sorted(self._staged)

    def discard(self) -> None:
        self._staged.clear()

    def flush(self) -> List[Path]:
        """Write every staged file through a temporary sibling and an atomic replace"""
        written = []
        for path in sorted(self._staged):
            content = self._staged[path]
            temp_path = path.with_suffix(path.suffix + '.tmp')
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(temp_path, 'w', encoding='utf-8', newline='') as f:
                    f.write(content)
                temp_path.replace(path)
            except PermissionError as e:
                logger.error(f"Permission denied writing {path}")
                raise FileManagerError(f"Permission denied writing {path}") from e
            except OSError as e:
                logger.error(f"OS error writing {path}: {e}")
                raise FileManagerError(f"OS error writing {path}: {e}") from e
            written.append(path)
            logger.info(f"File saved successfully: {path}")
        self._staged.clear()
        return written

    def read_json(self, filename: Union[str, Path]) -> Any:
        path = self._resolve(filename)
        try:
            with open(path, encoding='utf-8') as f:
                return json.load(f)
        except FileNotFoundError as e:
            raise FileManagerError(f"File not found: {path}") from e
        except json.JSONDecodeError as e:
            raise FileManagerError(f"{path} is not valid JSON: {e.msg}") from e
        except OSError as e:
            raise FileManagerError(f"OS error reading {path}: {e}") from e

    def read_csv(self, filename: Union[str, Path]) -> Tuple[List[str], List[List[str]]]:
        path = self._resolve(filename)
        try:
            with open(path, encoding='utf-8', newline='') as f:
                rows = list(csv.reader(f))
        except FileNotFoundError as e:
            raise FileManagerError(f"File not found: {path}") from e
        except OSError as e:
            raise FileManagerError(f"OS error reading {path}: {e}") from e
        if not rows:
            raise FileManagerError(f"{path} is empty")
        return rows[0], rows[1:]


def sibling(path: Union[str, Path], suffix: str, stem_suffix: str = "") -> Path:
    """Path next to `path` with another suffix, e.g. out.json -> out.csv"""
    path = Path(path)
    return path.with_name(path.stem + stem_suffix + suffix)


def output_paths(output: Optional[Union[str, Path]], default_stem: str) -> Dict[str, Path]:
    """JSON report, CSV curve and gnuplot script locations for one run"""
    base = Path(output) if output else Path(default_stem + ".json")
    if base.suffix.lower() == '.csv':
        return {'json': base.with_suffix('.json'), 'csv': base, 'plot': base.with_suffix('.gp')}
    return {'json': base if base.suffix else base.with_suffix('.json'),
            'csv': sibling(base, '.csv'), 'plot': sibling(base, '.gp')}
