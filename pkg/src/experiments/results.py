"""Plot-ready result files and the machine-readable run summary."""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

NUMBER_FORMAT = '%.10e'
DELIMITER = '\t'


class ResultWriter:
    """
    Writes every output of one run into a single directory.

    Tables are delimiter-separated text with a '#' header naming each column
    and its unit; floats use one fixed format so identical runs produce
    identical bytes.
    """
    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: List[str] = []

    def _path(self, name: str) -> Path:
        path = self.output_dir / name
        self.outputs.append(name)
        return path

    def write_table(self, name: str, columns: Sequence[str], data, comments: Sequence[str] = (),
                    formats: Optional[Sequence[str]] = None) -> Path:
        """
        Args:
            name: File name inside the output directory
            columns: Column names with units, e.g. 'range_m'
            data: 2-D array (rows x columns) or a list of row tuples
            comments: Extra '#' lines written above the column header
            formats: Per-column printf formats; NUMBER_FORMAT by default
        """
        rows = data if isinstance(data, np.ndarray) else np.array(data, dtype=object)
        rows = np.atleast_2d(rows)
        if rows.size and rows.shape[1] != len(columns):
            raise ValueError(f"{name}: {rows.shape[1]} columns of data for {len(columns)} names")
        fmt = list(formats) if formats is not None else [NUMBER_FORMAT] * len(columns)
        header = "\n".join(list(comments) + [DELIMITER.join(columns)])
        path = self._path(name)
        np.savetxt(path, rows, fmt=fmt, delimiter=DELIMITER, header=header, comments='# ')
        logger.debug("wrote %s (%d rows)", path, len(rows))
        return path

    def write_lines(self, name: str, lines: Iterable[str], header: Sequence[str] = ()) -> Path:
        path = self._path(name)
        with open(path, 'w') as handle:
            for line in header:
                handle.write(f"# {line}\n")
            for line in lines:
                handle.write(line + "\n")
        return path

    def write_summary(self, summary: Dict[str, Any], name: str = 'summary.json') -> Path:
        path = self.output_dir / name
        with open(path, 'w') as handle:
            json.dump(summary, handle, indent=2, sort_keys=True, default=_to_builtin)
        return path


def _to_builtin(value):
    """JSON fallback for numpy scalars and arrays"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
