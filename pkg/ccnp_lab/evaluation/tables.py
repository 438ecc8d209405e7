"""
CSV output shared by every command: header row, CRLF line endings and
17 significant digits so floats re-parse to the same value.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping

import pandas as pd

FLOAT_FORMAT = "%.17g"


def write_csv(rows: "pd.DataFrame | Iterable[Mapping]", path: "str | Path", columns: list[str] | None = None) -> Path:
    df = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\r\n")
    return path


def read_csv(path: "str | Path") -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")
