"""
File formats: dataset and loading CSVs, sparse model files, JSON documents
and result CSVs. Numbers are written with 17 significant digits, a period
decimal separator and LF line endings.
"""
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Sequence, Tuple
import json
import math
import os
import re
import numpy as np
import pandas as pd
from config.logging_config import get_logger
from core.exceptions import DataIOError, DimensionMismatch, ParseError
from core.types import Dataset, Loading, validate_dataset, validate_loading

logger = get_logger('cli')

OUTCOME_COLUMN = 'y'
INTERCEPT_COLUMN = 'intercept'
FLOAT_FORMAT = '%.17g'

_PANDAS_LINE = re.compile(r'line (\d+)')


def format_float(value: float) -> str:
    return format(float(value), '.17g')


def _read_table(path: Path) -> pd.DataFrame:
    """Numeric CSV with a header; every parse problem is reported with its 1-based file line."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except FileNotFoundError:
        raise DataIOError(f"{path}: file not found")
    except pd.errors.EmptyDataError:
        raise ParseError(str(path), 1, "empty file")
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise ParseError(str(path), int(match.group(1)) if match else 0, str(e).strip())
    except OSError as e:
        raise DataIOError(f"{path}: {str(e)}")

    columns = [str(c).strip() for c in frame.columns]
    if len(set(columns)) != len(columns):
        raise ParseError(str(path), 1, "duplicate column names in header")
    frame.columns = columns

    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        row = int(np.flatnonzero(short)[0])
        got = int(frame.iloc[row].notna().sum())
        raise ParseError(str(path), row + 2, f"expected {len(columns)} fields, got {got}")

    values = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors='coerce'))
    bad = values.isna().to_numpy()
    if bad.any():
        row, col = (int(i[0]) for i in np.nonzero(bad))
        raise ParseError(
            str(path), row + 2, f"column '{columns[col]}': cannot parse {frame.iat[row, col]!r} as a number"
        )
    return values.astype(float)


def read_dataset(path: Path, add_intercept: bool = False) -> Tuple[Dataset, List[str]]:
    """
    Dataset CSV: header row, a ``y`` column of 0/1 outcomes and the feature
    columns in order. ``add_intercept`` prepends an all-ones ``intercept``
    column; a first feature column already named ``intercept`` is treated
    as the intercept and checked.
    """
    table = _read_table(path)
    if OUTCOME_COLUMN not in table.columns:
        raise ParseError(str(path), 1, f"missing outcome column '{OUTCOME_COLUMN}'")
    features = [c for c in table.columns if c != OUTCOME_COLUMN]
    if not features:
        raise ParseError(str(path), 1, "no feature columns")
    x = table[features].to_numpy(dtype=float)
    y = table[OUTCOME_COLUMN].to_numpy(dtype=float)

    if add_intercept:
        if features[0] == INTERCEPT_COLUMN:
            raise ParseError(str(path), 1, "dataset already has an intercept column")
        x = np.column_stack([np.ones(x.shape[0]), x])
        features = [INTERCEPT_COLUMN] + features
    has_intercept = features[0] == INTERCEPT_COLUMN
    data = validate_dataset(x, y, has_intercept_column=has_intercept)
    logger.info(f"Read dataset {path}: n={data.n}, p={data.p}, intercept={has_intercept}")
    return data, features


def read_loadings(path: Path, feature_names: Sequence[str]) -> List[Loading]:
    """Loading CSV: one loading per row, header equal to the dataset's feature columns."""
    table = _read_table(path)
    if list(table.columns) != list(feature_names):
        raise DimensionMismatch(
            f"loading columns {list(table.columns)} do not match dataset columns {list(feature_names)}"
        )
    if table.shape[0] == 0:
        raise ParseError(str(path), 2, "no loading rows")
    return [validate_loading(row, len(feature_names)) for row in table.to_numpy(dtype=float)]


def write_model(path: Path, beta_hat: np.ndarray, feature_names: Sequence[str], zero_threshold: float = 0.0) -> None:
    """Sparse model file: one ``index,name,value`` row per nonzero coefficient (0-based index)."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    keep = np.flatnonzero(np.abs(beta_hat) > zero_threshold)
    frame = pd.DataFrame({
        'index': keep,
        'name': [feature_names[j] for j in keep],
        'value': beta_hat[keep],
    })
    write_csv(path, frame)


def read_model(path: Path, p: int) -> np.ndarray:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={'index': str, 'name': str, 'value': str}, keep_default_na=False)
    except FileNotFoundError:
        raise DataIOError(f"{path}: file not found")
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise ParseError(str(path), int(match.group(1)) if match else 0, str(e).strip())
    if list(frame.columns) != ['index', 'name', 'value']:
        raise ParseError(str(path), 1, "model header must be 'index,name,value'")
    beta = np.zeros(p)
    for row, (idx, val) in enumerate(zip(frame['index'], frame['value'])):
        try:
            j = int(idx)
            v = float(val)
        except ValueError:
            raise ParseError(str(path), row + 2, f"cannot parse entry ({idx!r}, {val!r})")
        if not 0 <= j < p:
            raise ParseError(str(path), row + 2, f"index {j} outside [0, {p})")
        beta[j] = v
    return beta


@contextmanager
def writing(path: Path) -> Iterator[Path]:
    """Create the parent directory; any OS failure while writing becomes DataIOError."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        yield path
    except OSError as e:
        raise DataIOError(f"{path}: cannot write: {str(e)}")


def write_csv(path: Path, frame: pd.DataFrame) -> None:
    with writing(path) as path:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n', na_rep='')


def _encode(value: Any) -> str:
    if value is None:
        return 'null'
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value) if math.isfinite(value) else 'null'
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, np.ndarray):
        return _encode(value.tolist())
    if isinstance(value, dict):
        items = (f"{json.dumps(str(k))}: {_encode(v)}" for k, v in sorted(value.items()))
        return '{' + ', '.join(items) + '}'
    if isinstance(value, (list, tuple)):
        return '[' + ', '.join(_encode(v) for v in value) + ']'
    raise TypeError(f"cannot encode {type(value).__name__} as JSON")


def to_json(payload: Any) -> str:
    """JSON text with sorted keys, 17-significant-digit floats and non-finite numbers as null."""
    return _encode(payload) + '\n'


def write_json(path: Path, payload: Any) -> None:
    text = to_json(payload)
    with writing(path) as path:
        tmp = path.with_name(path.name + '.tmp')
        with open(tmp, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        os.replace(tmp, path)


def read_json(path: Path) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        raise DataIOError(f"{path}: file not found")
    except json.JSONDecodeError as e:
        raise ParseError(str(path), e.lineno, e.msg)
