"""Reading time series from CSV (or previously written fit documents)."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import SpaceContract, TimeSeries
from .errors import InvalidInput
from .spaces.euclidean import EuclideanSpace
from .spaces.spd import SPDSpace
from .spaces.wasserstein import DEFAULT_GRID, WassersteinSpace, monotone_project

SPACE_NAMES = ("euclidean", "spd-ai", "spd-le", "wasserstein")


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_matrix(path) -> np.ndarray:
    """Numeric CSV as an (n, k) array; a single non-numeric header row is skipped."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise InvalidInput(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInput(f"{path}: rows have differing column counts {sorted(widths)}")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    if not np.all(np.isfinite(data)):
        raise InvalidInput(f"{path}: non-finite values")
    return data


def read_samples(path) -> np.ndarray:
    """All numbers in a file (comma/whitespace separated, one optional header)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    tokens = text.replace(",", " ").split()
    if tokens and not _is_number(tokens[0]):
        tokens = tokens[1:]
    try:
        values = np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    if values.size == 0:
        raise InvalidInput(f"{path}: no samples")
    if not np.all(np.isfinite(values)):
        raise InvalidInput(f"{path}: non-finite samples")
    return values


def make_space(name: str, width: int | None = None, grid: int | None = None) -> SpaceContract:
    """Backend for ``name``; ``width`` is the per-point column count of the data."""
    if name == "euclidean":
        return EuclideanSpace(width or 1)
    if name in ("spd-ai", "spd-le"):
        m = int(round(math.sqrt(width))) if width else 0
        if width is None or m * m != width or m < 1:
            raise InvalidInput(f"SPD rows need m^2 columns, got {width}")
        return SPDSpace(m, name[4:])
    if name == "wasserstein":
        if grid is not None and width is not None and grid != width:
            raise InvalidInput(f"quantile grid {grid} does not match {width} input columns")
        return WassersteinSpace(width or grid or DEFAULT_GRID)
    raise InvalidInput(f"unknown space {name!r}; choose from {', '.join(SPACE_NAMES)}")


def _rows_to_points(rows: np.ndarray, space: SpaceContract) -> list:
    points = []
    for i, row in enumerate(rows):
        point = row.reshape(space.shape)
        if isinstance(space, WassersteinSpace):
            point = monotone_project(point)
        try:
            points.append(space.validate(point))
        except InvalidInput as exc:
            raise type(exc)(f"row {i + 1}: {exc}") from None
    return points


def _load_fit_document(path: Path, name: str, grid):
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from None
    if not isinstance(doc, dict) or "fitted" not in doc:
        raise InvalidInput(f"{path}: not a fit document (no 'fitted' field)")
    rows = np.asarray(doc["fitted"], dtype=float)
    if rows.ndim != 2:
        raise InvalidInput(f"{path}: 'fitted' must be a list of rows")
    return rows, doc.get("design")


def load_series(path, space_name: str, scale: float = 1.0, grid: int | None = None):
    """Read ``path`` and return ``(space, series)``.

    ``path`` may be a CSV with one point per row (Euclidean: k columns,
    SPD: the m*m row-major matrix, Wasserstein: G quantile values), a fit
    document written by ``fit``, or -- for Wasserstein only -- a directory
    holding one sample file per time point (read in sorted name order).
    All values are multiplied by ``scale``.
    """
    if not (scale > 0 and math.isfinite(scale)):
        raise InvalidInput(f"scale must be positive and finite, got {scale}")
    path = Path(path)
    design = None
    if path.is_dir():
        if space_name != "wasserstein":
            raise InvalidInput("directory input (sample mode) is only for wasserstein")
        files = sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
        if not files:
            raise InvalidInput(f"{path}: no sample files")
        space = WassersteinSpace(grid or DEFAULT_GRID)
        points = [space.from_samples(scale * read_samples(f)) for f in files]
        return space, TimeSeries(points)
    if path.suffix.lower() == ".json":
        rows, design = _load_fit_document(path, space_name, grid)
    else:
        rows = read_matrix(path)
    rows = scale * rows
    space = make_space(space_name, rows.shape[1], grid)
    points = _rows_to_points(rows, space)
    return space, TimeSeries(points, None if design is None else np.asarray(design, float))
