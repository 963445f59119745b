"""Balanced panel container, two-way within transformation and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionError,
    DuplicateCellError,
    InvalidDataError,
    ParseError,
    UnbalancedPanelError,
)

__all__ = [
    "PanelDataset",
    "DemeanedPanel",
    "within_transform",
    "demean_panel",
    "load_csv",
]


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDataError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """Balanced panel: ``y`` and ``d`` are (n, T), ``x`` is (n, T, p).

    Rows index units, columns index periods.  Arrays are copied and made
    read-only on construction.
    """

    y: np.ndarray
    d: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = _frozen(self.y, 2, "y")
        d = _frozen(self.d, 2, "d")
        x = _frozen(self.x, 3, "x")
        n, T = y.shape
        if d.shape != (n, T) or x.shape[:2] != (n, T):
            raise DimensionError(
                f"inconsistent shapes: y {y.shape}, d {d.shape}, x {x.shape}"
            )
        if n < 2 or T < 1 or x.shape[2] < 1:
            raise DimensionError(f"need n >= 2, T >= 1, p >= 1; got {x.shape}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[2]


@dataclass(frozen=True, eq=False)
class DemeanedPanel:
    y: np.ndarray
    d: np.ndarray
    x: np.ndarray
    T_eq_1: bool = False

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[2]


def _within(z: np.ndarray) -> np.ndarray:
    # two-way demeaning over the leading (unit, period) axes; trailing axes ride along
    return (
        z
        - z.mean(axis=0, keepdims=True)
        - z.mean(axis=1, keepdims=True)
        + z.mean(axis=(0, 1), keepdims=True)
    )


def within_transform(z) -> np.ndarray:
    """Two-way within transformation of an (n, T) matrix.

    ``z~[i,t] = z[i,t] - mean_i z[:,t] - mean_t z[i,:] + mean z``.  Removes
    any additive unit and period effects; the map is linear and idempotent.

    Raises
    ------
    InvalidDataError
        If ``z`` has non-finite entries.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise DimensionError(f"expected an (n, T) matrix, got shape {z.shape}")
    if z.shape[0] < 2 or z.shape[1] < 1:
        raise DimensionError(f"need n >= 2 and T >= 1, got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InvalidDataError("within_transform input contains non-finite entries")
    return _within(z)


def demean_panel(data: PanelDataset) -> DemeanedPanel:
    """Within-transform ``y``, ``d`` and every covariate.

    With a single period the two-way formula collapses to zero, so only the
    cross-sectional means are removed (cross-section mode).
    """
    if data.T == 1:
        y = data.y - data.y.mean(axis=0, keepdims=True)
        d = data.d - data.d.mean(axis=0, keepdims=True)
        x = data.x - data.x.mean(axis=0, keepdims=True)
        return DemeanedPanel(y, d, x, T_eq_1=True)
    return DemeanedPanel(_within(data.y), _within(data.d), _within(data.x), T_eq_1=False)


def _covariate_columns(header, reserved, x_prefix):
    return [
        (k, name)
        for k, name in enumerate(header)
        if name.startswith(x_prefix) and name not in reserved
    ]


def _to_float(text: str, row: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: cannot parse {text!r} as a number") from None
    return v


def load_csv(
    path,
    id_col: str = "id",
    time_col: str = "time",
    y_col: str = "y",
    d_col: str = "d",
    x_prefix: str = "x",
) -> PanelDataset:
    """Read a long-format panel (one row per unit-period) into a PanelDataset.

    Unit and period labels are mapped to dense indices in order of first
    appearance.  Covariates are the columns whose name starts with
    ``x_prefix``, kept in header order.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        for col in (id_col, time_col, y_col, d_col):
            if col not in header:
                raise ParseError(f"{path}: missing required column {col!r}")
        reserved = {id_col, time_col, y_col, d_col}
        xcols = _covariate_columns(header, reserved, x_prefix)
        if not xcols:
            raise ParseError(f"{path}: no covariate columns with prefix {x_prefix!r}")
        i_id, i_t = header.index(id_col), header.index(time_col)
        i_y, i_d = header.index(y_col), header.index(d_col)

        units: dict[str, int] = {}
        periods: dict[str, int] = {}
        cells: dict[tuple[int, int], tuple[float, float, list[float]]] = {}
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"row {rowno}: expected {len(header)} fields, found {len(row)}"
                )
            uid, tid = row[i_id].strip(), row[i_t].strip()
            i = units.setdefault(uid, len(units))
            t = periods.setdefault(tid, len(periods))
            if (i, t) in cells:
                raise DuplicateCellError(f"row {rowno}: duplicate cell (id={uid}, time={tid})")
            yv = _to_float(row[i_y], rowno, y_col)
            dv = _to_float(row[i_d], rowno, d_col)
            xv = [_to_float(row[k], rowno, name) for k, name in xcols]
            cells[(i, t)] = (yv, dv, xv)

    n, T, p = len(units), len(periods), len(xcols)
    if n * T != len(cells):
        unit_names = list(units)
        period_names = list(periods)
        missing = next(
            (unit_names[i], period_names[t])
            for i in range(n)
            for t in range(T)
            if (i, t) not in cells
        )
        raise UnbalancedPanelError(
            f"{path}: panel is unbalanced ({len(cells)} of {n}x{T} cells present); "
            f"first missing cell: id={missing[0]}, time={missing[1]}"
        )
    y = np.empty((n, T))
    d = np.empty((n, T))
    x = np.empty((n, T, p))
    for (i, t), (yv, dv, xv) in cells.items():
        y[i, t], d[i, t], x[i, t] = yv, dv, xv
    if not all(math.isfinite(v) for v in (y.sum(), d.sum(), x.sum())):
        raise InvalidDataError(f"{path}: non-finite values in data")
    return PanelDataset(y, d, x)
