"""Time grids, paths and line ensembles."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[t_start, t_end]`` with ``steps + 1`` points."""

    t_start: float
    t_end: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"grid needs a positive step count, got {self.steps!r}")
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise ConfigError("grid endpoints must be finite")
        if not self.t_end > self.t_start:
            raise ConfigError(f"grid needs t_end > t_start, got [{self.t_start}, {self.t_end}]")

    @property
    def spacing(self) -> float:
        return (self.t_end - self.t_start) / self.steps

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    @property
    def size(self) -> int:
        return self.steps + 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.steps + 1)

    def refine(self, factor: int) -> "GridSpec":
        return GridSpec(self.t_start, self.t_end, self.steps * factor)

    def coarsen(self, factor: int) -> "GridSpec":
        if self.steps % factor:
            raise ConfigError(f"{self.steps} steps do not coarsen by {factor}")
        return GridSpec(self.t_start, self.t_end, self.steps // factor)

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Grid index of time ``t``; raises if ``t`` is not (close to) a grid time."""
        x = (t - self.t_start) / self.spacing
        j = int(round(x))
        if abs(x - j) > tol or not 0 <= j <= self.steps:
            raise ConfigError(f"time {t} is not on the grid {self}")
        return j


@dataclass
class Path:
    grid: GridSpec
    values: np.ndarray
    variance: float = 1.0
    slope: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ConfigError(
                f"path has {self.values.shape} values, grid expects {self.grid.size}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("path values must be finite")
        if not self.variance > 0:
            raise ConfigError("path variance must be positive")


@dataclass(frozen=True)
class BridgeSpec:
    start_value: float
    end_value: float
    grid: GridSpec
    variance: float = 1.0

    def __post_init__(self):
        if not self.variance > 0:
            raise ConfigError("bridge variance must be positive")

    @property
    def slope(self) -> float:
        return (self.end_value - self.start_value) / self.grid.length


@dataclass
class LineEnsemble:
    """Lines stored row-wise in ``values``; row 0 is line 1 (the top line)."""

    grid: GridSpec
    values: np.ndarray
    ordered: bool = False
    variance: float = 1.0
    slopes: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[1] != self.grid.size:
            raise ConfigError(
                f"ensemble has {self.values.shape[1]} columns, grid expects {self.grid.size}")
        if self.slopes is None:
            self.slopes = np.zeros(self.values.shape[0])
        else:
            self.slopes = np.asarray(self.slopes, dtype=float)

    @property
    def n_lines(self) -> int:
        return self.values.shape[0]

    def line(self, i: int) -> Path:
        """Line ``i`` counted from 1 at the top."""
        if not 1 <= i <= self.n_lines:
            raise IndexError(f"line index {i} outside 1..{self.n_lines}")
        return Path(self.grid, self.values[i - 1], self.variance, float(self.slopes[i - 1]))

    @property
    def lines(self) -> list[Path]:
        return [self.line(i) for i in range(1, self.n_lines + 1)]

    def top(self, k: int) -> "LineEnsemble":
        return LineEnsemble(self.grid, self.values[:k].copy(), self.ordered,
                            self.variance, self.slopes[:k].copy(), dict(self.meta))

    def is_ordered(self, strict: bool = False) -> bool:
        d = np.diff(self.values, axis=0)
        return bool(np.all(d < 0) if strict else np.all(d <= 0))

    def subsample(self, stride: int) -> "LineEnsemble":
        grid = self.grid.coarsen(stride)
        return LineEnsemble(grid, self.values[:, ::stride].copy(), self.ordered,
                            self.variance, self.slopes.copy(), dict(self.meta))

    @classmethod
    def from_paths(cls, paths, ordered=False) -> "LineEnsemble":
        paths = list(paths)
        grid = paths[0].grid
        if any(p.grid != grid for p in paths):
            raise ConfigError("all lines of an ensemble must share one grid")
        return cls(grid, np.stack([p.values for p in paths]), ordered,
                   paths[0].variance, np.array([p.slope for p in paths]))

    def __eq__(self, other):
        if not isinstance(other, LineEnsemble):
            return NotImplemented
        return (self.grid == other.grid and self.ordered == other.ordered
                and self.variance == other.variance
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.slopes, other.slopes))
