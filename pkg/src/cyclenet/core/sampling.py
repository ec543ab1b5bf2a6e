"""
Space-filling designs over the unit cube

Every design is an n x d matrix with entries in [0, 1) plus an optional
per-dimension mapping to physical bounds. Randomness comes from numpy's
PCG64 generator, so a seed reproduces a design on any platform.
"""

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from cyclenet.core.dataset import read_table
from cyclenet.core.errors import ParseError


@dataclass(frozen=True)
class Dimension:
    name: str
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self) -> None:
        if not self.upper > self.lower:
            raise ValueError(f"dimension {self.name}: upper must be greater than lower")


@dataclass(frozen=True)
class DesignMatrix:
    """Points in the unit cube and how each dimension maps to physical units

    Attributes:
        points:     (n, d) matrix, every entry in [0, 1).
        mapping:    One `Dimension` per column.
    """

    points: np.ndarray
    mapping: Tuple[Dimension, ...]

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=float, ndmin=2)
        if points.shape[0] < 1 or points.shape[1] < 1:
            raise ValueError("a design needs at least one point and one dimension")
        if points.shape[1] != len(self.mapping):
            raise ValueError(f"{points.shape[1]} columns but {len(self.mapping)} dimensions")
        if np.any(points < 0.0) or np.any(points >= 1.0):
            raise ValueError("design entries must lie in [0, 1)")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "mapping", tuple(self.mapping))

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.mapping)

    @property
    def lower(self) -> np.ndarray:
        return np.array([d.lower for d in self.mapping])

    @property
    def upper(self) -> np.ndarray:
        return np.array([d.upper for d in self.mapping])

    def rescale(self) -> np.ndarray:
        """Points in physical units"""
        return self.lower + self.points * (self.upper - self.lower)

    def unscale(self, values: np.ndarray) -> np.ndarray:
        """Inverse of `rescale`"""
        return (np.asarray(values, dtype=float) - self.lower) / (self.upper - self.lower)

    def to_levels(self, n_levels: int) -> np.ndarray:
        """Index of the grid level each coordinate falls into

        The unit interval is split into `n_levels` equal strata, so an LHS
        with n = n_levels puts exactly one point on every level.
        """
        if n_levels < 1:
            raise ValueError("n_levels must be >= 1")
        return np.minimum(np.floor(self.points * n_levels).astype(int), n_levels - 1)

    def with_mapping(self, mapping: Sequence[Dimension]) -> "DesignMatrix":
        return DesignMatrix(self.points, tuple(mapping))

    def write_csv(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.names)
            for row in self.points:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path: Path, mapping: Optional[Sequence[Dimension]] = None) -> "DesignMatrix":
        """Read unit-cube points, the header gives the dimension names

        Raises:
            ParseError: Empty file or a value that does not parse.
        """
        header, body = read_table(path, ())
        if not body:
            raise ParseError(f"design file {path} has no points", line=1)
        points = np.empty((len(body), len(header)))
        for i, row in enumerate(body):
            for j, cell in enumerate(row):
                try:
                    points[i, j] = float(cell)
                except ValueError:
                    raise ParseError(f"bad value in {path}", line=i + 2, column=j + 1)
        if mapping is None:
            mapping = tuple(Dimension(name) for name in header)
        return cls(points, tuple(mapping))


def _default_mapping(d: int) -> Tuple[Dimension, ...]:
    return tuple(Dimension(f"x{i}") for i in range(d))


def latin_hypercube(
    n: int, d: int, seed: int, mapping: Optional[Sequence[Dimension]] = None
) -> DesignMatrix:
    """Plain Latin hypercube sample

    Each dimension places exactly one point in every stratum [k/n, (k+1)/n),
    uniformly inside the stratum. Dimensions are permuted independently.

    Args:
        n:          Number of points.
        d:          Number of dimensions.
        seed:       PCG64 seed.
        mapping:    Physical bounds of each dimension.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    offset = rng.random((n, d))
    points = (strata + offset) / n
    # k + u with u just below 1 can round up to n / n
    points = np.minimum(points, np.nextafter(1.0, 0.0))
    return DesignMatrix(points, tuple(mapping) if mapping else _default_mapping(d))


def full_factorial(levels: Sequence[Sequence[float]], names: Optional[Sequence[str]] = None) -> DesignMatrix:
    """Cartesian product of per-dimension levels in lexicographic order

    Level k of a dimension with L levels maps to k / L. The physical values
    of the levels are returned by `factorial_values`.
    """
    if not levels or any(len(lv) == 0 for lv in levels):
        raise ValueError("every dimension needs at least one level")
    counts = [len(lv) for lv in levels]
    index = np.array(list(itertools.product(*(range(c) for c in counts))), dtype=float)
    points = index / np.array(counts, dtype=float)
    names = names or [f"x{i}" for i in range(len(levels))]
    return DesignMatrix(points, tuple(Dimension(name) for name in names))


def factorial_values(design: DesignMatrix, levels: Sequence[Sequence[float]]) -> np.ndarray:
    """Physical level values of each row of a factorial (or level-snapped) design"""
    index = np.column_stack(
        [
            np.minimum(np.floor(design.points[:, j] * len(lv) + 1e-9).astype(int), len(lv) - 1)
            for j, lv in enumerate(levels)
        ]
    )
    return np.column_stack([np.asarray(lv, dtype=float)[index[:, j]] for j, lv in enumerate(levels)])
