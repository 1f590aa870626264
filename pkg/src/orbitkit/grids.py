"""Boxes, phase-space cell grids and image-space lattices.

Shared discretization plumbing: the analysis window (Box), the uniform
cell decomposition used for fiber sampling and orbit dedup (CellGrid),
and the image-value lattice used by scans and the orbit space
(LatticeSpec, giving both point values and half-open bins).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

# Cell counts above this are refused; memory grows as resolution^(2n).
MAX_CELLS = 50_000_000


def as_rng(seed) -> np.random.Generator:
    """Accept a Generator, an integer seed or None (seed 0)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = 0
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounds in R^d, ordered (q_1..q_n, p_1..p_n) for
    phase-space boxes."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have the same length")
        if len(self.lo) == 0:
            raise ValueError("box must have at least one axis")
        for k, (a, b) in enumerate(zip(self.lo, self.hi)):
            if not a < b:
                raise ValueError(f"box axis {k}: need min < max, got [{a}, {b}]")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def lo_array(self) -> np.ndarray:
        return np.array(self.lo)

    def hi_array(self) -> np.ndarray:
        return np.array(self.hi)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo_array() + self.hi_array())

    def widths(self) -> np.ndarray:
        return self.hi_array() - self.lo_array()

    def volume(self) -> float:
        return float(np.prod(self.widths()))

    def inflated(self, factor: float = 1.1) -> "Box":
        """Box scaled about its center; factor 1.1 adds 10% per half-width."""
        c = self.center()
        half = 0.5 * self.widths() * factor
        return Box(tuple(c - half), tuple(c + half))

    def contains(self, x, factor: float = 1.0) -> bool:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return False
        c = self.center()
        half = 0.5 * self.widths() * factor
        return bool(np.all(np.abs(x - c) <= half))

    def contains_batch(self, x: np.ndarray, factor: float = 1.0) -> np.ndarray:
        """Vectorized membership for points of shape (d, N)."""
        c = self.center()[:, None]
        half = (0.5 * self.widths() * factor)[:, None]
        finite = np.all(np.isfinite(x), axis=0)
        return finite & np.all(np.abs(x - c) <= half, axis=0)

    def sample(self, rng, size: int | None = None) -> np.ndarray:
        """Uniform points; shape (d,) for size None, else (d, size)."""
        rng = as_rng(rng)
        lo, hi = self.lo_array(), self.hi_array()
        if size is None:
            return rng.uniform(lo, hi)
        return rng.uniform(lo[:, None], hi[:, None], size=(self.dim, size))


@dataclass(frozen=True)
class CellGrid:
    """Uniform cell decomposition of a box; cells are evaluated at their
    centers.  Flat indices use C order (last axis fastest)."""

    box: Box
    res: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "res", tuple(int(r) for r in self.res))
        if len(self.res) != self.box.dim:
            raise ValueError(
                f"resolution has {len(self.res)} axes, box has {self.box.dim}"
            )
        if any(r < 2 for r in self.res):
            raise ValueError(f"per-axis resolution must be >= 2, got {self.res}")
        if int(np.prod(self.res, dtype=np.int64)) > MAX_CELLS:
            raise ValueError(
                f"grid would have {np.prod(self.res, dtype=np.int64)} cells "
                f"(limit {MAX_CELLS}); lower the resolution"
            )

    @classmethod
    def regular(cls, box: Box, resolution: int | Iterable[int]) -> "CellGrid":
        if isinstance(resolution, int):
            return cls(box, (resolution,) * box.dim)
        return cls(box, tuple(resolution))

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def ncells(self) -> int:
        return int(np.prod(self.res, dtype=np.int64))

    def cell_sizes(self) -> np.ndarray:
        return self.box.widths() / np.array(self.res, dtype=float)

    def max_cell_size(self) -> float:
        return float(np.max(self.cell_sizes()))

    def centers(self) -> np.ndarray:
        """All cell centers, shape (dim, ncells), C-order flat layout."""
        axes = [
            self.box.lo[k] + (np.arange(self.res[k]) + 0.5) * self.cell_sizes()[k]
            for k in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh])

    def cell_index(self, x) -> int | None:
        """Flat index of the cell containing x, or None outside the box."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return None
        rel = (x - self.box.lo_array()) / self.cell_sizes()
        idx = np.floor(rel).astype(np.int64)
        # points exactly on the upper face belong to the last cell
        idx = np.where((idx == self.res) & np.isclose(rel, self.res), idx - 1, idx)
        if np.any(idx < 0) or np.any(idx >= np.array(self.res)):
            return None
        return int(np.ravel_multi_index(tuple(idx), self.res))

    def cell_index_batch(self, x: np.ndarray) -> np.ndarray:
        """Flat indices for points of shape (dim, N); -1 outside the box."""
        rel = (x - self.box.lo_array()[:, None]) / self.cell_sizes()[:, None]
        with np.errstate(invalid="ignore"):
            idx = np.floor(rel).astype(np.int64)
        res = np.array(self.res, dtype=np.int64)[:, None]
        on_upper = (idx == res) & np.isclose(rel, res.astype(float))
        idx = np.where(on_upper, idx - 1, idx)
        valid = np.all(np.isfinite(rel), axis=0)
        valid &= np.all((idx >= 0) & (idx < res), axis=0)
        flat = np.full(x.shape[1], -1, dtype=np.int64)
        if np.any(valid):
            flat[valid] = np.ravel_multi_index(
                tuple(idx[:, valid]), self.res
            )
        return flat

    def center_of(self, flat: int) -> np.ndarray:
        multi = np.array(np.unravel_index(int(flat), self.res), dtype=float)
        return self.box.lo_array() + (multi + 0.5) * self.cell_sizes()

    def centers_of(self, flat: np.ndarray) -> np.ndarray:
        """Centers for a batch of flat indices, shape (dim, len(flat))."""
        multi = np.stack(np.unravel_index(np.asarray(flat, dtype=np.int64), self.res))
        return self.box.lo_array()[:, None] + (multi + 0.5) * self.cell_sizes()[:, None]

    def strides(self) -> np.ndarray:
        """Flat-index stride per axis (C order)."""
        strides = np.ones(self.dim, dtype=np.int64)
        for k in range(self.dim - 2, -1, -1):
            strides[k] = strides[k + 1] * self.res[k + 1]
        return strides


@dataclass(frozen=True)
class LatticeSpec:
    """Per-axis (lo, hi, count) specification of an image-value lattice.

    values() gives `count` evenly spaced sample values per axis
    (endpoints included); bins() views the same axes as `count`
    half-open bins of width (hi-lo)/count, used by the orbit space.
    """

    axes: tuple[tuple[float, float, int], ...]

    def __post_init__(self):
        axes = tuple((float(a), float(b), int(c)) for a, b, c in self.axes)
        object.__setattr__(self, "axes", axes)
        if len(axes) == 0:
            raise ValueError("lattice needs at least one axis")
        for k, (a, b, c) in enumerate(axes):
            if c < 1:
                raise ValueError(f"lattice axis {k}: need >= 1 value, got {c}")
            if not a < b:
                raise ValueError(f"lattice axis {k}: need lo < hi, got [{a}, {b}]")

    @classmethod
    def parse(cls, text: str) -> "LatticeSpec":
        """Parse 'lo:hi:count' per axis, axes comma-separated."""
        axes = []
        for part in text.split(","):
            pieces = part.split(":")
            if len(pieces) != 3:
                raise ValueError(f"lattice axis {part!r} is not of the form lo:hi:count")
            axes.append((float(pieces[0]), float(pieces[1]), int(pieces[2])))
        return cls(tuple(axes))

    @property
    def dim(self) -> int:
        return len(self.axes)

    def axis_values(self, k: int) -> np.ndarray:
        lo, hi, count = self.axes[k]
        if count == 1:
            return np.array([0.5 * (lo + hi)])
        return np.linspace(lo, hi, count)

    def points(self) -> np.ndarray:
        """Cartesian product of axis values, shape (N, dim), C order."""
        mesh = np.meshgrid(*[self.axis_values(k) for k in range(self.dim)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def bin_counts(self) -> tuple[int, ...]:
        return tuple(c for _, _, c in self.axes)

    def bin_widths(self) -> np.ndarray:
        return np.array([(b - a) / c for a, b, c in self.axes])

    def bin_of_batch(self, values: np.ndarray) -> np.ndarray:
        """Flat bin index for values of shape (dim, N); -1 outside range.

        Bins are half-open [edge_k, edge_{k+1}): a value exactly at hi
        falls outside.
        """
        lo = np.array([a for a, _, _ in self.axes])[:, None]
        widths = self.bin_widths()[:, None]
        counts = np.array(self.bin_counts(), dtype=np.int64)[:, None]
        with np.errstate(invalid="ignore"):
            idx = np.floor((values - lo) / widths).astype(np.int64)
        valid = np.all(np.isfinite(values), axis=0)
        valid &= np.all((idx >= 0) & (idx < counts), axis=0)
        flat = np.full(values.shape[1], -1, dtype=np.int64)
        if np.any(valid):
            flat[valid] = np.ravel_multi_index(tuple(idx[:, valid]), self.bin_counts())
        return flat

    def bin_multi(self, flat: int) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(int(flat), self.bin_counts()))

    def bin_center(self, flat: int) -> tuple[float, ...]:
        multi = self.bin_multi(flat)
        widths = self.bin_widths()
        return tuple(
            self.axes[k][0] + (multi[k] + 0.5) * widths[k] for k in range(self.dim)
        )
