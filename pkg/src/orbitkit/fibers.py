"""Discrete fibers of the integral map and their connected components.

A fiber F^{-1}(c) is approximated by the grid cells whose centers pass
the gradient-aware level-band test; components are labeled by
union-find over face adjacency (corner adjacency behind a flag).  The
component counts over an image lattice give the bifurcation structure,
and orbit_vs_fiber_check cross-validates flow-generated orbits against
the grid components.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import flow as _flow
from .grids import CellGrid, LatticeSpec
from .hamiltonian import (
    BAND_KAPPA,
    DEFAULT_RANK_TOL,
    IntegrableSystem,
    level_band_mask,
)

FACE = "face"
CORNER = "corner"


@dataclass(frozen=True)
class FiberSample:
    """Cells approximating F^{-1}(c) on a grid.

    indices are sorted flat cell indices; warnings counts cells skipped
    because evaluation left the domain.
    """

    grid: CellGrid
    c: tuple[float, ...]
    atol: float
    indices: np.ndarray
    warnings: int = 0

    def __post_init__(self):
        if self.atol <= 0.0:
            raise ValueError(f"atol must be > 0, got {self.atol}")

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def is_empty(self) -> bool:
        return len(self.indices) == 0

    def centers(self) -> np.ndarray:
        return self.grid.centers_of(self.indices)


def sample_fiber(
    sys: IntegrableSystem,
    c: Sequence[float],
    grid: CellGrid,
    atol: float,
    kappa: float = BAND_KAPPA,
) -> FiberSample:
    """Mark the grid cells whose centers lie in the level band of c."""
    centers = grid.centers()
    mask, warnings = level_band_mask(sys, c, centers, grid.max_cell_size(), atol, kappa)
    indices = np.flatnonzero(mask).astype(np.int64)
    return FiberSample(grid, tuple(float(v) for v in c), atol, indices, warnings)


def _neighbor_offsets(grid: CellGrid, connectivity: str) -> list[np.ndarray]:
    """Offset vectors pointing to the 'lower' half of the neighborhood,
    so each adjacent pair is visited exactly once."""
    d = grid.dim
    if connectivity == FACE:
        offsets = []
        for k in range(d):
            v = np.zeros(d, dtype=np.int64)
            v[k] = -1
            offsets.append(v)
        return offsets
    if connectivity == CORNER:
        offsets = []
        for raw in np.ndindex(*(3,) * d):
            v = np.array(raw, dtype=np.int64) - 1
            nonzero = v[v != 0]
            if len(nonzero) and nonzero[0] == -1:
                offsets.append(v)
        return offsets
    raise ValueError(f"connectivity must be 'face' or 'corner', got {connectivity!r}")


class _UnionFind:
    """Union-find over a fixed universe of flat cell indices."""

    def __init__(self, items: Iterable[int]):
        self.parent = {int(i): int(i) for i in items}

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:  # path compression
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if ra > rb:  # keep the smallest index as root: canonical labels
            ra, rb = rb, ra
        self.parent[rb] = ra


def label_cells(
    cells: np.ndarray, grid: CellGrid, connectivity: str = FACE
) -> tuple[np.ndarray, int, tuple[int, ...]]:
    """Connected-component labels for a set of flat cell indices.

    Returns (labels aligned with `cells`, component count,
    representatives); labels are 0..count-1 ordered by each component's
    smallest cell index, which doubles as its representative.  The
    result is schedule-free: it depends only on the cell set.
    """
    cells = np.asarray(cells, dtype=np.int64)
    if len(cells) == 0:
        return np.empty(0, dtype=np.int64), 0, ()
    cell_set = set(int(v) for v in cells)
    uf = _UnionFind(cell_set)
    multis = np.stack(np.unravel_index(cells, grid.res))  # (d, M)
    strides = grid.strides()
    res = np.array(grid.res, dtype=np.int64)
    for offset in _neighbor_offsets(grid, connectivity):
        shifted = multis + offset[:, None]
        ok = np.all((shifted >= 0) & (shifted < res[:, None]), axis=0)
        neighbor_flat = cells[ok] + int(offset @ strides)
        for cell, neighbor in zip(cells[ok], neighbor_flat):
            if int(neighbor) in cell_set:
                uf.union(int(cell), int(neighbor))
    roots = np.array([uf.find(int(v)) for v in cells], dtype=np.int64)
    reps = np.unique(roots)
    root_to_label = {int(r): k for k, r in enumerate(reps)}
    labels = np.array([root_to_label[int(r)] for r in roots], dtype=np.int64)
    return labels, len(reps), tuple(int(r) for r in reps)


@dataclass(frozen=True)
class ComponentLabeling:
    """Partition of a fiber sample into face- (or corner-) connected
    components; representatives are each component's smallest cell."""

    sample: FiberSample
    labels: np.ndarray  # aligned with sample.indices
    count: int
    representatives: tuple[int, ...]
    connectivity: str = FACE

    def label_of(self, flat_cell: int) -> int | None:
        pos = np.searchsorted(self.sample.indices, flat_cell)
        if pos < len(self.sample.indices) and self.sample.indices[pos] == flat_cell:
            return int(self.labels[pos])
        return None

    def cells_of(self, label: int) -> np.ndarray:
        return self.sample.indices[self.labels == label]


def connected_components(
    fs: FiberSample, connectivity: str = FACE
) -> ComponentLabeling:
    """Union-find component labeling of the marked cells."""
    labels, count, reps = label_cells(fs.indices, fs.grid, connectivity)
    return ComponentLabeling(fs, labels, count, reps, connectivity)


def fiber_component_count(
    sys: IntegrableSystem,
    c: Sequence[float],
    grid: CellGrid,
    atol: float,
    connectivity: str = FACE,
) -> int:
    return connected_components(sample_fiber(sys, c, grid, atol), connectivity).count


@dataclass(frozen=True)
class BifurcationRow:
    c: tuple[float, ...]
    count: int
    critical: bool  # rank DF < n somewhere on the sampled fiber


@dataclass(frozen=True)
class BifurcationTable:
    rows: tuple[BifurcationRow, ...]

    def count_at(self, c: Sequence[float]) -> int:
        key = tuple(float(v) for v in c)
        for row in self.rows:
            if row.c == key:
                return row.count
        raise KeyError(f"value {key} not in the scanned lattice")

    @property
    def critical_values(self) -> tuple[tuple[float, ...], ...]:
        return tuple(row.c for row in self.rows if row.critical)


def _has_rank_deficiency(
    sys: IntegrableSystem, centers: np.ndarray, tol: float
) -> bool:
    """True when rank DF < n at some center (batched SVD)."""
    if centers.shape[1] == 0:
        return False
    grads = sys.gradients_array(centers)  # (n, 2n, M)
    stacked = np.moveaxis(grads, 2, 0)
    finite = np.all(np.isfinite(stacked), axis=(1, 2))
    if not np.any(finite):
        return False
    s = np.linalg.svd(stacked[finite], compute_uv=False)
    top = s[:, 0]
    deficient = (top <= 0.0) | np.any(s < tol * top[:, None], axis=1)
    return bool(np.any(deficient))


def bifurcation_scan(
    sys: IntegrableSystem,
    lattice: LatticeSpec,
    grid: CellGrid,
    atol: float,
    connectivity: str = FACE,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> BifurcationTable:
    """Component count of the sampled fiber at every lattice value.

    Count 0 marks values outside F(M) at this resolution.  Values whose
    fiber touches a rank-deficient point are flagged critical: discrete
    component counts there are resolution-dependent and unreliable.
    """
    if lattice.dim != sys.n:
        raise ValueError(f"lattice has {lattice.dim} axes, system needs {sys.n}")
    rows = []
    for point in lattice.points():
        fs = sample_fiber(sys, point, grid, atol)
        labeling = connected_components(fs, connectivity)
        critical = _has_rank_deficiency(sys, fs.centers(), rank_tol)
        rows.append(BifurcationRow(tuple(float(v) for v in point), labeling.count, critical))
    return BifurcationTable(tuple(rows))


@dataclass(frozen=True)
class OrbitFiberReport:
    """Cross-check of an explored orbit against the fiber components
    through its seed (the discrete form of orbits-are-fiber-components)."""

    containment: bool
    coverage: float
    component_label: int | None
    labels_hit: tuple[int, ...]
    unlabeled_cells: int
    orbit_cells: int
    component_cells: int
    fiber_components: int
    f_drift: float
    escaped_branches: int


def orbit_vs_fiber_check(
    sys: IntegrableSystem,
    x0,
    budget: int,
    grid: CellGrid,
    atol: float,
    *,
    h: float = _flow.DEFAULT_STEP,
    quantum: float = _flow.DEFAULT_QUANTUM,
    kappa: float = BAND_KAPPA,
    connectivity: str = FACE,
) -> OrbitFiberReport:
    """Explore the orbit through x0 and compare with the labeled fiber
    of F(x0) on the same grid.

    containment holds when every non-escaped orbit cell carries one
    single component label; coverage is hit cells over that component's
    cells.
    """
    x0 = np.asarray(x0, dtype=float)
    c = sys.values_at(x0)
    fs = sample_fiber(sys, c, grid, atol, kappa)
    labeling = connected_components(fs, connectivity)
    orbit = _flow.orbit_explore(
        sys, x0, budget, h, quantum=quantum, grid=grid, atol=atol, kappa=kappa
    )

    hit_labels: set[int] = set()
    unlabeled = 0
    for cell in orbit.cell_indices:
        label = labeling.label_of(cell)
        if label is None:
            unlabeled += 1
        else:
            hit_labels.add(label)

    containment = unlabeled == 0 and len(hit_labels) == 1
    component_label = None
    coverage = 0.0
    if hit_labels:
        seed_label = labeling.label_of(orbit.grid.cell_index(x0))
        component_label = seed_label if seed_label is not None else min(hit_labels)
        component_cells = labeling.cells_of(component_label)
        hits = np.isin(component_cells, np.array(orbit.cell_indices, dtype=np.int64))
        coverage = float(np.mean(hits)) if len(component_cells) else 0.0
        n_component = len(component_cells)
    else:
        n_component = 0
    return OrbitFiberReport(
        containment,
        coverage,
        component_label,
        tuple(sorted(hit_labels)),
        unlabeled,
        len(orbit.cells),
        n_component,
        labeling.count,
        orbit.f_drift,
        orbit.escaped_branches,
    )
