"""Discretized orbit space, induced map and equivalence tests.

The orbit space is discretized over an image-value lattice: each
lattice bin's preimage slab (cells whose F value falls in the bin) is
split into connected components, and each component becomes one
element.  pi maps phase cells to elements, mu maps elements to their
bin's center value, and element adjacency across neighboring bins gives
the base-space graph.  By construction mu(pi(cell)) recovers the bin of
F(cell center), the discrete factorization of the integral map.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .expr import Expr, free_variables, eval_array, simplify, substitute
from .fibers import FACE, label_cells
from .grids import Box, CellGrid, LatticeSpec, as_rng
from .hamiltonian import (
    DEFAULT_RANK_TOL,
    CommutantVerdict,
    IntegrableSystem,
    commutant_test,
)

MAX_REPORTED_WITNESSES = 20


@dataclass(frozen=True)
class OrbitSpaceElement:
    """One element: a connected component of a lattice-bin slab."""

    id: int
    bin_flat: int
    bin_index: tuple[int, ...]
    mu: tuple[float, ...]  # the bin's center value; mu(element) by construction
    representative: int  # smallest phase cell in the component
    size: int


@dataclass(frozen=True)
class OrbitSpace:
    """Discretized quotient of the box by the family of flows."""

    system: IntegrableSystem
    lattice: LatticeSpec
    grid: CellGrid
    elements: tuple[OrbitSpaceElement, ...]
    pi: np.ndarray  # flat phase cell -> element id, -1 unmarked
    edges: tuple[tuple[int, int], ...]  # element adjacency (base-space graph)
    connectivity: str = FACE

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def marked_cells(self) -> np.ndarray:
        return np.flatnonzero(self.pi >= 0)

    def element_of_cell(self, flat_cell: int) -> OrbitSpaceElement | None:
        eid = int(self.pi[flat_cell])
        return self.elements[eid] if eid >= 0 else None

    def elements_for_bin(self, bin_flat: int) -> tuple[OrbitSpaceElement, ...]:
        return tuple(e for e in self.elements if e.bin_flat == bin_flat)

    def degree(self, element_id: int) -> int:
        return sum(1 for a, b in self.edges if element_id in (a, b))


def build_orbit_space(
    sys: IntegrableSystem,
    lattice: LatticeSpec,
    grid: CellGrid,
    connectivity: str = FACE,
) -> OrbitSpace:
    """Assemble elements, pi, mu and adjacency; fully deterministic.

    Slabs bin F(cell center) exactly (half-open bins, no tolerance
    band), so pick bin widths comfortably above the per-cell variation
    of F (around 2 * cell size * max |grad f|) or thin slabs shatter
    into spurious components.
    """
    if lattice.dim != sys.n:
        raise ValueError(f"lattice has {lattice.dim} axes, system needs {sys.n}")
    centers = grid.centers()
    values = sys.values_array(centers)
    bins = lattice.bin_of_batch(values)

    pi = np.full(grid.ncells, -1, dtype=np.int64)
    elements: list[OrbitSpaceElement] = []
    marked = np.flatnonzero(bins >= 0)
    if len(marked):
        order = np.argsort(bins[marked], kind="stable")
        sorted_cells = marked[order]
        sorted_bins = bins[marked][order]
        unique_bins, starts = np.unique(sorted_bins, return_index=True)
        bounds = list(starts[1:]) + [len(sorted_cells)]
        for bin_flat, start, end in zip(unique_bins, starts, bounds):
            slab = np.sort(sorted_cells[start:end])
            labels, count, reps = label_cells(slab, grid, connectivity)
            for k in range(count):
                component = slab[labels == k]
                eid = len(elements)
                elements.append(
                    OrbitSpaceElement(
                        eid,
                        int(bin_flat),
                        lattice.bin_multi(int(bin_flat)),
                        lattice.bin_center(int(bin_flat)),
                        reps[k],
                        int(len(component)),
                    )
                )
                pi[component] = eid

    edges: set[tuple[int, int]] = set()
    shaped = pi.reshape(grid.res)
    for axis in range(grid.dim):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        a = shaped[tuple(lo)].ravel()
        b = shaped[tuple(hi)].ravel()
        both = (a >= 0) & (b >= 0) & (a != b)
        if np.any(both):
            pairs = np.stack([a[both], b[both]])
            pairs = np.sort(pairs, axis=0)
            for pa, pb in np.unique(pairs, axis=1).T:
                edges.add((int(pa), int(pb)))
    return OrbitSpace(sys, lattice, grid, tuple(elements), pi, tuple(sorted(edges)), connectivity)


@dataclass(frozen=True)
class FactorizationReport:
    """Re-derivation of mu(pi(cell)) == bin(F(center)) on every marked
    cell.  Holds by construction; this is a regression tripwire."""

    passed: bool
    checked: int
    bad_cells: tuple[int, ...]


def check_factorization(os: OrbitSpace) -> FactorizationReport:
    marked = os.marked_cells()
    if len(marked) == 0:
        return FactorizationReport(True, 0, ())
    centers = os.grid.centers_of(marked)
    values = os.system.values_array(centers)
    bins = os.lattice.bin_of_batch(values)
    element_bins = np.array([os.elements[int(e)].bin_flat for e in os.pi[marked]])
    bad = marked[bins != element_bins]
    return FactorizationReport(
        len(bad) == 0, int(len(marked)), tuple(int(v) for v in bad[:MAX_REPORTED_WITNESSES])
    )


def corrupt_pi_fixture(os: OrbitSpace) -> OrbitSpace:
    """Negative control: reassign one marked cell to a wrong element."""
    marked = os.marked_cells()
    if len(marked) == 0 or os.n_elements < 2:
        raise ValueError("need a nonempty orbit space with >= 2 elements")
    cell = int(marked[0])
    wrong = (int(os.pi[cell]) + 1) % os.n_elements
    pi = os.pi.copy()
    pi[cell] = wrong
    return replace(os, pi=pi)


@dataclass(frozen=True)
class MuBijectivityReport:
    """mu is injective at resolution iff every bin holds at most one
    element; bins with more witness disconnected fibers."""

    bijective_at_resolution: bool
    witnesses: tuple[tuple[tuple[float, ...], int], ...]  # (bin center, element count)


def mu_bijectivity_test(os: OrbitSpace) -> MuBijectivityReport:
    per_bin: dict[int, int] = {}
    for element in os.elements:
        per_bin[element.bin_flat] = per_bin.get(element.bin_flat, 0) + 1
    witnesses = tuple(
        (os.lattice.bin_center(bin_flat), count)
        for bin_flat, count in sorted(per_bin.items())
        if count > 1
    )
    return MuBijectivityReport(len(witnesses) == 0, witnesses)


@dataclass
class FunctionRingPresentation:
    """Generator-presented function ring on the orbit space.

    Generators are the pullbacks of the image coordinates (the
    integrals) plus optional user-declared commutant elements; ring
    elements are composites G(g_1..g_k) formed by substitution.  The
    differential-structure axioms hold by construction for generated
    rings; membership beyond generators delegates to commutant_test.
    """

    system: IntegrableSystem
    extra_generators: tuple[Expr, ...] = ()

    @property
    def generators(self) -> tuple[Expr, ...]:
        return tuple(self.system.integrals) + tuple(self.extra_generators)

    def element(self, composite: Expr) -> Expr:
        """Instantiate G(g_1..g_k): Var(i) in `composite` refers to the
        i-th generator."""
        k = len(self.generators)
        bad = [i for i in free_variables(composite) if i >= k]
        if bad:
            raise ValueError(f"composite uses generator index {max(bad)}, have {k}")
        return simplify(
            substitute(composite, {i: g for i, g in enumerate(self.generators)})
        )

    def validate_generators(
        self, count: int, tol: float, rng=0
    ) -> tuple[CommutantVerdict, ...]:
        rng = as_rng(rng)
        return tuple(
            commutant_test(self.system, g, count, tol, rng) for g in self.generators
        )


@dataclass(frozen=True)
class BracketWitness:
    candidate: str  # e.g. "G[0] vs F" - which function failed against which system
    integral_index: int
    point: tuple[float, ...]
    magnitude: float


@dataclass(frozen=True)
class EquivalenceVerdict:
    """Outcome of the two-stage equivalence test.

    "equivalent" is always qualified: it means no counterexample at the
    sampling count and grid resolution used, never a proof of commutant
    equality.
    """

    verdict: str  # "equivalent" | "not-equivalent" | "inconclusive"
    qualifier: str
    bracket_witnesses: tuple[BracketWitness, ...] = ()
    span_witnesses: tuple[tuple[float, ...], ...] = ()
    partition_witnesses: tuple[tuple[str, tuple[float, ...], tuple[float, ...]], ...] = ()
    full_rank_fraction: float = 0.0

    def __post_init__(self):
        if self.verdict == "not-equivalent":
            if not (self.bracket_witnesses or self.span_witnesses or self.partition_witnesses):
                raise ValueError("not-equivalent verdicts must carry a witness")


def _batched_ranks(grads: np.ndarray, tol: float) -> np.ndarray:
    """grads (rows, cols, N) -> rank per sample; NaN rows give rank -1."""
    stacked = np.moveaxis(grads, 2, 0)
    finite = np.all(np.isfinite(stacked), axis=(1, 2))
    ranks = np.full(stacked.shape[0], -1, dtype=np.int64)
    if np.any(finite):
        s = np.linalg.svd(stacked[finite], compute_uv=False)
        top = s[:, 0]
        ok = (top > 0.0) & np.isfinite(top)
        counts = np.zeros(len(s), dtype=np.int64)
        counts[ok] = np.sum(s[ok] >= tol * top[ok, None], axis=1)
        ranks[finite] = counts
    return ranks


def _auto_lattice(sys: IntegrableSystem, grid: CellGrid, values: np.ndarray,
                  min_bin_width: float, max_bins: int = 32) -> LatticeSpec:
    """Image lattice sized so slabs stay connected at this grid: bin
    width at least twice the typical per-cell variation of each f_j."""
    grads = sys.gradients_array(grid.centers())
    norms = np.sqrt(np.sum(grads * grads, axis=1))  # (n, N)
    hmax = grid.max_cell_size()
    axes = []
    for j in range(sys.n):
        finite = np.isfinite(values[j])
        if not np.any(finite):
            raise ValueError(f"integral {j} has no finite values on the grid")
        lo = float(np.min(values[j][finite]))
        hi = float(np.max(values[j][finite]))
        span = hi - lo
        if span <= 0.0:
            span = max(abs(hi), 1.0) * 1e-6
            hi = lo + span
        gnorm = norms[j][np.isfinite(norms[j])]
        safe = 2.0 * hmax * float(np.percentile(gnorm, 99)) if len(gnorm) else span
        width = max(min_bin_width, safe, span / max_bins)
        count = max(1, int(np.ceil(span / width)))
        # stretch the top edge a hair so the maximum stays inside the bins
        axes.append((lo, lo + count * width * (1 + 1e-12) + span * 1e-9, count))
    return LatticeSpec(tuple(axes))


_REFINEMENT_SLACK = 2.0


def _refinement_violations(
    fine: OrbitSpace,
    other_lattice: LatticeSpec,
    full_rank: np.ndarray,
    other_values: np.ndarray,
    other_grad_norms: np.ndarray,
    direction: str,
) -> list[tuple[str, tuple[float, ...], tuple[float, ...]]]:
    """Elements of one partition whose cells spread across far more than
    one bin of the other system's lattice.

    When the orbit foliations coincide, the other system's integrals
    are constant along each connected element up to one bin width (the
    element is a bin-thick family of shared orbits), so its partition
    refines this one at bin resolution.  The spread bound carries slack
    for per-cell variation: exact component identities shatter under
    discretization and cannot be compared directly, value spreads can.
    """
    violations = []
    widths = other_lattice.bin_widths()
    hmax = fine.grid.max_cell_size()
    for element in fine.elements:
        cells = np.flatnonzero(fine.pi == element.id)
        cells = cells[full_rank[cells]]
        if len(cells) < 2:
            continue
        vals = other_values[:, cells]
        variation = hmax * np.max(other_grad_norms[:, cells], axis=1)
        spread = np.max(vals, axis=1) - np.min(vals, axis=1)
        bound = _REFINEMENT_SLACK * (widths + 2.0 * variation)
        bad_axes = np.flatnonzero(spread > bound)
        if len(bad_axes):
            axis = int(bad_axes[0])
            lo_cell = int(cells[np.argmin(vals[axis])])
            hi_cell = int(cells[np.argmax(vals[axis])])
            pa = tuple(float(v) for v in fine.grid.center_of(lo_cell))
            pb = tuple(float(v) for v in fine.grid.center_of(hi_cell))
            violations.append((direction, pa, pb))
            if len(violations) >= MAX_REPORTED_WITNESSES:
                return violations
    return violations


def systems_equivalent(
    sysF: IntegrableSystem,
    sysG: IntegrableSystem,
    count: int,
    tol: float,
    grid: CellGrid | None = None,
    *,
    min_bin_width: float = 0.0,
    rank_tol: float = DEFAULT_RANK_TOL,
    min_full_rank_fraction: float = 0.1,
    rng=0,
) -> EquivalenceVerdict:
    """Two-stage test of F ~ G (equal commutants / coinciding orbits).

    Stage one cross-commutes every component of each system against the
    other; any nonzero bracket is a witness of non-equivalence.  Stage
    two checks that the orbits agree where both systems have full rank:
    pointwise, the stacked Jacobian D(F,G) must not exceed rank n (the
    tangent spaces of the two orbit foliations coincide), and on the
    shared phase grid the two slab-component partitions must refine
    each other.  A pass is evidence at this sampling and resolution,
    not a proof.
    """
    if sysF.n != sysG.n:
        raise ValueError(f"systems have different n: {sysF.n} vs {sysG.n}")
    if sysF.box != sysG.box:
        raise ValueError("systems must share the same analysis box")
    n = sysF.n
    rng = as_rng(rng)
    qualifier = (
        f"sampled at {count} points on a shared grid; commutant equality "
        "is not finitely certifiable, so 'equivalent' means no "
        "counterexample at this resolution"
    )

    # stage (a): cross-commutation
    bracket_witnesses: list[BracketWitness] = []
    for j, g in enumerate(sysG.integrals):
        verdict = commutant_test(sysF, g, count, tol, rng)
        if not verdict.member:
            bracket_witnesses.append(
                BracketWitness(
                    f"G[{j}] vs F", verdict.failing_index, verdict.witness,
                    verdict.verdicts[verdict.failing_index].magnitude,
                )
            )
    for i, f in enumerate(sysF.integrals):
        verdict = commutant_test(sysG, f, count, tol, rng)
        if not verdict.member:
            bracket_witnesses.append(
                BracketWitness(
                    f"F[{i}] vs G", verdict.failing_index, verdict.witness,
                    verdict.verdicts[verdict.failing_index].magnitude,
                )
            )
    if bracket_witnesses:
        return EquivalenceVerdict(
            "not-equivalent", qualifier, tuple(bracket_witnesses)
        )

    # stage (b1): the spans of the two families must agree pointwise
    x = sysF.box.sample(rng, count)
    ranks_f = _batched_ranks(sysF.gradients_array(x), rank_tol)
    ranks_g = _batched_ranks(sysG.gradients_array(x), rank_tol)
    both_full = (ranks_f == n) & (ranks_g == n)
    fraction = float(np.mean(both_full))
    if fraction < min_full_rank_fraction:
        return EquivalenceVerdict(
            "inconclusive",
            f"only {fraction:.1%} of sampled points have full rank for both systems",
            full_rank_fraction=fraction,
        )
    stacked = np.concatenate(
        [sysF.gradients_array(x), sysG.gradients_array(x)], axis=0
    )
    ranks_fg = _batched_ranks(stacked, rank_tol)
    excess = both_full & (ranks_fg > n)
    span_witnesses = tuple(
        tuple(float(v) for v in x[:, k])
        for k in np.flatnonzero(excess)[:MAX_REPORTED_WITNESSES]
    )
    if span_witnesses:
        return EquivalenceVerdict(
            "not-equivalent", qualifier, span_witnesses=span_witnesses,
            full_rank_fraction=fraction,
        )

    # stage (b2): slab partitions on a shared grid must refine each other
    if grid is None:
        default_res = {1: 200, 2: 16, 3: 8}.get(n, 6)
        grid = CellGrid.regular(sysF.box, default_res)
    centers = grid.centers()
    values_f = sysF.values_array(centers)
    values_g = sysG.values_array(centers)
    os_f = build_orbit_space(sysF, _auto_lattice(sysF, grid, values_f, min_bin_width), grid)
    os_g = build_orbit_space(sysG, _auto_lattice(sysG, grid, values_g, min_bin_width), grid)
    grads_f = sysF.gradients_array(centers)
    grads_g = sysG.gradients_array(centers)
    norms_f = np.sqrt(np.sum(grads_f * grads_f, axis=1))
    norms_g = np.sqrt(np.sum(grads_g * grads_g, axis=1))
    cell_ranks_f = _batched_ranks(grads_f, rank_tol)
    cell_ranks_g = _batched_ranks(grads_g, rank_tol)
    full_rank_cells = (cell_ranks_f == n) & (cell_ranks_g == n)
    partition_witnesses = _refinement_violations(
        os_f, os_g.lattice, full_rank_cells, values_g, norms_g, "F-element-spreads-in-G"
    )
    partition_witnesses += _refinement_violations(
        os_g, os_f.lattice, full_rank_cells, values_f, norms_f, "G-element-spreads-in-F"
    )
    if partition_witnesses:
        return EquivalenceVerdict(
            "not-equivalent", qualifier,
            partition_witnesses=tuple(partition_witnesses),
            full_rank_fraction=fraction,
        )
    return EquivalenceVerdict("equivalent", qualifier, full_rank_fraction=fraction)


def canonical_structure_matrix(n: int) -> np.ndarray:
    """The block matrix J with {f, g} = grad(f)^T J grad(g) in the
    (q_1..q_n, p_1..p_n) ordering."""
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return j


@dataclass(frozen=True)
class SymplecticCheckReport:
    passed: bool
    samples: int
    max_symplectic_defect: float  # max entrywise |Dphi^T J Dphi - J|
    max_pullback_defect: float  # max |f_i(x) - f'_i(phi(x))|
    outside_target_box: int  # sampled points phi maps outside the target box
    domain_errors: int
    failure_points: tuple[tuple[float, ...], ...] = ()


def symplectic_equivalence_check(
    sysF: IntegrableSystem,
    sysG: IntegrableSystem,
    phi: Sequence[Expr],
    count: int,
    tol: float,
    rng=0,
) -> SymplecticCheckReport:
    """Sampled check that phi is symplectic and pulls G's integrals back
    to F's: Dphi^T J Dphi = J and f_i = f'_i o phi at `count` points."""
    if sysF.n != sysG.n:
        raise ValueError(f"systems have different n: {sysF.n} vs {sysG.n}")
    n = sysF.n
    phi = tuple(phi)
    if len(phi) != 2 * n:
        raise ValueError(f"phi needs {2 * n} components, got {len(phi)}")
    for k, comp in enumerate(phi):
        bad = [i for i in free_variables(comp) if i >= 2 * n]
        if bad:
            raise ValueError(f"phi component {k} uses variable index {max(bad)}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")

    from .expr import differentiate  # local import keeps module deps tidy

    rng = as_rng(rng)
    x = sysF.box.sample(rng, count)

    phi_vals = np.stack([eval_array(comp, x) for comp in phi])  # (2n, N)
    jac = np.empty((2 * n, 2 * n, count))
    for r in range(2 * n):
        for ccol in range(2 * n):
            jac[r, ccol] = eval_array(differentiate(phi[r], ccol), x)

    j_matrix = canonical_structure_matrix(n)
    finite = np.all(np.isfinite(phi_vals), axis=0) & np.all(
        np.isfinite(jac), axis=(0, 1)
    )

    # (Dphi^T J Dphi)[c, d] = sum_{r,s} Dphi[r,c] J[r,s] Dphi[s,d]
    product = np.einsum("rcn,rs,sdn->cdn", jac, j_matrix, jac)
    sym_defect_per = np.max(np.abs(product - j_matrix[:, :, None]), axis=(0, 1))

    values_f = sysF.values_array(x)
    values_g_at_phi = sysG.values_array(phi_vals)
    finite &= np.all(np.isfinite(values_g_at_phi), axis=0) & np.all(
        np.isfinite(values_f), axis=0
    )
    pull_defect_per = np.max(np.abs(values_f - values_g_at_phi), axis=0)

    outside = int(np.sum(~sysG.box.contains_batch(phi_vals) & finite))
    domain_errors = int(np.sum(~finite))
    if np.any(finite):
        max_sym = float(np.max(sym_defect_per[finite]))
        max_pull = float(np.max(pull_defect_per[finite]))
    else:
        max_sym = np.inf
        max_pull = np.inf
    bad = ~finite | (sym_defect_per > tol) | (pull_defect_per > tol)
    failure_points = tuple(
        tuple(float(v) for v in x[:, k])
        for k in np.flatnonzero(bad)[:MAX_REPORTED_WITNESSES]
    )
    passed = domain_errors == 0 and max_sym <= tol and max_pull <= tol
    return SymplecticCheckReport(
        passed, count, max_sym, max_pull, outside, domain_errors, failure_points
    )


@dataclass(frozen=True)
class ClosednessSide:
    axis: int
    side: str  # "min" | "max"
    value: float
    classification: str  # "attained-interior" | "suspect-limit" | "unbounded-trend" | "stable"
    extrapolated: float | None = None


@dataclass(frozen=True)
class ClosednessReport:
    """Box-limited probe of whether the sampled image looks closed.

    Heuristic and non-conclusive by construction: the analysis window
    cuts the image, so each non-attained extreme is classified by the
    trend over nested sub-boxes instead of proved.
    """

    verdict: str  # "closed-in-box" | "suspect" | "closed-vacuously"
    sides: tuple[ClosednessSide, ...]
    disclaimer: str = (
        "box-limited heuristic: closedness of the true image is not "
        "decidable from samples in a bounded window"
    )

    @property
    def suspects(self) -> tuple[ClosednessSide, ...]:
        return tuple(s for s in self.sides if s.classification == "suspect-limit")


def image_closedness_probe(
    sys: IntegrableSystem, grid: CellGrid, margin: float = 1e-9
) -> ClosednessReport:
    """Classify each side of the sampled image's bounding interval.

    An extreme attained at an interior cell closes its side.  An
    extreme attained only in the outermost cell ring is compared over
    nested sub-boxes (60%, 80%, 100% of the window): a geometric trend
    extrapolates to a finite limit no sample attains within `margin`
    (suspect), a non-shrinking trend marks an unbounded, box-limited
    side.
    """
    if margin <= 0.0:
        raise ValueError(f"margin must be > 0, got {margin}")
    centers = grid.centers()
    values = sys.values_array(centers)
    finite = np.all(np.isfinite(values), axis=0)
    if not np.any(finite):
        return ClosednessReport("closed-vacuously", ())

    multis = np.stack(np.unravel_index(np.arange(grid.ncells), grid.res))
    res = np.array(grid.res)[:, None]
    boundary_layer = np.any((multis == 0) | (multis == res - 1), axis=0)

    shrink_masks = {
        alpha: finite & grid.box.contains_batch(centers, factor=alpha)
        for alpha in (0.6, 0.8, 1.0)
    }

    sides: list[ClosednessSide] = []
    for j in range(sys.n):
        for side, pick in (("min", np.min), ("max", np.max)):
            extremes = {
                alpha: float(pick(values[j][mask])) if np.any(mask) else np.nan
                for alpha, mask in shrink_masks.items()
            }
            v = extremes[1.0]
            attained = finite & (np.abs(values[j] - v) <= margin)
            if np.any(attained & ~boundary_layer):
                sides.append(ClosednessSide(j, side, v, "attained-interior"))
                continue
            d1 = abs(extremes[0.8] - extremes[0.6])
            d2 = abs(extremes[1.0] - extremes[0.8])
            if d2 <= margin:
                sides.append(ClosednessSide(j, side, v, "stable"))
                continue
            ratio = d2 / d1 if d1 > 0 else np.inf
            if ratio < 0.9:
                direction = np.sign(extremes[1.0] - extremes[0.8])
                limit = v + direction * d2 * ratio / (1.0 - ratio)
                if abs(limit - v) > margin:
                    sides.append(ClosednessSide(j, side, v, "suspect-limit", float(limit)))
                else:
                    sides.append(ClosednessSide(j, side, v, "stable"))
            else:
                sides.append(ClosednessSide(j, side, v, "unbounded-trend"))
    verdict = "suspect" if any(s.classification == "suspect-limit" for s in sides) else "closed-in-box"
    return ClosednessReport(verdict, tuple(sides))
