"""Integrable-system model on (R^{2n}, canonical symplectic form).

The phase point is the flat vector (q_1..q_n, p_1..p_n) and the
canonical structure is fixed throughout:

    {f, g} = sum_i  df/dq_i dg/dp_i - df/dp_i dg/dq_i
    X_f    = (df/dp_1..df/dp_n, -df/dq_1..-df/dq_n)

With these signs the Lie derivative of f along X_g equals {f, g}, which
is the convention every involution and commutant test below relies on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expr import (
    Const,
    Expr,
    InconclusiveError,
    PhaseVariables,
    ZeroVerdict,
    compile_scalar,
    compile_stack,
    differentiate,
    eval_array,
    free_variables,
    is_identically_zero,
    simplify,
    to_source,
)
from .expr.nodes import add, mul, neg, sub
from .grids import Box, as_rng

DEFAULT_RANK_TOL = 1e-9
DEFAULT_FULL_RANK_THRESHOLD = 0.95
BAND_KAPPA = 0.75
MAX_WITNESSES = 20


def poisson_bracket(f: Expr, g: Expr, n: int) -> Expr:
    """Canonical Poisson bracket {f, g} as a simplified expression."""
    total: Expr | None = None
    for i in range(n):
        qi, pi = i, n + i
        term = sub(
            mul(differentiate(f, qi), differentiate(g, pi)),
            mul(differentiate(f, pi), differentiate(g, qi)),
        )
        total = term if total is None else add(total, term)
    return simplify(total if total is not None else Const(0.0))


@dataclass(frozen=True)
class VectorFieldExpr:
    """Symbolic vector field with components ordered (dq_1..dq_n, dp_1..dp_n)."""

    components: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.components) % 2 != 0 or len(self.components) == 0:
            raise ValueError(f"need 2n components, got {len(self.components)}")

    @property
    def n(self) -> int:
        return len(self.components) // 2


def hamiltonian_vector_field(f: Expr, n: int) -> VectorFieldExpr:
    """X_f in canonical coordinates: dq_i/dt = df/dp_i, dp_i/dt = -df/dq_i."""
    qdot = [simplify(differentiate(f, n + i)) for i in range(n)]
    pdot = [simplify(neg(differentiate(f, i))) for i in range(n)]
    return VectorFieldExpr(tuple(qdot) + tuple(pdot))


@dataclass(eq=False)
class IntegrableSystem:
    """A candidate integrable system: n integrals on the box in R^{2n}.

    The box is the analysis window; every sampled verdict in this
    package draws points from it.
    """

    name: str
    n: int
    integrals: tuple[Expr, ...]
    box: Box
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.integrals = tuple(self.integrals)
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        if len(self.integrals) != self.n:
            raise ValueError(
                f"system {self.name!r}: expected {self.n} integrals, got {len(self.integrals)}"
            )
        if self.box.dim != 2 * self.n:
            raise ValueError(
                f"system {self.name!r}: box has {self.box.dim} axes, expected {2 * self.n}"
            )
        for k, f in enumerate(self.integrals):
            high = [i for i in free_variables(f) if i >= 2 * self.n]
            if high:
                raise ValueError(
                    f"system {self.name!r}: integral {k} uses variable index {max(high)}, "
                    f"but only {2 * self.n} variables are declared"
                )

    @property
    def variables(self) -> PhaseVariables:
        return PhaseVariables(self.n)

    def describe(self) -> list[str]:
        return [to_source(f, self.variables) for f in self.integrals]

    # Compiled artifacts are built once per system and reused by the
    # flow, fiber and quotient modules.
    def _memo(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    def value_fn(self, i: int) -> Callable:
        return self._memo(("value", i), lambda: compile_scalar(self.integrals[i]))

    def values_at(self, x) -> np.ndarray:
        return np.array([self.value_fn(i)(x) for i in range(self.n)])

    def values_array(self, x: np.ndarray) -> np.ndarray:
        """Integral values over a batch (2n, N) -> (n, N)."""
        return np.stack([eval_array(f, x) for f in self.integrals])

    def gradient(self, i: int) -> tuple[Expr, ...]:
        return self._memo(
            ("grad", i),
            lambda: tuple(differentiate(self.integrals[i], v) for v in range(2 * self.n)),
        )

    def gradient_fn(self, i: int) -> Callable:
        return self._memo(("gradfn", i), lambda: compile_stack(self.gradient(i)))

    def gradients_array(self, x: np.ndarray) -> np.ndarray:
        """Gradient rows over a batch (2n, N) -> (n, 2n, N)."""
        return np.stack(
            [np.stack([eval_array(g, x) for g in self.gradient(i)]) for i in range(self.n)]
        )

    def vector_field(self, i: int) -> VectorFieldExpr:
        return self._memo(
            ("vf", i), lambda: hamiltonian_vector_field(self.integrals[i], self.n)
        )

    def vector_field_fn(self, i: int) -> Callable:
        return self._memo(
            ("vffn", i), lambda: compile_stack(self.vector_field(i).components)
        )

    def vector_field_array(self, i: int, x: np.ndarray) -> np.ndarray:
        """Field values over a batch (2n, N) -> (2n, N)."""
        comps = self.vector_field(i).components
        return np.stack([eval_array(c, x) for c in comps])

    def box_sampler(self, rng) -> Callable[[], np.ndarray]:
        rng = as_rng(rng)
        return lambda: self.box.sample(rng)


def level_band_mask(
    sys: IntegrableSystem,
    c: Sequence[float],
    centers: np.ndarray,
    max_cell_size: float,
    atol: float,
    kappa: float = BAND_KAPPA,
) -> tuple[np.ndarray, int]:
    """Gradient-aware level-band membership for a batch of cell centers.

    A center x passes when |f_i(x) - c_i| <= max(atol, kappa*h*|grad f_i(x)|)
    for every integral; the adaptive term keeps the discrete fiber free
    of resolution gaps where the level functions are steep.  Returns the
    boolean mask and the count of centers skipped for domain errors.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (sys.n,):
        raise ValueError(f"expected image point of length {sys.n}, got shape {c.shape}")
    if atol <= 0.0:
        raise ValueError(f"atol must be > 0, got {atol}")
    values = sys.values_array(centers)
    grads = sys.gradients_array(centers)
    finite = np.all(np.isfinite(values), axis=0) & np.all(
        np.isfinite(grads), axis=(0, 1)
    )
    grad_norms = np.sqrt(np.sum(grads * grads, axis=1))
    tols = np.maximum(atol, kappa * max_cell_size * grad_norms)
    inside = np.all(np.abs(values - c[:, None]) <= tols, axis=0)
    return inside & finite, int(np.sum(~finite))


@dataclass(frozen=True)
class InvolutionReport:
    """Pairwise zero-verdicts for {f_i, f_j}; the matrix is stored for
    i < j and mirrored on access (bracket antisymmetry)."""

    n: int
    verdicts: dict[tuple[int, int], ZeroVerdict]
    passed: bool
    numeric_only_pairs: tuple[tuple[int, int], ...]

    def verdict(self, i: int, j: int) -> ZeroVerdict:
        if i == j:
            return ZeroVerdict("symbolic-zero")
        key = (min(i, j), max(i, j))
        return self.verdicts[key]

    @property
    def failures(self) -> list[tuple[int, int, ZeroVerdict]]:
        return [(i, j, v) for (i, j), v in sorted(self.verdicts.items()) if not v.is_zero]


def check_involution(
    sys: IntegrableSystem, count: int, tol: float, rng=0
) -> InvolutionReport:
    """Test {f_i, f_j} = 0 for every pair i < j by symbolic reduction
    with sampled fallback inside the system box."""
    sampler = sys.box_sampler(rng)
    verdicts: dict[tuple[int, int], ZeroVerdict] = {}
    numeric_only = []
    for i in range(sys.n):
        for j in range(i + 1, sys.n):
            bracket = poisson_bracket(sys.integrals[i], sys.integrals[j], sys.n)
            verdict = is_identically_zero(bracket, sampler, count, tol)
            verdicts[(i, j)] = verdict
            if verdict.kind == "numeric-zero":
                numeric_only.append((i, j))
    passed = all(v.is_zero for v in verdicts.values())
    return InvolutionReport(sys.n, verdicts, passed, tuple(numeric_only))


def _rank_from_singular_values(s: np.ndarray, tol: float) -> int:
    top = float(s[0]) if s.size else 0.0
    if top <= 0.0 or not np.isfinite(top):
        return 0
    return int(np.sum(s >= tol * top))


def jacobian_rank(sys: IntegrableSystem, x, tol: float = DEFAULT_RANK_TOL) -> int:
    """Numerical rank of DF(x) via singular values >= tol * sigma_max."""
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    rows = [sys.gradient_fn(i)(x) for i in range(sys.n)]
    matrix = np.array(rows, dtype=float)
    s = np.linalg.svd(matrix, compute_uv=False)
    return _rank_from_singular_values(s, tol)


@dataclass(frozen=True)
class RankReport:
    samples: int
    histogram: tuple[int, ...]  # counts for rank 0..n
    full_rank_fraction: float
    low_rank_witnesses: tuple[tuple[float, ...], ...]
    skipped: int  # samples lost to domain errors

    def passes(self, threshold: float = DEFAULT_FULL_RANK_THRESHOLD) -> bool:
        return self.full_rank_fraction >= threshold


def rank_scan(
    sys: IntegrableSystem, samples: int, tol: float = DEFAULT_RANK_TOL, rng=0
) -> RankReport:
    """Rank histogram of DF over uniform samples from the box.

    A statistical surrogate for the almost-everywhere independence
    requirement: density of the full-rank set is not decidable from
    samples, so only the observed fraction is reported.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = as_rng(rng)
    x = sys.box.sample(rng, samples)
    grads = sys.gradients_array(x)  # (n, 2n, N)
    stacked = np.moveaxis(grads, 2, 0)  # (N, n, 2n)
    finite = np.all(np.isfinite(stacked), axis=(1, 2))
    hist = np.zeros(sys.n + 1, dtype=int)
    witnesses: list[tuple[float, ...]] = []
    ranks = np.zeros(samples, dtype=int)
    if np.any(finite):
        s = np.linalg.svd(stacked[finite], compute_uv=False)  # (M, n)
        top = s[:, 0]
        good_top = (top > 0.0) & np.isfinite(top)
        counts = np.zeros(len(s), dtype=int)
        counts[good_top] = np.sum(
            s[good_top] >= tol * top[good_top, None], axis=1
        )
        ranks[finite] = counts
    for k in range(samples):
        if not finite[k]:
            continue
        hist[ranks[k]] += 1
        if ranks[k] < sys.n and len(witnesses) < MAX_WITNESSES:
            witnesses.append(tuple(float(v) for v in x[:, k]))
    valid = int(np.sum(finite))
    fraction = float(hist[sys.n] / valid) if valid else 0.0
    return RankReport(samples, tuple(int(v) for v in hist), fraction, tuple(witnesses), samples - valid)


@dataclass(frozen=True)
class CommutantVerdict:
    """Membership verdict for a candidate commutant element."""

    member: bool
    verdicts: tuple[ZeroVerdict, ...]  # one per integral
    failing_index: int | None = None
    witness: tuple[float, ...] | None = None

    @property
    def numeric_only(self) -> bool:
        return self.member and any(v.kind == "numeric-zero" for v in self.verdicts)


def commutant_test(
    sys: IntegrableSystem, g: Expr, count: int, tol: float, rng=0
) -> CommutantVerdict:
    """Does g Poisson-commute with every integral of the system?"""
    sampler = sys.box_sampler(rng)
    verdicts: list[ZeroVerdict] = []
    for i in range(sys.n):
        bracket = poisson_bracket(g, sys.integrals[i], sys.n)
        try:
            verdict = is_identically_zero(bracket, sampler, count, tol)
        except InconclusiveError:
            raise InconclusiveError(
                f"commutant test against integral {i} hit only domain errors"
            ) from None
        verdicts.append(verdict)
    for i, verdict in enumerate(verdicts):
        if not verdict.is_zero:
            return CommutantVerdict(False, tuple(verdicts), i, verdict.witness)
    return CommutantVerdict(True, tuple(verdicts))
