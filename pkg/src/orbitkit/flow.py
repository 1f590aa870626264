"""Numerical Hamiltonian flows and orbit exploration.

Flows are integrated with fixed-step classical RK4.  Orbits of the
whole family {X_{f_1}..X_{f_n}} are explored breadth-first on a dedup
cell grid: each newly visited cell contributes its center as a frontier
seed, moves integrate every field for +/- one time quantum, and a cell
joins the cloud only when its center passes the same gradient-aware
level-band test used for fiber sampling.  That keeps the cloud a
sub-complex of the discrete fiber through the seed (the numerical form
of flow-invariance of the integrals) while letting it diffuse across
the full band width, so coverage against fiber components is
meaningful.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .expr import EvalDomainError
from .grids import CellGrid, as_rng
from .hamiltonian import BAND_KAPPA, IntegrableSystem, jacobian_rank, level_band_mask

DEFAULT_STEP = 1e-3
DEFAULT_QUANTUM = 0.1
DEFAULT_DEDUP_RESOLUTION = 200
DEFAULT_BAND_ATOL = 1e-3
ESCAPE_INFLATION = 1.1
MAX_STEPS = 20_000_000


class FlowError(RuntimeError):
    pass


@dataclass
class Trajectory:
    """Samples of one Hamiltonian flow, times strictly increasing."""

    system: IntegrableSystem
    field_index: int
    times: np.ndarray  # (S,)
    points: np.ndarray  # (S, 2n)
    step: float
    escaped: bool = False
    escape_time: float | None = None
    reversed_field: bool = False

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != 2 * self.system.n:
            raise ValueError(f"points must have shape (S, {2 * self.system.n})")
        if len(self.times) != len(self.points):
            raise ValueError("times and points must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]


def _rk4_step(fn: Callable, x: list[float], h: float) -> list[float]:
    k1 = fn(x)
    k2 = fn([x[i] + 0.5 * h * k1[i] for i in range(len(x))])
    k3 = fn([x[i] + 0.5 * h * k2[i] for i in range(len(x))])
    k4 = fn([x[i] + h * k3[i] for i in range(len(x))])
    return [
        x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        for i in range(len(x))
    ]


def integrate_flow(
    sys: IntegrableSystem,
    i: int,
    x0,
    t_final: float,
    h: float = DEFAULT_STEP,
    *,
    reverse: bool = False,
) -> Trajectory:
    """Integrate X_{f_i} from x0 for time t_final > 0 with fixed step h.

    A final partial step lands exactly on t_final.  Integration truncates
    with the escape flag as soon as a sample leaves the box inflated by
    10%.  reverse=True integrates the time-reversed field (the flow for
    negative times) while keeping recorded times increasing.
    """
    if not 0 <= i < sys.n:
        raise ValueError(f"field index {i} out of range for n={sys.n}")
    if h <= 0.0:
        raise ValueError(f"step must be > 0, got {h}")
    if t_final <= 0.0:
        raise ValueError(f"t_final must be > 0, got {t_final} (use reverse=True for backward flow)")
    n_steps = int(math.ceil(t_final / h - 1e-12))
    if n_steps > MAX_STEPS:
        raise FlowError(
            f"step underflow: {n_steps} steps requested for t_final={t_final}, h={h}"
        )

    x0 = [float(v) for v in x0]
    if len(x0) != 2 * sys.n:
        raise ValueError(f"x0 must have length {2 * sys.n}")
    raw = sys.vector_field_fn(i)
    sign = -1.0 if reverse else 1.0
    fn = (lambda x: [sign * v for v in raw(x)]) if reverse else raw

    try:
        fn(x0)
    except (ValueError, ZeroDivisionError, OverflowError) as err:
        raise EvalDomainError(f"vector field undefined at x0 ({err})", sys.integrals[i], sys.n)

    times = [0.0]
    points = [x0]
    escaped = False
    escape_time = None
    x = x0
    t = 0.0
    for k in range(n_steps):
        step = min(h, t_final - t)
        try:
            x = _rk4_step(fn, x, step)
        except (ValueError, ZeroDivisionError, OverflowError) as err:
            raise FlowError(f"evaluation domain error at t={t + step:.6g}: {err}") from None
        t = t_final if k == n_steps - 1 else t + step
        times.append(t)
        points.append(x)
        if not sys.box.contains(x, factor=ESCAPE_INFLATION):
            escaped = True
            escape_time = t
            break
    return Trajectory(
        sys, i, np.array(times), np.array(points), h, escaped, escape_time, reverse
    )


def conservation_check(sys: IntegrableSystem, traj: Trajectory) -> np.ndarray:
    """Max drift of every integral along the trajectory.

    Returns max_t |f_j(x(t)) - f_j(x(0))| for each j.  For involutive
    systems the drift along any X_{f_i} is pure integration error; for
    non-involutive pairs it measures genuine non-conservation.
    """
    if len(traj.points) == 0:
        raise ValueError("trajectory is empty")
    values = sys.values_array(traj.points.T)  # (n, S)
    if not np.all(np.isfinite(values)):
        raise FlowError("evaluation domain error while checking conservation")
    return np.max(np.abs(values - values[:, :1]), axis=1)


def _rk4_batch(field: Callable, x0: np.ndarray, h: float, steps: int, sign: float) -> np.ndarray:
    """Vectorized RK4: x0 (2n, B) -> samples (steps+1, 2n, B)."""
    out = np.empty((steps + 1,) + x0.shape)
    out[0] = x0
    x = x0
    hh = sign * h
    with np.errstate(all="ignore"):
        for s in range(steps):
            k1 = field(x)
            k2 = field(x + 0.5 * hh * k1)
            k3 = field(x + 0.5 * hh * k2)
            k4 = field(x + hh * k3)
            x = x + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[s + 1] = x
    return out


@dataclass
class OrbitSample:
    """Point cloud reached from x0 by composing the family's flows.

    cells maps dedup-grid cell index -> first point recorded there;
    moves logs (field index, signed quantum) in execution order.
    """

    system: IntegrableSystem
    x0: np.ndarray
    grid: CellGrid
    cells: dict[int, np.ndarray]
    moves: list[tuple[int, float]] = field(default_factory=list)
    budget_used: int = 0
    escaped_branches: int = 0
    closed: bool = False
    f_drift: float = 0.0  # max |F(x) - F(x0)|_inf over the cloud

    @property
    def points(self) -> list[np.ndarray]:
        return list(self.cells.values())

    @property
    def cell_indices(self) -> list[int]:
        return list(self.cells.keys())


def orbit_explore(
    sys: IntegrableSystem,
    x0,
    budget: int,
    h: float = DEFAULT_STEP,
    *,
    quantum: float = DEFAULT_QUANTUM,
    grid: CellGrid | None = None,
    resolution: int = DEFAULT_DEDUP_RESOLUTION,
    atol: float = DEFAULT_BAND_ATOL,
    kappa: float = BAND_KAPPA,
) -> OrbitSample:
    """Breadth-first orbit exploration at cell resolution.

    budget counts frontier-point expansions; one expansion integrates
    every X_{f_i} forward and backward for one time quantum.  The run
    stops at the budget or at closure (no new cells).  Branches leaving
    the box are pruned and counted in escaped_branches; exploration is
    fully deterministic.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if h <= 0.0 or quantum <= 0.0:
        raise ValueError("step and quantum must be > 0")
    x0 = np.asarray(x0, dtype=float)
    if not sys.box.contains(x0):
        raise ValueError(f"seed point {x0.tolist()} is outside the box")
    if grid is None:
        grid = CellGrid.regular(sys.box, resolution)

    c_target = sys.values_at(x0)
    steps = max(1, int(round(quantum / h)))
    hmax = grid.max_cell_size()

    def band_accepts(flat_cells: list[int]) -> np.ndarray:
        centers = grid.centers_of(np.array(flat_cells, dtype=np.int64))
        mask, _ = level_band_mask(sys, c_target, centers, hmax, atol, kappa)
        return mask

    seed_cell = grid.cell_index(x0)
    cells: dict[int, np.ndarray] = {seed_cell: x0.copy()}
    band_cache: dict[int, bool] = {seed_cell: True}  # seed cell kept unconditionally
    sample = OrbitSample(sys, x0.copy(), grid, cells)

    frontier: list[int] = [seed_cell]
    while frontier and sample.budget_used < budget:
        take = min(len(frontier), budget - sample.budget_used)
        wave, frontier = frontier[:take], frontier[take:]
        sample.budget_used += len(wave)
        reps = np.stack([cells[c] for c in wave], axis=1)  # (2n, B)

        new_cells: list[int] = []
        for fidx in range(sys.n):
            field_fn = lambda x, _i=fidx: sys.vector_field_array(_i, x)
            for sign in (1.0, -1.0):
                batch = _rk4_batch(field_fn, reps, h, steps, sign)
                # (steps+1, 2n, B) -> (2n, (steps+1)*B), sample-major layout
                points_flat = batch.transpose(1, 0, 2).reshape(2 * sys.n, -1)
                inside = sys.box.contains_batch(points_flat).reshape(steps + 1, len(wave))
                flat = grid.cell_index_batch(points_flat).reshape(steps + 1, len(wave))
                for b in range(len(wave)):
                    sample.moves.append((fidx, sign * quantum))
                    pending: list[tuple[int, np.ndarray]] = []
                    for s in range(1, steps + 1):
                        if not inside[s, b]:
                            sample.escaped_branches += 1
                            break
                        cell = int(flat[s, b])
                        if cell in cells or cell < 0:
                            continue
                        if not any(cell == p[0] for p in pending):
                            pending.append((cell, batch[s, :, b].copy()))
                    if not pending:
                        continue
                    unknown = [c for c, _ in pending if c not in band_cache]
                    if unknown:
                        verdicts = band_accepts(unknown)
                        band_cache.update(zip(unknown, (bool(v) for v in verdicts)))
                    for cell, _point in pending:
                        if cell in cells or not band_cache[cell]:
                            continue
                        # the cell center is the recorded representative:
                        # it passed the band test, and expanding from
                        # centers lets the cloud diffuse across the full
                        # band width instead of tracing one exact leaf
                        cells[cell] = grid.center_of(cell)
                        new_cells.append(cell)
        frontier.extend(new_cells)

    sample.closed = not frontier
    cloud = np.stack(list(cells.values()), axis=1)
    values = sys.values_array(cloud)
    drift = np.abs(values - c_target[:, None])
    sample.f_drift = float(np.max(drift)) if drift.size else 0.0
    return sample


def orbit_dimension(sys: IntegrableSystem, x, tol: float = 1e-9) -> int:
    """Dimension of the orbit through x.

    The span of {X_{f_i}(x)} has the same dimension as the row space of
    DF(x): the symplectic form pairs the two spaces non-degenerately, so
    this delegates to the Jacobian rank.
    """
    return jacobian_rank(sys, x, tol)


@dataclass(frozen=True)
class EscapeEvent:
    field_index: int
    direction: int  # +1 forward, -1 backward
    seed: tuple[float, ...]
    t_escape: float
    growth: str  # "bounded" | "linear" | "superlinear" | "immediate"


@dataclass(frozen=True)
class CompletenessReport:
    """Escape-time heuristic for the completeness hypothesis.

    Absence of witnesses is NOT a proof of completeness; the disclaimer
    ships with every report.
    """

    trials: int
    t_horizon: float
    events: tuple[EscapeEvent, ...]
    disclaimer: str = (
        "heuristic probe: no escape witness does not prove the fields are "
        "complete, and growth classification is a least-squares heuristic"
    )

    @property
    def blow_up_suspected(self) -> tuple[EscapeEvent, ...]:
        return tuple(e for e in self.events if e.growth not in ("bounded", "linear"))

    @property
    def no_blow_up_observed(self) -> bool:
        return len(self.blow_up_suspected) == 0


def _classify_growth(times: np.ndarray, norms: np.ndarray) -> str:
    """Name the norm-growth class of an escaping trajectory.

    No sustained norm growth means the orbit left through a box corner
    ("bounded", e.g. a large circle in a square window).  Otherwise the
    monotone tail past the norm minimum is fit as n(t) (linear escape)
    and log n(t) (exponential escape); the better least-squares fit
    names the class.  Too few samples to fit is "immediate" and counts
    as suspicious.
    """
    start = max(float(norms[0]), 1e-12)
    if float(norms[-1]) <= 1.5 * start:
        return "bounded"
    # fit only the monotone tail, clear of any valley around the norm minimum
    i0 = int(np.argmin(norms))
    n_min = max(float(norms[i0]), 1e-12)
    t, n = times[i0:], norms[i0:]
    keep = n >= 1.3 * n_min
    t, n = t[keep], n[keep]
    if len(t) < 8 or n[-1] <= n[0]:
        return "immediate"
    # linear escape: dn/dt saturates; exponential: dn/dt grows with n
    v = np.gradient(n, t)
    slope = float(np.polyfit(n, v, 1)[0])
    if slope * (n[-1] - n[0]) > 0.5 * float(np.mean(v)):
        return "superlinear"
    return "linear"


def completeness_probe(
    sys: IntegrableSystem,
    trials: int,
    t_horizon: float,
    h: float = DEFAULT_STEP,
    rng=0,
) -> CompletenessReport:
    """Integrate every X_{f_i} from random seeds to +/- t_horizon and
    classify any escape from the inflated box by its norm growth."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if t_horizon <= 0.0:
        raise ValueError(f"t_horizon must be > 0, got {t_horizon}")
    rng = as_rng(rng)
    events: list[EscapeEvent] = []
    for _ in range(trials):
        seed = sys.box.sample(rng)
        for i in range(sys.n):
            for direction in (1, -1):
                try:
                    traj = integrate_flow(
                        sys, i, seed, t_horizon, h, reverse=direction < 0
                    )
                except FlowError:
                    events.append(
                        EscapeEvent(i, direction, tuple(seed), math.nan, "immediate")
                    )
                    continue
                if not traj.escaped:
                    continue
                norms = np.linalg.norm(traj.points, axis=1)
                growth = _classify_growth(traj.times, norms)
                events.append(
                    EscapeEvent(
                        i, direction, tuple(float(v) for v in seed),
                        float(traj.escape_time), growth,
                    )
                )
    return CompletenessReport(trials, t_horizon, tuple(events))
