"""RIS termination optimization.

Maximizes the normalized received power over the RIS loads under either
the physically consistent or the conventional model. Provides an
exhaustive grid oracle, a multi-start Nelder-Mead local search, the
cross-application of conventional optima to the physical model, and
Monte-Carlo random-phase baselines.
"""
import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from .channel import LinkConfig, LinkGeometry, build_unilateral_multiport
from .errors import GridBudgetError, OptimizationError, RisNetError
from .multiport import MultiportImpedance
from .ris import (
    MODELS,
    RisTermination,
    evaluate_affine,
    reactances_with_surrogate,
    reference_constant,
    theta_affine_form,
)
from .utils import to_db, wrap_phase

logger = logging.getLogger(__name__)

DOMAINS = ("phase", "reactance")
DEFAULT_REACTANCE_BOUND = 100.0
DEFAULT_CELL_BUDGET = 50_000_000
DEFAULT_MAX_ELEMENTS = 3
DEFAULT_TRIALS = 100_000
DEFAULT_STARTS = 8
TIE_TOLERANCE = 1e-9
REFINE_TIE_TOLERANCE = 1e-14
CONFIDENCE_Z = 1.96
REFINE_POINTS = 41
MAX_TIE_CANDIDATES = 10_000
_FAMILY_SAMPLES = 3600


def _cot_half(phi: np.ndarray) -> np.ndarray:
    """Normalized reactance x = cot(phi / 2); infinite for phi = 0."""
    half = np.asarray(phi, dtype=float) / 2.0
    with np.errstate(divide="ignore"):
        return np.cos(half) / np.sin(half)


@dataclass(frozen=True, eq=False)
class OptimizationProblem:
    """
    Received-power maximization over the RIS terminations.

    Variables are either reflection phases (radians) or normalized
    reactances x = X / R bounded by ``reactance_bound``. The objective is
    the squared Frobenius norm of the transfer matrix normalized to RIS
    element ``reference``; for a SISO link it is |D0'|^2.
    """

    cfg: LinkConfig
    geom: LinkGeometry
    model: str = "physical"
    domain: str = "phase"
    reference: int = 0
    reactance_bound: float = DEFAULT_REACTANCE_BOUND

    def __post_init__(self):
        if self.model not in MODELS:
            raise RisNetError(f"unknown model {self.model!r}, expected one of {MODELS}")
        if self.domain not in DOMAINS:
            raise RisNetError(f"unknown variable domain {self.domain!r}, expected one of {DOMAINS}")
        if not self.reactance_bound > 0:
            raise RisNetError("reactance bound must be positive")

    @cached_property
    def impedance(self) -> MultiportImpedance:
        return build_unilateral_multiport(self.cfg, self.geom)

    @cached_property
    def affine(self) -> Tuple[np.ndarray, np.ndarray]:
        """Normalized (A, B) with transfer = A + sum_n B[n] Theta_n."""
        scale = reference_constant(self.cfg, self.geom, self.reference)
        return theta_affine_form(self.impedance, self.model, scale)

    @property
    def n_variables(self) -> int:
        return self.cfg.N

    @property
    def is_siso(self) -> bool:
        return self.cfg.M == 1 and self.cfg.K == 1

    def with_model(self, model: str, domain: Optional[str] = None) -> "OptimizationProblem":
        return replace(self, model=model, domain=domain or self.domain)

    def thetas(self, variables) -> np.ndarray:
        """Reflection coefficients for a (batch of) variable vector(s)."""
        v = np.asarray(variables, dtype=float)
        if self.domain == "phase":
            return np.exp(1j * v)
        jx = 1j * v
        return (jx - 1.0) / (jx + 1.0)

    def reactances(self, variables) -> np.ndarray:
        """Normalized reactances x for a (batch of) variable vector(s)."""
        v = np.asarray(variables, dtype=float)
        if self.domain == "reactance":
            return v
        return _cot_half(v)

    def phases_to_variables(self, phases) -> np.ndarray:
        phases = np.asarray(wrap_phase(phases))
        if self.domain == "phase":
            return phases
        return np.clip(_cot_half(phases), -self.reactance_bound, self.reactance_bound)

    def gain_from_thetas(self, thetas) -> Union[float, np.ndarray]:
        transfer = evaluate_affine(*self.affine, thetas)
        gain = np.sum(np.abs(transfer) ** 2, axis=(-2, -1))
        if gain.ndim == 0:
            return float(gain)
        return gain

    def gain(self, variables) -> Union[float, np.ndarray]:
        """Objective value(s); accepts one vector or an (..., N) batch."""
        return self.gain_from_thetas(self.thetas(variables))


@dataclass(frozen=True, eq=False)
class OptimizationReport:
    """Outcome of an optimization run."""

    best_variables: np.ndarray
    best_reactances: np.ndarray
    best_gain: float
    iterations: int
    model: str
    domain: str
    oracle_gap: Optional[float] = None
    seed: Optional[int] = None
    source_gain: Optional[float] = None

    @property
    def best_gain_db(self) -> float:
        return to_db(self.best_gain)

    @property
    def best_phases(self) -> np.ndarray:
        if self.domain == "phase":
            return np.asarray(wrap_phase(self.best_variables))
        x = np.asarray(self.best_variables, dtype=float)
        return np.asarray(wrap_phase(np.angle((1j * x - 1.0) / (1j * x + 1.0))))

    def with_oracle(self, oracle: "OptimizationReport") -> "OptimizationReport":
        """Attach the relative gap to an oracle result."""
        gap = abs(oracle.best_gain - self.best_gain) / max(abs(oracle.best_gain), np.finfo(float).tiny)
        return replace(self, oracle_gap=float(gap))


@dataclass(frozen=True)
class GridSpec:
    """
    Per-variable grid ``lower:step:upper``.

    Scalars apply to every variable. ``refinements`` zoom passes re-grid
    the neighbourhood of the best cell with a tenfold finer step each.
    """

    lower: Union[float, Sequence[float]]
    upper: Union[float, Sequence[float]]
    step: Union[float, Sequence[float]]
    refinements: int = 6
    endpoint: bool = True

    def axes(self, n: int) -> List[np.ndarray]:
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,))
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,))
        step = np.broadcast_to(np.asarray(self.step, dtype=float), (n,))
        axes = []
        for lo, hi, st in zip(lower, upper, step):
            if not (np.isfinite(lo) and np.isfinite(hi) and st > 0 and hi >= lo):
                raise GridBudgetError(f"invalid grid range [{lo}, {hi}] with step {st}")
            intervals = int(round((hi - lo) / st))
            if self.endpoint:
                axes.append(np.linspace(lo, hi, intervals + 1))
            else:
                axes.append(lo + st * np.arange(max(intervals, 1)))
        return axes


def default_grid(problem: OptimizationProblem) -> GridSpec:
    if problem.domain == "phase":
        return GridSpec(0.0, 2.0 * np.pi, 2.0 * np.pi / 360.0, endpoint=False)
    return GridSpec(-3.0, 3.0, 0.01)


def _pick(
    problem: OptimizationProblem,
    points: np.ndarray,
    gains: np.ndarray,
    tolerance: float = TIE_TOLERANCE,
) -> Tuple[np.ndarray, float]:
    """
    Select the best point; among near-ties prefer the smallest reactance
    norm, then the larger leading coordinate.
    """
    best = float(np.max(gains))
    tied = np.flatnonzero(gains >= best - tolerance * abs(best))
    x = problem.reactances(points[tied])
    norms = np.linalg.norm(x, axis=-1)
    norms = np.where(np.isfinite(norms), norms, np.inf)
    # np.lexsort sorts by the last key first
    rounded = np.round(norms, 12)
    leading = -np.nan_to_num(x[:, 0], nan=0.0, posinf=0.0, neginf=0.0)
    order = np.lexsort((leading, rounded))
    chosen = tied[order[0]]
    return points[chosen].copy(), float(gains[chosen])


def _accept_zoom(
    problem: OptimizationProblem,
    point: np.ndarray,
    gain: float,
    new_point: np.ndarray,
    new_gain: float,
) -> bool:
    """A zoomed point replaces the incumbent on a real gain or on a tie with a smaller norm."""
    margin = REFINE_TIE_TOLERANCE * abs(gain)
    if new_gain > gain + margin:
        return True
    if new_gain < gain - margin:
        return False
    norms = np.linalg.norm(problem.reactances(np.stack([point, new_point])), axis=-1)
    return bool(norms[1] < norms[0])


def _exhaustive(
    problem: OptimizationProblem,
    axes: List[np.ndarray],
    chunk_cells: int,
    tolerance: float = TIE_TOLERANCE,
) -> Tuple[np.ndarray, float, int]:
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape))
    best_gain = -np.inf
    cand_points: List[np.ndarray] = []
    cand_gains: List[np.ndarray] = []
    for start in range(0, total, chunk_cells):
        idx = np.arange(start, min(start + chunk_cells, total))
        multi = np.unravel_index(idx, shape)
        points = np.stack([axes[d][multi[d]] for d in range(len(axes))], axis=-1)
        gains = problem.gain(points)
        if not np.all(np.isfinite(gains)):
            bad = points[~np.isfinite(gains)][0]
            raise OptimizationError("non-finite objective on grid", variables=bad)
        chunk_best = float(gains.max())
        if chunk_best > best_gain:
            best_gain = chunk_best
            floor = best_gain - tolerance * abs(best_gain)
            kept = [(p[g >= floor], g[g >= floor]) for p, g in zip(cand_points, cand_gains)]
            cand_points = [p for p, _ in kept]
            cand_gains = [g for _, g in kept]
        floor = best_gain - tolerance * abs(best_gain)
        sel = gains >= floor
        if not np.any(sel):
            continue
        if sum(len(g) for g in cand_gains) < MAX_TIE_CANDIDATES:
            cand_points.append(points[sel])
            cand_gains.append(gains[sel])
        else:
            top = int(np.argmax(gains))
            cand_points.append(points[top:top + 1])
            cand_gains.append(gains[top:top + 1])
    point, gain = _pick(problem, np.concatenate(cand_points), np.concatenate(cand_gains), tolerance)
    return point, gain, total


def grid_oracle(
    problem: OptimizationProblem,
    grid: Optional[GridSpec] = None,
    *,
    max_cells: int = DEFAULT_CELL_BUDGET,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
    chunk_cells: int = 1 << 18,
) -> OptimizationReport:
    """
    Exhaustive grid search followed by zoomed re-gridding.

    Deterministic; intended as an independent check of :func:`local_search`.

    Raises:
        GridBudgetError: If N exceeds ``max_elements`` or the grid exceeds ``max_cells``.
    """
    n = problem.n_variables
    if n > max_elements:
        raise GridBudgetError(f"grid oracle limited to {max_elements} elements, problem has {n}")
    grid = grid or default_grid(problem)
    axes = grid.axes(n)
    cells = math.prod(len(a) for a in axes)
    if cells > max_cells:
        raise GridBudgetError(f"grid has {cells} cells, budget is {max_cells}")
    logger.debug("grid oracle: %d cells over %d variables", cells, n)

    lower = np.array([a[0] for a in axes])
    upper = np.array([a[-1] for a in axes])
    point, gain, evaluated = _exhaustive(problem, axes, chunk_cells)
    steps = [a[1] - a[0] if len(a) > 1 else 0.0 for a in axes]
    for _ in range(grid.refinements):
        fine = []
        for d in range(n):
            axis = np.linspace(point[d] - 2.0 * steps[d], point[d] + 2.0 * steps[d], REFINE_POINTS)
            if problem.domain == "reactance":
                axis = np.unique(np.clip(axis, lower[d], upper[d]))
            fine.append(axis)
        # zoom passes only separate float-level ties
        new_point, new_gain, count = _exhaustive(problem, fine, chunk_cells, REFINE_TIE_TOLERANCE)
        evaluated += count
        if _accept_zoom(problem, point, gain, new_point, new_gain):
            point, gain = new_point, new_gain
        steps = [4.0 * s / (REFINE_POINTS - 1) for s in steps]

    if problem.domain == "phase":
        point = np.asarray(wrap_phase(point))
    return OptimizationReport(
        best_variables=point,
        best_reactances=problem.reactances(point),
        best_gain=gain,
        iterations=evaluated,
        model=problem.model,
        domain=problem.domain,
    )


def cophase_solution(problem: OptimizationProblem) -> Optional[np.ndarray]:
    """
    Exact optimum for single-antenna links.

    With transfer = A + sum_n B_n Theta_n, every term is rotated onto the
    phase of A, which attains |A| + sum_n |B_n|. When A vanishes the common
    phase is free; the member of that family with the smallest reactance
    norm is returned.

    Returns:
        Optimal phases in [0, 2*pi), or None for MIMO links.
    """
    if not problem.is_siso:
        return None
    A, B = problem.affine
    a = complex(A[0, 0])
    b = B[:, 0, 0]
    arg_b = np.angle(b)
    if abs(a) > TIE_TOLERANCE * max(float(np.sum(np.abs(b))), np.finfo(float).tiny):
        return np.asarray(wrap_phase(np.angle(a) - arg_b))

    psi = 2.0 * np.pi * np.arange(_FAMILY_SAMPLES) / _FAMILY_SAMPLES
    family = np.asarray(wrap_phase(psi[:, np.newaxis] - arg_b[np.newaxis, :]))
    phase_problem = problem.with_model(problem.model, domain="phase")
    chosen, _ = _pick(phase_problem, family, np.zeros(len(family)))
    return chosen


def local_search(
    problem: OptimizationProblem,
    starts: int = DEFAULT_STARTS,
    seed: int = 0,
    *,
    initial: Optional[Sequence[Sequence[float]]] = None,
    xatol: float = 1e-9,
    fatol: float = 1e-13,
    maxiter: Optional[int] = None,
) -> OptimizationReport:
    """
    Multi-start Nelder-Mead maximization.

    Starts are the caller's ``initial`` points, the co-phased solution for
    SISO links, and ``starts`` random points drawn from a Philox stream
    keyed by ``seed``.

    Raises:
        OptimizationError: If the objective becomes non-finite.
    """
    if starts < 1:
        raise OptimizationError(f"at least one start is required, got {starts}")
    if seed < 0:
        raise RisNetError(f"seed must be non-negative, got {seed}")
    n = problem.n_variables
    gen = np.random.Generator(np.random.Philox(key=seed))
    x0s: List[np.ndarray] = [np.asarray(p, dtype=float) for p in (initial or [])]
    cophased = cophase_solution(problem)
    if cophased is not None:
        x0s.append(problem.phases_to_variables(cophased))
    for phi in gen.uniform(0.0, 2.0 * np.pi, size=(starts, n)):
        x0s.append(problem.phases_to_variables(phi))

    bounds = None
    if problem.domain == "reactance":
        bounds = [(-problem.reactance_bound, problem.reactance_bound)] * n

    def objective(v: np.ndarray) -> float:
        g = problem.gain(v)
        if not np.isfinite(g):
            raise OptimizationError(f"objective is {g} at {v.tolist()}", variables=v.copy())
        return -g

    points, gains = [], []
    iterations = 0
    for x0 in x0s:
        if bounds is not None:
            x0 = np.clip(x0, -problem.reactance_bound, problem.reactance_bound)
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options=dict(xatol=xatol, fatol=fatol, maxiter=maxiter or 400 * n, adaptive=n > 2),
        )
        iterations += int(res.nit)
        x = np.asarray(res.x, dtype=float)
        g = -float(res.fun)
        # the end point joins the pool only if it beats its start
        g0 = float(problem.gain(x0))
        points.append(x0)
        gains.append(g0)
        if g > g0 + TIE_TOLERANCE * abs(g0):
            points.append(x)
            gains.append(g)
        logger.debug("start %s -> gain %.15g after %d iterations", np.round(x0, 4).tolist(), g, res.nit)

    point, gain = _pick(problem, np.array(points), np.array(gains))
    if problem.domain == "phase":
        point = np.asarray(wrap_phase(point))
    return OptimizationReport(
        best_variables=point,
        best_reactances=problem.reactances(point),
        best_gain=gain,
        iterations=iterations,
        model=problem.model,
        domain=problem.domain,
        seed=seed,
    )


def cross_apply(
    problem: OptimizationProblem,
    phase_reference: float = 0.0,
    *,
    starts: int = DEFAULT_STARTS,
    seed: int = 0,
) -> OptimizationReport:
    """
    Evaluate the physical model at the conventional-model optimum.

    The conventional optimum is only defined up to a common phase; element
    1's phase is pinned to ``phase_reference`` before the physical gain is
    computed. ``source_gain`` holds the conventional gain.
    """
    conventional = problem.with_model("conventional", domain="phase")
    phases = cophase_solution(conventional)
    iterations = 0
    if phases is None:
        report = local_search(conventional, starts=starts, seed=seed)
        phases, iterations = report.best_variables, report.iterations
    source_gain = conventional.gain(phases)
    phases = np.asarray(wrap_phase(phases + (phase_reference - phases[0])))

    physical = problem.with_model("physical", domain="phase")
    gain = physical.gain(phases)
    term = RisTermination.from_phases(phases, problem.cfg.R)
    x = reactances_with_surrogate(term) / problem.cfg.R
    return OptimizationReport(
        best_variables=phases,
        best_reactances=x,
        best_gain=gain,
        iterations=iterations,
        model="physical",
        domain="phase",
        seed=seed,
        source_gain=source_gain,
    )


@dataclass(frozen=True)
class BaselineEstimate:
    """Monte-Carlo mean of the linear power gain under random phases."""

    mean: float
    std_error: float
    trials: int
    seed: int
    model: str

    @property
    def half_width(self) -> float:
        """Half-width of the 95 % normal confidence interval."""
        return CONFIDENCE_Z * self.std_error

    @property
    def mean_db(self) -> float:
        return to_db(self.mean)


def random_phase_baseline(
    problem: OptimizationProblem,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    *,
    chunk: int = 1 << 16,
) -> BaselineEstimate:
    """
    Average gain over i.i.d. uniform reflection phases.

    Phases map to Theta = exp(j phi), which equals the reactance X =
    R cot(phi / 2) of the physical model. Chunk ``i`` draws from the Philox
    substream ``Philox(key=seed).jumped(i + 1)``, so for a fixed ``chunk`` the result does
    not depend on evaluation order.
    """
    if trials < 1:
        raise RisNetError(f"trials must be at least 1, got {trials}")
    if seed < 0:
        raise RisNetError(f"seed must be non-negative, got {seed}")
    n = problem.n_variables
    count, mean, m2 = 0, 0.0, 0.0
    for i, start in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - start)
        gen = np.random.Generator(np.random.Philox(key=seed).jumped(i + 1))
        phi = gen.uniform(0.0, 2.0 * np.pi, size=(size, n))
        gains = problem.gain_from_thetas(np.exp(1j * phi))
        c_mean = float(gains.mean())
        c_m2 = float(np.sum((gains - c_mean) ** 2))
        # pairwise merge of running moments
        total = count + size
        delta = c_mean - mean
        mean += delta * size / total
        m2 += c_m2 + delta * delta * count * size / total
        count = total
    variance = m2 / (count - 1) if count > 1 else 0.0
    return BaselineEstimate(
        mean=mean,
        std_error=math.sqrt(variance / count),
        trials=count,
        seed=seed,
        model=problem.model,
    )
