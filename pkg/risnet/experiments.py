"""
Experiment runners behind the command-line front end.

Each runner takes an :class:`ExperimentSpec` and returns typed rows;
:func:`render_rows` turns rows into CSV or an aligned text table. The
runners raise :class:`~risnet.errors.CrossCheckError` when an internal
consistency check fails.
"""
import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .channel import (
    EXCESS_HOPS,
    LinkConfig,
    LinkGeometry,
    build_unilateral_multiport,
    single_element_scenario,
    two_element_scenario,
)
from .errors import CrossCheckError, RisNetError, StructureError
from .formats import read_block_file, read_scenario, render_block_file
from .multiport import DEFAULT_RESISTANCE, MultiportImpedance, s_to_z, z_to_s
from .optimizer import (
    DEFAULT_STARTS,
    DEFAULT_TRIALS,
    GridSpec,
    OptimizationProblem,
    cross_apply,
    grid_oracle,
    local_search,
    random_phase_baseline,
)
from .ris import (
    MODELS,
    OPEN_CIRCUIT_SURROGATE,
    RisTermination,
    blockwise_z_to_s,
    check_unilateral_impedance,
    conventional_z_to_s,
    normalize_transfer,
    scattering_dependency_residual,
    transfer_conventional,
    transfer_impedance,
    transfer_scattering,
    transfer_theta_form,
    verify_model_equivalence,
)
from .utils import format_number, relative_error, to_db

logger = logging.getLogger(__name__)

COMMANDS = ("table1", "table2", "sweep", "convert", "eval")
FORMATS = ("csv", "pretty")
DEFAULT_SWEEP_STEPS = 201
TABLE1_X = (-math.inf, -1.0, 0.0, 1.0, math.inf)
TABLE2_SPACINGS = (0.0, 0.25, 0.5, 0.75, 1.0)
ORACLE_GAP_LIMIT = 1e-6
CONVERSION_TOLERANCE = 1e-10

TABLE1_COLUMNS = ("x", "phase_deg", "magnitude", "gain_db", "limit", "surrogate_magnitude")
TABLE2_COLUMNS = ("d_over_lambda", "x1", "x2", "gain", "gain_db", "oracle_gain", "oracle_gap")
SWEEP_COLUMNS = (
    "d_over_lambda",
    "gain_physical_opt_db",
    "gain_conventional_opt_db",
    "gain_cross_applied_db",
    "gain_random_physical_db",
    "gain_random_conventional_db",
)
EVAL_COLUMNS = ("model", "k", "m", "real", "imag", "magnitude", "gain_db")


@dataclass(frozen=True)
class ExperimentSpec:
    """
    Parameters of one experiment run.

    Distances ``d_rs`` / ``d_dr`` and the spacing range are in
    wavelengths. ``x_values`` are normalized reactances X / R.
    """

    command: str
    d_rs: float = 100.0
    d_dr: float = 1000.0
    spacing_min: float = 0.0
    spacing_max: float = 1.0
    steps: int = DEFAULT_SWEEP_STEPS
    model: str = "physical"
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    starts: int = DEFAULT_STARTS
    resistance: float = DEFAULT_RESISTANCE
    wavelength: float = 1.0
    output: Optional[str] = None
    fmt: str = "csv"
    x_values: Tuple[float, ...] = ()
    scenario: Optional[str] = None
    input: Optional[str] = None
    workers: int = 1
    excess_hop: str = "dr"
    grid_step: float = 0.01

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise RisNetError(f"unknown command {self.command!r}, expected one of {COMMANDS}")
        if self.fmt not in FORMATS:
            raise RisNetError(f"unknown output format {self.fmt!r}, expected one of {FORMATS}")
        if self.model not in MODELS:
            raise RisNetError(f"unknown model {self.model!r}, expected one of {MODELS}")
        if self.excess_hop not in EXCESS_HOPS:
            raise RisNetError(f"excess hop must be one of {EXCESS_HOPS}, got {self.excess_hop!r}")
        if self.command == "sweep" and self.steps < 2:
            raise RisNetError(f"a sweep needs at least 2 steps, got {self.steps}")
        if not 0.0 <= self.spacing_min <= self.spacing_max:
            raise RisNetError(
                f"spacing range must satisfy 0 <= min <= max, got [{self.spacing_min}, {self.spacing_max}]"
            )
        if self.spacing_max > 1.0:
            logger.info("spacing range extends beyond one wavelength (max %.3g)", self.spacing_max)
        if self.trials < 1 or self.starts < 1 or self.workers < 1:
            raise RisNetError("trials, starts and workers must all be at least 1")
        if self.seed < 0:
            raise RisNetError(f"seed must be non-negative, got {self.seed}")
        if self.command == "convert" and not self.input:
            raise RisNetError("convert needs an input block file")
        object.__setattr__(self, "x_values", tuple(float(x) for x in self.x_values))

    def single_element(self) -> Tuple[LinkConfig, LinkGeometry]:
        return single_element_scenario(self.d_rs, self.d_dr, self.resistance, self.wavelength)

    def two_element(self, spacing: float) -> Tuple[LinkConfig, LinkGeometry]:
        return two_element_scenario(
            spacing, self.d_rs, self.d_dr, self.resistance, self.wavelength, self.excess_hop
        )


@dataclass(frozen=True)
class Table1Row:
    """Single-element transfer at one normalized reactance."""

    x: float
    phase_deg: float
    magnitude: float
    gain_db: float
    limit: bool
    surrogate_magnitude: float

    def record(self) -> tuple:
        return (self.x, self.phase_deg, self.magnitude, self.gain_db, int(self.limit), self.surrogate_magnitude)


@dataclass(frozen=True)
class Table2Row:
    spacing: float
    x1: float
    x2: float
    gain: float
    oracle_gain: float
    oracle_gap: float

    @property
    def gain_db(self) -> float:
        return to_db(self.gain)

    def record(self) -> tuple:
        return (self.spacing, self.x1, self.x2, self.gain, self.gain_db, self.oracle_gain, self.oracle_gap)


@dataclass(frozen=True)
class SweepRow:
    """Linear gains of the five spacing-sweep curves at one spacing."""

    spacing: float
    physical_opt: float
    conventional_opt: float
    cross_applied: float
    random_physical: float
    random_physical_se: float
    random_conventional: float
    random_conventional_se: float

    def record(self) -> tuple:
        return (
            self.spacing,
            to_db(self.physical_opt),
            to_db(self.conventional_opt),
            to_db(self.cross_applied),
            to_db(self.random_physical),
            to_db(self.random_conventional),
        )


@dataclass(frozen=True)
class EvalRow:
    model: str
    k: int
    m: int
    value: complex

    def record(self) -> tuple:
        return (self.model, self.k, self.m, self.value.real, self.value.imag, abs(self.value), to_db(abs(self.value) ** 2))


@dataclass(frozen=True)
class EvalResult:
    rows: List[EvalRow]
    deviation: float
    conventional_deviation: float


@dataclass(frozen=True)
class ConvertResult:
    source: object
    converted: object
    R: float
    residual: Optional[float] = None
    blockwise_deviation: Optional[float] = None
    notes: List[str] = field(default_factory=list)


def _single_element_value(cfg, geom, model: str, term: RisTermination) -> complex:
    Z = build_unilateral_multiport(cfg, geom)
    if model == "physical":
        result = transfer_impedance(Z, term)
    else:
        result = transfer_conventional(conventional_z_to_s(Z), term)
    return complex(normalize_transfer(result, cfg, geom).normalized[0, 0])


def run_table1(spec: ExperimentSpec) -> List[Table1Row]:
    """
    Normalized single-element transfer for x in {-inf, -1, 0, 1, inf} and
    any extra ``spec.x_values``.

    Infinite reactances are limit rows: the physical model reports the
    exact limit (magnitude 0, -inf dB), and ``surrogate_magnitude`` holds
    the value at X = +-1e9 R.
    """
    cfg, geom = spec.single_element()
    Z = build_unilateral_multiport(cfg, geom)
    rows = []
    for x in TABLE1_X + spec.x_values:
        if math.isinf(x):
            surrogate = RisTermination.from_reactances(math.copysign(OPEN_CIRCUIT_SURROGATE, x) * cfg.R, cfg.R)
            surrogate_value = _single_element_value(cfg, geom, spec.model, surrogate)
            if spec.model == "physical":
                rows.append(Table1Row(x, math.copysign(90.0, -x), 0.0, -math.inf, True, abs(surrogate_value)))
            else:
                # conventional transfer is finite at Theta = 1
                value = _single_element_value(cfg, geom, spec.model, RisTermination.from_reflections([1.0], cfg.R))
                rows.append(
                    Table1Row(x, math.degrees(np.angle(value)), abs(value), to_db(abs(value) ** 2), True, abs(surrogate_value))
                )
            continue
        term = RisTermination.from_normalized_reactances([x], cfg.R)
        if spec.model == "physical":
            verify_model_equivalence(Z, term)
        value = _single_element_value(cfg, geom, spec.model, term)
        rows.append(Table1Row(x, math.degrees(np.angle(value)), abs(value), to_db(abs(value) ** 2), False, abs(value)))
    return rows


def run_table2(spec: ExperimentSpec, spacings: Sequence[float] = TABLE2_SPACINGS) -> List[Table2Row]:
    """
    Optimal reactances of the two-element link at the given spacings.

    Each row is solved by the local search and checked against the grid
    oracle over x in [-3, 3].

    Raises:
        CrossCheckError: If the two disagree by more than 1e-6 relative.
    """
    rows = []
    for spacing in spacings:
        cfg, geom = spec.two_element(spacing)
        problem = OptimizationProblem(cfg, geom, model=spec.model, domain="reactance")
        report = local_search(problem, starts=spec.starts, seed=spec.seed)
        oracle = grid_oracle(problem, GridSpec(-3.0, 3.0, spec.grid_step))
        report = report.with_oracle(oracle)
        logger.info(
            "d = %.3f lambda: gain %.12g, oracle %.12g (gap %.2e)",
            spacing, report.best_gain, oracle.best_gain, report.oracle_gap,
        )
        if report.oracle_gap > ORACLE_GAP_LIMIT:
            raise CrossCheckError(
                f"optimizer and grid oracle disagree at d = {spacing} lambda: "
                f"{report.best_gain:.12g} vs {oracle.best_gain:.12g}"
            )
        x1, x2 = (float(v) for v in report.best_reactances)
        rows.append(Table2Row(spacing, x1, x2, report.best_gain, oracle.best_gain, report.oracle_gap))
    return rows


def _sweep_row(task: Tuple[float, ExperimentSpec]) -> SweepRow:
    spacing, spec = task
    cfg, geom = spec.two_element(spacing)
    physical = OptimizationProblem(cfg, geom, model="physical", domain="phase")
    conventional = physical.with_model("conventional")

    crossed = cross_apply(physical, starts=spec.starts, seed=spec.seed)
    best = local_search(physical, starts=spec.starts, seed=spec.seed, initial=[crossed.best_variables])
    verify_model_equivalence(physical.impedance, RisTermination.from_phases(best.best_variables, cfg.R))
    conv_best = local_search(conventional, starts=spec.starts, seed=spec.seed)
    rand_phys = random_phase_baseline(physical, spec.trials, spec.seed)
    rand_conv = random_phase_baseline(conventional, spec.trials, spec.seed)
    logger.debug("sweep d = %.4f lambda done", spacing)
    return SweepRow(
        spacing=spacing,
        physical_opt=best.best_gain,
        conventional_opt=conv_best.best_gain,
        cross_applied=crossed.best_gain,
        random_physical=rand_phys.mean,
        random_physical_se=rand_phys.std_error,
        random_conventional=rand_conv.mean,
        random_conventional_se=rand_conv.std_error,
    )


def sweep_spacings(spec: ExperimentSpec) -> np.ndarray:
    return np.linspace(spec.spacing_min, spec.spacing_max, spec.steps)


def run_sweep(spec: ExperimentSpec) -> List[SweepRow]:
    """
    Two-element gains over element spacing.

    Rows are computed serially or, with ``spec.workers > 1``, in a process
    pool; either way they come back in spacing order and are identical.
    """
    tasks = [(float(d), spec) for d in sweep_spacings(spec)]
    logger.info("sweep: %d spacings, %d trials, seed %d", len(tasks), spec.trials, spec.seed)
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(_sweep_row, tasks))
    return [_sweep_row(task) for task in tasks]


def _eval_scenario(spec: ExperimentSpec) -> Tuple[LinkConfig, LinkGeometry, int]:
    if spec.scenario:
        return read_scenario(spec.scenario)
    n = len(spec.x_values) or 1
    if n == 1:
        return (*spec.single_element(), 0)
    if n == 2:
        return (*spec.two_element(spec.spacing_min), 0)
    raise RisNetError(f"without a scenario file eval supports 1 or 2 reactances, got {n}")


def run_eval(spec: ExperimentSpec) -> EvalResult:
    """
    Evaluate every model variant for the reactances ``spec.x_values``.

    Raises:
        CrossCheckError: If the impedance, scattering and Theta-form
            results disagree beyond the equivalence tolerance.
    """
    cfg, geom, reference = _eval_scenario(spec)
    x = spec.x_values or (0.0,) * cfg.N
    if len(x) != cfg.N:
        raise RisNetError(f"scenario has N = {cfg.N} RIS elements, got {len(x)} reactances")
    if not all(math.isfinite(v) for v in x):
        raise RisNetError("eval needs finite reactances")
    Z = build_unilateral_multiport(cfg, geom)
    term = RisTermination.from_normalized_reactances(x, cfg.R)
    S = blockwise_z_to_s(Z)
    deviation = verify_model_equivalence(Z, term)

    results = [
        transfer_impedance(Z, term),
        transfer_scattering(S, term),
        transfer_theta_form(Z, term),
        transfer_conventional(conventional_z_to_s(Z), term, zero_direct=geom.blocked_direct),
    ]
    rows = []
    for result in results:
        normalized = normalize_transfer(result, cfg, geom, reference).normalized
        for (k, m), value in np.ndenumerate(normalized):
            rows.append(EvalRow(result.model.value, k + 1, m + 1, complex(value)))
    conventional_deviation = relative_error(results[-1].matrix, results[0].matrix)
    return EvalResult(rows, deviation, conventional_deviation)


def run_convert(spec: ExperimentSpec) -> ConvertResult:
    """
    Convert a Z block file to S or an S block file to Z.

    When the Z-side direct block is zero the S_DS dependency residual
    ||S_DS + S_DR S_RS|| / ||S_DR S_RS|| is reported. For a unilateral Z
    input the general LU conversion is also checked against the
    blockwise closed form.
    """
    source, R = read_block_file(spec.input)
    notes = []
    if isinstance(source, MultiportImpedance):
        converted = z_to_s(source, R)
        Z, S = source, converted
    else:
        converted = s_to_z(source, R)
        Z, S = converted, source

    residual = None
    scale = max(float(np.abs(Z.matrix).max()), np.finfo(float).tiny)
    if Z.N and float(np.abs(Z.z_ds).max(initial=0.0)) <= 1e-12 * scale:
        residual = scattering_dependency_residual(S)
        notes.append(f"direct block is zero: ||S_DS + S_DR S_RS|| / ||S_DR S_RS|| = {residual:.3e}")

    blockwise_deviation = None
    if isinstance(source, MultiportImpedance):
        try:
            check_unilateral_impedance(source)
        except StructureError as exc:
            notes.append(f"not unilateral, blockwise check skipped ({exc})")
        else:
            blockwise_deviation = relative_error(converted.matrix, blockwise_z_to_s(source).matrix)
            notes.append(f"blockwise closed form agrees to {blockwise_deviation:.3e}")
            if blockwise_deviation > CONVERSION_TOLERANCE:
                raise CrossCheckError(
                    f"LU and blockwise Z->S conversions differ by {blockwise_deviation:.3e}"
                )
    return ConvertResult(source, converted, R, residual, blockwise_deviation, notes)


def _cell(value, fmt: str) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, int, np.integer)):
        return str(int(value))
    if fmt == "csv":
        return format_number(value)
    value = float(value)
    if math.isinf(value) or math.isnan(value):
        return format_number(value)
    return f"{value:.6f}"


def render_rows(columns: Sequence[str], rows: Sequence, fmt: str = "csv") -> str:
    """
    Render rows (objects with ``record()``) as CSV or an aligned table.

    CSV numbers use 17 significant digits; infinities are the tokens
    ``inf`` and ``-inf``.
    """
    records = [[_cell(v, fmt) for v in row.record()] for row in rows]
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(records)
        return buffer.getvalue()
    widths = [max([len(c)] + [len(r[i]) for r in records]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in records)
    return "\n".join(lines) + "\n"


def render_convert(result: ConvertResult) -> str:
    """Converted block file with the report appended as comment lines."""
    text = render_block_file(result.converted, result.R)
    return text + "".join(f"# {note}\n" for note in result.notes)


def write_output(text: str, output: Optional[str]) -> None:
    """Write ``text`` to ``output`` or, when it is None, to stdout."""
    if output is None:
        print(text, end="")
        return
    Path(output).write_text(text, encoding="utf-8")
    logger.info("wrote %s", output)
