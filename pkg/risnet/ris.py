"""RIS termination algebra and end-to-end transfer matrices.

Covers the reactance <-> reflection-coefficient mapping of the lossless
RIS loads, the blockwise Z -> S conversion of the unilateral multiport,
and the transfer matrices of the physically consistent model (impedance,
scattering and Theta-parameterized forms) next to the conventional model
that drops the cascade term from S_DS.
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .channel import LinkConfig, LinkGeometry, hop_impedances
from .errors import (
    CrossCheckError,
    NormalizationError,
    OpenCircuitError,
    StructureError,
    TerminationError,
)
from .multiport import DEFAULT_RESISTANCE, MultiportImpedance, MultiportScattering
from .utils import relative_error, to_db, wrap_phase

logger = logging.getLogger(__name__)

OPEN_CIRCUIT_SURROGATE = 1e9
UNIT_MODULUS_TOLERANCE = 1e-12
EQUIVALENCE_TOLERANCE = 1e-10
STRUCTURE_TOLERANCE = 1e-12

TERMINATION_KINDS = ("reactance", "reflection", "phase")
MODELS = ("physical", "conventional")


class ModelTag(str, Enum):
    PHYSICAL_Z = "physical-Z"
    PHYSICAL_S = "physical-S"
    PHYSICAL_BLOCKED = "physical-blocked"
    CONVENTIONAL = "conventional"
    THETA_FORM = "theta-form"


@dataclass(frozen=True, eq=False)
class RisTermination:
    """
    Diagonal lossless loads of the N RIS elements.

    ``kind`` selects how ``values`` is read: reactances X in ohms,
    unit-modulus reflection coefficients Theta, or reflection phases in
    radians. ``R`` is the reference resistance of the mapping
    Theta = (jX - R) / (jX + R).
    """

    kind: str
    values: np.ndarray
    R: float = DEFAULT_RESISTANCE

    def __post_init__(self):
        if self.kind not in TERMINATION_KINDS:
            raise TerminationError(f"unknown termination kind {self.kind!r}")
        if not self.R > 0:
            raise TerminationError(f"reference resistance must be positive, got {self.R}")
        raw = np.atleast_1d(np.asarray(self.values))
        if raw.ndim != 1:
            raise TerminationError("termination values must be a 1-D sequence")

        if self.kind == "reflection":
            values = raw.astype(complex)
            if not np.all(np.isfinite(values)):
                raise TerminationError("reflection coefficients must be finite")
            deviation = np.abs(np.abs(values) - 1.0)
            if np.any(deviation > UNIT_MODULUS_TOLERANCE):
                worst = int(np.argmax(deviation))
                raise TerminationError(
                    f"reflection coefficient {values[worst]} at element {worst} is not unit-modulus "
                    "(lossless terminations only)"
                )
        else:
            if np.iscomplexobj(raw) and np.any(np.imag(raw) != 0):
                raise TerminationError(
                    f"{self.kind} values must be real; complex loads are not lossless reactances"
                )
            values = np.real(raw).astype(float)
            if not np.all(np.isfinite(values)):
                raise TerminationError(f"{self.kind} values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "R", float(self.R))

    @classmethod
    def from_reactances(cls, X, R: float = DEFAULT_RESISTANCE) -> "RisTermination":
        """Loads Z_N = diag(jX) with X in ohms."""
        return cls("reactance", X, R)

    @classmethod
    def from_normalized_reactances(cls, x, R: float = DEFAULT_RESISTANCE) -> "RisTermination":
        """Loads given as x = X / R."""
        return cls("reactance", np.asarray(x, dtype=float) * R, R)

    @classmethod
    def from_reflections(cls, theta, R: float = DEFAULT_RESISTANCE) -> "RisTermination":
        return cls("reflection", theta, R)

    @classmethod
    def from_phases(cls, phi, R: float = DEFAULT_RESISTANCE) -> "RisTermination":
        return cls("phase", phi, R)

    @property
    def N(self) -> int:
        return int(self.values.size)

    @property
    def theta(self) -> np.ndarray:
        """Diagonal of the reflection matrix Theta."""
        if self.kind == "reflection":
            return self.values
        if self.kind == "phase":
            return np.exp(1j * self.values)
        jx = 1j * self.values
        theta = (jx - self.R) / (jx + self.R)
        return theta / np.abs(theta)

    @property
    def phases(self) -> np.ndarray:
        """Reflection phases wrapped to [0, 2*pi)."""
        if self.kind == "phase":
            return np.asarray(wrap_phase(self.values))
        return np.asarray(wrap_phase(np.angle(self.theta)))

    @property
    def reactances(self) -> np.ndarray:
        """Reactances X in ohms; raises OpenCircuitError where Theta = 1."""
        if self.kind == "reactance":
            return self.values
        return zn_from_theta(self).values

    @property
    def normalized_reactances(self) -> np.ndarray:
        return self.reactances / self.R

    @property
    def impedance(self) -> np.ndarray:
        """Load matrix Z_N = diag(jX)."""
        return np.diag(1j * self.reactances)


def theta_from_zn(term: RisTermination) -> RisTermination:
    """
    Map reactive loads to reflection coefficients.

    Theta_n = (jX_n - R) / (jX_n + R), unit modulus by construction.
    """
    return RisTermination.from_reflections(term.theta, term.R)


def zn_from_theta(term: RisTermination) -> RisTermination:
    """
    Map reflection coefficients back to reactances.

    X_n = R * cot(phi_n / 2) with phi_n = arg Theta_n.

    Raises:
        OpenCircuitError: Where Theta_n = 1 (infinite reactance).
    """
    if term.kind == "reactance":
        return term
    phi = np.angle(term.theta)
    open_idx = np.flatnonzero(phi == 0.0)
    if open_idx.size:
        raise OpenCircuitError(
            f"reflection coefficient 1 (open circuit) at elements {open_idx.tolist()} has no finite reactance",
            indices=open_idx.tolist(),
        )
    half = phi / 2.0
    X = term.R * np.cos(half) / np.sin(half)
    return RisTermination.from_reactances(X, term.R)


def reactances_with_surrogate(term: RisTermination, surrogate: float = OPEN_CIRCUIT_SURROGATE) -> np.ndarray:
    """
    Reactances with open circuits replaced by a large finite value.

    Elements with Theta_n = 1 get X_n = surrogate * R. The transfer
    contribution of such an element is off by O(1/surrogate).
    """
    if term.kind == "reactance":
        return term.values
    phi = np.angle(term.theta)
    open_mask = phi == 0.0
    if np.any(open_mask):
        logger.warning(
            "open-circuit termination at elements %s replaced by X = %.3g * R",
            np.flatnonzero(open_mask).tolist(), surrogate,
        )
    half = np.where(open_mask, np.pi / 2.0, phi / 2.0)
    X = term.R * np.cos(half) / np.sin(half)
    return np.where(open_mask, surrogate * term.R, X)


def port_resistance(Z: MultiportImpedance) -> float:
    """Common port resistance read from the matched diagonal blocks."""
    return float(np.real(Z.matrix[0, 0]))


def check_unilateral_impedance(Z: MultiportImpedance) -> float:
    """
    Verify the unilateral structure: diagonal blocks I*R, feedback blocks zero.

    Returns:
        The port resistance R.

    Raises:
        StructureError: If the structure does not hold.
    """
    if not isinstance(Z, MultiportImpedance):
        raise StructureError("expected a MultiportImpedance")
    if not Z.upper_blocks_zero():
        raise StructureError("impedance matrix is not unilateral: feedback blocks are non-zero")
    R = port_resistance(Z)
    if R <= 0:
        raise StructureError(f"diagonal blocks must carry a positive port resistance, got {R}")
    for label, size in zip(("S", "R", "D"), Z.sizes):
        diag = Z.block(label, label)
        if np.linalg.norm(diag - R * np.eye(size)) > STRUCTURE_TOLERANCE * R * max(size, 1):
            raise StructureError(f"block ({label}, {label}) is not I*R; ports must be matched and uncoupled")
    return R


def check_unilateral_scattering(S: MultiportScattering) -> None:
    """Verify that only the S_RS, S_DS and S_DR blocks are non-zero."""
    if not isinstance(S, MultiportScattering):
        raise StructureError("expected a MultiportScattering")
    for row, col in (("S", "S"), ("R", "R"), ("D", "D"), ("S", "R"), ("S", "D"), ("R", "D")):
        block = S.block(row, col)
        if block.size and np.max(np.abs(block)) > STRUCTURE_TOLERANCE:
            raise StructureError(f"scattering block ({row}, {col}) must be zero for the unilateral model")


def blockwise_z_to_s(Z: MultiportImpedance) -> MultiportScattering:
    """
    Closed-form Z -> S conversion for the unilateral multiport.

    S_RS = Z_RS / 2R, S_DR = Z_DR / 2R and
    S_DS = (Z_DS - Z_DR Z_RS / 2R) / 2R; all other blocks are zero.
    """
    R = check_unilateral_impedance(Z)
    s_rs = Z.z_rs / (2.0 * R)
    s_dr = Z.z_dr / (2.0 * R)
    s_ds = (Z.z_ds - Z.z_dr @ Z.z_rs / (2.0 * R)) / (2.0 * R)
    return MultiportScattering.from_blocks(
        {("R", "S"): s_rs, ("D", "R"): s_dr, ("D", "S"): s_ds}, Z.sizes
    )


def conventional_z_to_s(Z: MultiportImpedance) -> MultiportScattering:
    """
    S matrix under the conventional mapping S_DS = Z_DS / 2R.

    This drops the RIS cascade term from the direct block; with a blocked
    direct link it yields S_DS = 0.
    """
    R = check_unilateral_impedance(Z)
    return MultiportScattering.from_blocks(
        {
            ("R", "S"): Z.z_rs / (2.0 * R),
            ("D", "R"): Z.z_dr / (2.0 * R),
            ("D", "S"): Z.z_ds / (2.0 * R),
        },
        Z.sizes,
    )


def scattering_dependency_residual(S: MultiportScattering) -> float:
    """||S_DS + S_DR S_RS||_F / ||S_DR S_RS||_F, zero when the direct link is blocked."""
    cascade = S.s_dr @ S.s_rs
    return relative_error(S.s_ds, -cascade)


@dataclass(frozen=True, eq=False)
class TransferResult:
    """
    End-to-end voltage transfer v_L = matrix @ v_G (K x M).

    ``normalized`` is filled in by :func:`normalize_transfer`.
    """

    matrix: np.ndarray
    model: ModelTag
    normalized: Optional[np.ndarray] = None

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex, ndmin=2)
        if not np.all(np.isfinite(mat)):
            raise CrossCheckError(f"{self.model.value} transfer matrix is not finite")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        if self.normalized is not None:
            norm = np.array(self.normalized, dtype=complex, ndmin=2)
            norm.flags.writeable = False
            object.__setattr__(self, "normalized", norm)

    def _require_normalized(self) -> np.ndarray:
        if self.normalized is None:
            raise NormalizationError("transfer result has not been normalized")
        return self.normalized

    @property
    def power_gain(self) -> np.ndarray:
        """Per-entry |normalized|^2."""
        return np.abs(self._require_normalized()) ** 2

    @property
    def power_gain_db(self) -> np.ndarray:
        return to_db(self.power_gain)

    @property
    def total_power_gain(self) -> float:
        """Squared Frobenius norm of the normalized matrix."""
        return float(np.sum(self.power_gain))

    @property
    def absolute_power_gain(self) -> np.ndarray:
        """Per-entry |matrix|^2, path loss included."""
        return np.abs(self.matrix) ** 2

    @property
    def absolute_power_gain_db(self) -> np.ndarray:
        return to_db(self.absolute_power_gain)


def _matching_resistance(Z: MultiportImpedance, term: RisTermination) -> float:
    R = check_unilateral_impedance(Z)
    if term.N != Z.N:
        raise TerminationError(f"termination has {term.N} elements, multiport has N = {Z.N}")
    if abs(term.R - R) > 1e-12 * R:
        raise TerminationError(f"termination reference {term.R} ohm differs from port resistance {R} ohm")
    return R


def transfer_impedance(
    Z: MultiportImpedance,
    term: RisTermination,
    surrogate: float = OPEN_CIRCUIT_SURROGATE,
) -> TransferResult:
    """
    Transfer matrix from impedance parameters.

    D = (Z_DS - Z_DR (Z_N + I R)^-1 Z_RS) / 4R. Open-circuit reflection
    coefficients are mapped to the large-X surrogate.
    """
    R = _matching_resistance(Z, term)
    X = reactances_with_surrogate(term, surrogate)
    # Z_N + I R is diagonal
    weighted = Z.z_dr / (R + 1j * X)[np.newaxis, :]
    D = (Z.z_ds - weighted @ Z.z_rs) / (4.0 * R)
    tag = ModelTag.PHYSICAL_BLOCKED if not np.any(Z.z_ds) else ModelTag.PHYSICAL_Z
    return TransferResult(D, tag)


def transfer_scattering(S: MultiportScattering, term: RisTermination) -> TransferResult:
    """Transfer matrix from scattering parameters: H = (S_DS + S_DR Theta S_RS) / 2."""
    check_unilateral_scattering(S)
    if term.N != S.N:
        raise TerminationError(f"termination has {term.N} elements, multiport has N = {S.N}")
    theta = term.theta
    H = (S.s_ds + (S.s_dr * theta[np.newaxis, :]) @ S.s_rs) / 2.0
    return TransferResult(H, ModelTag.PHYSICAL_S)


def transfer_conventional(
    S: MultiportScattering,
    term: RisTermination,
    zero_direct: bool = True,
) -> TransferResult:
    """
    Transfer matrix of the conventional model.

    With ``zero_direct`` the direct block is assumed to vanish and
    H = S_DR Theta S_RS / 2; otherwise the given S_DS is kept.
    """
    check_unilateral_scattering(S)
    if term.N != S.N:
        raise TerminationError(f"termination has {term.N} elements, multiport has N = {S.N}")
    theta = term.theta
    H = (S.s_dr * theta[np.newaxis, :]) @ S.s_rs / 2.0
    if not zero_direct:
        H = H + S.s_ds / 2.0
    return TransferResult(H, ModelTag.CONVENTIONAL)


def transfer_theta_form(Z: MultiportImpedance, term: RisTermination) -> TransferResult:
    """
    Impedance-domain transfer parameterized by Theta.

    D = (Z_DS - Z_DR Z_RS / 2R + Z_DR Theta Z_RS / 2R) / 4R. Valid for
    every unit-modulus Theta, including open circuits.
    """
    R = _matching_resistance(Z, term)
    theta = term.theta
    cascade = Z.z_dr @ Z.z_rs
    steered = (Z.z_dr * theta[np.newaxis, :]) @ Z.z_rs
    D = (Z.z_ds - cascade / (2.0 * R) + steered / (2.0 * R)) / (4.0 * R)
    return TransferResult(D, ModelTag.THETA_FORM)


def theta_affine_form(
    Z: MultiportImpedance,
    model: str = "physical",
    scale: complex = 1.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split the transfer matrix into an offset and per-element terms.

    transfer(Theta) = A + sum_n B[n] * Theta_n with A of shape (K, M)
    and B of shape (N, K, M). For the physical model A holds the direct
    link minus the RIS cascade; for the conventional model A is the
    direct link alone under S_DS = Z_DS / 2R.

    Args:
        Z: Unilateral multiport impedance.
        model: ``"physical"`` or ``"conventional"``.
        scale: Complex factor applied to both parts (e.g. path-loss normalization).
    """
    if model not in MODELS:
        raise StructureError(f"unknown model {model!r}, expected one of {MODELS}")
    R = check_unilateral_impedance(Z)
    B = np.einsum("kn,nm->nkm", Z.z_dr, Z.z_rs) / (8.0 * R * R)
    if model == "physical":
        A = (Z.z_ds - Z.z_dr @ Z.z_rs / (2.0 * R)) / (4.0 * R)
    else:
        A = Z.z_ds / (4.0 * R)
    return scale * A, scale * B


def evaluate_affine(A: np.ndarray, B: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Evaluate ``A + sum_n B[n] * thetas[..., n]`` for a batch of Theta vectors."""
    thetas = np.asarray(thetas, dtype=complex)
    return A + np.einsum("...n,nkm->...km", thetas, B)


def normalization_constant(z_dr_ref: complex, z_rs_ref: complex, R: float) -> complex:
    """
    Factor c = -4R^2 / (z_DR,ref z_RS,ref) that removes path loss and
    propagation phase of the reference element.
    """
    product = complex(z_dr_ref) * complex(z_rs_ref)
    if product == 0 or not np.isfinite(product):
        raise NormalizationError("reference hop impedances must be finite and non-zero")
    return -4.0 * R * R / product


def reference_constant(cfg: LinkConfig, geom: LinkGeometry, reference: int = 0) -> complex:
    """Normalization constant for RIS element ``reference`` (0-based) of a scenario."""
    if not 0 <= reference < cfg.N:
        raise NormalizationError(f"reference element {reference} outside 0..{cfg.N - 1}")
    z_rs, z_dr, _ = hop_impedances(cfg, geom)
    return normalization_constant(z_dr[0, reference], z_rs[reference, 0], cfg.R)


def normalize_transfer(
    result: TransferResult,
    cfg: LinkConfig,
    geom: LinkGeometry,
    reference: int = 0,
) -> TransferResult:
    """
    Remove the path loss of the reference element from a transfer result.

    The reference hops are from the first Tx antenna to RIS element
    ``reference`` and from there to the first Rx antenna.
    """
    c = reference_constant(cfg, geom, reference)
    return replace(result, normalized=c * result.matrix)


def verify_model_equivalence(
    Z: MultiportImpedance,
    term: RisTermination,
    tolerance: float = EQUIVALENCE_TOLERANCE,
) -> float:
    """
    Cross-check impedance, scattering and Theta-form transfer matrices.

    Returns:
        The largest pairwise relative deviation.

    Raises:
        CrossCheckError: If the deviation exceeds ``tolerance``.
    """
    D = transfer_impedance(Z, term).matrix
    H = transfer_scattering(blockwise_z_to_s(Z), term).matrix
    T = transfer_theta_form(Z, term).matrix
    deviation = max(relative_error(H, D), relative_error(T, D), relative_error(T, H))
    logger.debug("model equivalence deviation %.3e", deviation)
    if deviation > tolerance:
        raise CrossCheckError(
            f"impedance/scattering/theta-form transfer matrices differ by {deviation:.3e} (> {tolerance:.1e})"
        )
    return deviation
