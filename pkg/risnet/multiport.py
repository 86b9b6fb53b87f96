"""Block-partitioned multiport matrices and exact Z <-> S conversion.

A three-port-group network (transmitter S, RIS R, receiver D) is stored
as one dense complex matrix together with its partition sizes (M, N, K).
Block accessors are read-only views into that storage. Conversions use a
pivoted LU factorization and report ill-conditioning through the module
logger.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import ConversionSingularityError, RisNetError, StructureError

logger = logging.getLogger(__name__)

DEFAULT_RESISTANCE = 50.0
CONDITION_LIMIT = 1e12

BLOCK_LABELS = ("S", "R", "D")

Sizes = Tuple[int, int, int]


def _frozen_complex(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.flags.writeable = False
    return arr


def _check_resistance(R: float) -> float:
    R = float(R)
    if not np.isfinite(R) or R <= 0.0:
        raise RisNetError(f"port resistance must be positive and finite, got {R}")
    return R


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """Square complex matrix partitioned into S/R/D port groups."""

    matrix: np.ndarray
    sizes: Sizes

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if len(sizes) != 3 or any(s < 0 for s in sizes):
            raise StructureError(f"partition must be three non-negative sizes, got {self.sizes}")
        arr = _frozen_complex(self.matrix)
        total = sum(sizes)
        if arr.shape != (total, total):
            raise StructureError(
                f"matrix shape {arr.shape} does not match partition {sizes} (expected {total}x{total})"
            )
        if not np.all(np.isfinite(arr)):
            raise RisNetError("matrix entries must be finite")
        object.__setattr__(self, "matrix", arr)
        object.__setattr__(self, "sizes", sizes)

    @property
    def M(self) -> int:
        return self.sizes[0]

    @property
    def N(self) -> int:
        return self.sizes[1]

    @property
    def K(self) -> int:
        return self.sizes[2]

    def _range(self, label: str) -> slice:
        try:
            idx = BLOCK_LABELS.index(label)
        except ValueError:
            raise StructureError(f"unknown port group {label!r}, expected one of {BLOCK_LABELS}") from None
        start = sum(self.sizes[:idx])
        return slice(start, start + self.sizes[idx])

    def block(self, row: str, col: str) -> np.ndarray:
        """Return the (row, col) block as a read-only view, e.g. ``block('D', 'S')``."""
        return self.matrix[self._range(row), self._range(col)]

    @classmethod
    def from_blocks(cls, blocks: Mapping[Tuple[str, str], np.ndarray], sizes: Sizes):
        """
        Assemble a partitioned matrix from individual blocks.

        Args:
            blocks: Mapping ``(row, col) -> array``; missing blocks are zero.
            sizes: Partition sizes (M, N, K).

        Returns:
            A new instance of ``cls``.
        """
        sizes = tuple(int(s) for s in sizes)
        total = sum(sizes)
        full = np.zeros((total, total), dtype=complex)
        offsets = dict(zip(BLOCK_LABELS, np.cumsum((0,) + sizes[:2])))
        dims = dict(zip(BLOCK_LABELS, sizes))
        for (row, col), values in blocks.items():
            if row not in dims or col not in dims:
                raise StructureError(f"unknown block ({row}, {col})")
            arr = np.asarray(values, dtype=complex)
            if arr.shape != (dims[row], dims[col]):
                raise StructureError(
                    f"block ({row}, {col}) has shape {arr.shape}, expected {(dims[row], dims[col])}"
                )
            r0, c0 = offsets[row], offsets[col]
            full[r0:r0 + dims[row], c0:c0 + dims[col]] = arr
        return cls(full, sizes)

    def blocks(self) -> Dict[Tuple[str, str], np.ndarray]:
        """All nine blocks keyed by ``(row, col)``."""
        return {(r, c): self.block(r, c) for r in BLOCK_LABELS for c in BLOCK_LABELS}

    def is_reciprocal(self, rtol: float = 1e-12) -> bool:
        """True when the matrix equals its transpose to within ``rtol``."""
        scale = max(float(np.linalg.norm(self.matrix)), np.finfo(float).tiny)
        return float(np.linalg.norm(self.matrix - self.matrix.T)) <= rtol * scale

    def upper_blocks_zero(self) -> bool:
        """True when the feedback blocks (S,R), (S,D) and (R,D) are exactly zero."""
        return all(not np.any(self.block(r, c)) for r, c in (("S", "R"), ("S", "D"), ("R", "D")))


class MultiportImpedance(BlockMatrix):
    """Impedance matrix Z (ohms) of the Tx/RIS/Rx multiport."""

    z_s = property(lambda self: self.block("S", "S"))
    z_r = property(lambda self: self.block("R", "R"))
    z_d = property(lambda self: self.block("D", "D"))
    z_rs = property(lambda self: self.block("R", "S"))
    z_ds = property(lambda self: self.block("D", "S"))
    z_dr = property(lambda self: self.block("D", "R"))
    z_sr = property(lambda self: self.block("S", "R"))
    z_sd = property(lambda self: self.block("S", "D"))
    z_rd = property(lambda self: self.block("R", "D"))


class MultiportScattering(BlockMatrix):
    """Scattering matrix S (dimensionless) referenced to a common port resistance."""

    s_s = property(lambda self: self.block("S", "S"))
    s_r = property(lambda self: self.block("R", "R"))
    s_d = property(lambda self: self.block("D", "D"))
    s_rs = property(lambda self: self.block("R", "S"))
    s_ds = property(lambda self: self.block("D", "S"))
    s_dr = property(lambda self: self.block("D", "R"))
    s_sr = property(lambda self: self.block("S", "R"))
    s_sd = property(lambda self: self.block("S", "D"))
    s_rd = property(lambda self: self.block("R", "D"))


@dataclass(frozen=True, eq=False)
class PortState:
    """
    Voltages, currents and wave amplitudes at every port.

    The four vectors always satisfy ``v = a + b`` and ``i = (a - b) / R``.
    Use :meth:`from_voltages` or :meth:`from_waves` to construct.
    """

    v: np.ndarray
    i: np.ndarray
    a: np.ndarray
    b: np.ndarray
    R: float
    sizes: Sizes

    @classmethod
    def from_voltages(cls, v, i, R: float = DEFAULT_RESISTANCE, sizes: Sizes = None) -> "PortState":
        """Build a state from port voltages and currents: a = (v + R i)/2, b = (v - R i)/2."""
        R = _check_resistance(R)
        v = _frozen_complex(v).ravel()
        i = _frozen_complex(i).ravel()
        if v.shape != i.shape:
            raise StructureError("voltage and current vectors differ in length")
        sizes = (v.size, 0, 0) if sizes is None else tuple(sizes)
        if sum(sizes) != v.size:
            raise StructureError(f"partition {sizes} does not match {v.size} ports")
        a = _frozen_complex((v + R * i) / 2.0)
        b = _frozen_complex((v - R * i) / 2.0)
        return cls(v, i, a, b, R, sizes)

    @classmethod
    def from_waves(cls, a, b, R: float = DEFAULT_RESISTANCE, sizes: Sizes = None) -> "PortState":
        """Build a state from incident and reflected waves: v = a + b, i = (a - b)/R."""
        R = _check_resistance(R)
        a = _frozen_complex(a).ravel()
        b = _frozen_complex(b).ravel()
        if a.shape != b.shape:
            raise StructureError("incident and reflected wave vectors differ in length")
        sizes = (a.size, 0, 0) if sizes is None else tuple(sizes)
        if sum(sizes) != a.size:
            raise StructureError(f"partition {sizes} does not match {a.size} ports")
        v = _frozen_complex(a + b)
        i = _frozen_complex((a - b) / R)
        return cls(v, i, a, b, R, sizes)

    def segment(self, quantity: str, label: str) -> np.ndarray:
        """Slice ``quantity`` ('v', 'i', 'a' or 'b') to the ports of group ``label``."""
        idx = BLOCK_LABELS.index(label)
        start = sum(self.sizes[:idx])
        return getattr(self, quantity)[start:start + self.sizes[idx]]


def _right_divide(numerator: np.ndarray, denominator: np.ndarray, what: str) -> np.ndarray:
    """Return ``numerator @ inv(denominator)`` through an LU factorization."""
    n = denominator.shape[0]
    if n == 0:
        return numerator.copy()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        # X D = A  <=>  D^T X^T = A^T
        lu, piv = lu_factor(denominator.T)
    pivots = np.abs(np.diag(lu))
    scale = max(float(np.abs(denominator).max()), np.finfo(float).tiny)
    singular = np.flatnonzero(pivots <= n * np.finfo(float).eps * scale)
    if singular.size:
        pivot = int(singular[0])
        raise ConversionSingularityError(f"{what} is singular (zero pivot at index {pivot})", pivot=pivot)

    cond = float(np.linalg.cond(denominator))
    if cond > CONDITION_LIMIT:
        logger.warning("%s is ill-conditioned (condition number %.3e)", what, cond)

    out = lu_solve((lu, piv), numerator.T).T
    if not np.all(np.isfinite(out)):
        raise ConversionSingularityError(f"{what} produced non-finite entries")
    return out


def z_to_s(Z: Union[MultiportImpedance, np.ndarray], R: float = DEFAULT_RESISTANCE):
    """
    Convert an impedance matrix to a scattering matrix.

    S = (Z - I R)(Z + I R)^-1 with a common port resistance R.

    Args:
        Z: Partitioned impedance or a plain square array.
        R: Port resistance in ohms.

    Returns:
        MultiportScattering with the same partition, or a plain array if a
        plain array was given.

    Raises:
        ConversionSingularityError: If ``Z + I R`` is singular.
    """
    R = _check_resistance(R)
    partitioned = isinstance(Z, BlockMatrix)
    mat = Z.matrix if partitioned else np.asarray(Z, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise StructureError(f"impedance matrix must be square, got shape {mat.shape}")
    eye = np.eye(mat.shape[0])
    S = _right_divide(mat - R * eye, mat + R * eye, "Z + I*R")
    if partitioned:
        return MultiportScattering(S, Z.sizes)
    return S


def s_to_z(S: Union[MultiportScattering, np.ndarray], R: float = DEFAULT_RESISTANCE):
    """
    Convert a scattering matrix to an impedance matrix.

    Z = R (I + S)(I - S)^-1.

    Raises:
        ConversionSingularityError: If ``I - S`` is singular.
    """
    R = _check_resistance(R)
    partitioned = isinstance(S, BlockMatrix)
    mat = S.matrix if partitioned else np.asarray(S, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise StructureError(f"scattering matrix must be square, got shape {mat.shape}")
    eye = np.eye(mat.shape[0])
    Z = R * _right_divide(eye + mat, eye - mat, "I - S")
    if partitioned:
        return MultiportImpedance(Z, S.sizes)
    return Z
