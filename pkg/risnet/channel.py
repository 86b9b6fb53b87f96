"""Isotropic-radiator channel synthesis.

Builds the off-diagonal impedance blocks of the Tx/RIS/Rx multiport from
link geometry and assembles the unilateral multiport (matched ports, no
intra-array coupling, feedback blocks set to zero).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import GeometryError
from .multiport import DEFAULT_RESISTANCE, MultiportImpedance

logger = logging.getLogger(__name__)

EXCESS_HOPS = ("dr", "rs")


@dataclass(frozen=True)
class LinkConfig:
    """Port counts and global parameters of the three-group system."""

    M: int = 1
    N: int = 1
    K: int = 1
    R: float = DEFAULT_RESISTANCE
    wavelength: float = 1.0

    def __post_init__(self):
        for name in ("M", "N", "K"):
            if int(getattr(self, name)) < 1:
                raise GeometryError(f"{name} must be at least 1, got {getattr(self, name)}")
        if not self.R > 0 or not np.isfinite(self.R):
            raise GeometryError(f"port resistance must be positive, got {self.R}")
        if not self.wavelength > 0 or not np.isfinite(self.wavelength):
            raise GeometryError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength


def _as_table(values, name: str) -> Optional[np.ndarray]:
    if values is None:
        return None
    arr = np.array(values, dtype=float, ndmin=2)
    if arr.ndim != 2:
        raise GeometryError(f"{name} must be a 2-D table, got {arr.ndim} dimensions")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class LinkGeometry:
    """
    Per-pair path lengths (meters) between the port groups.

    ``d_rs`` is N x M, ``d_dr`` is K x N and ``d_ds`` is K x M. The optional
    ``excess_rs`` / ``excess_dr`` tables add path length that only
    contributes propagation phase, not spreading loss. When
    ``blocked_direct`` is set the direct Tx-Rx block is zero and ``d_ds``
    may be omitted.
    """

    d_rs: np.ndarray
    d_dr: np.ndarray
    d_ds: Optional[np.ndarray] = None
    blocked_direct: bool = True
    excess_rs: Optional[np.ndarray] = None
    excess_dr: Optional[np.ndarray] = None
    ris_positions: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("d_rs", "d_dr", "d_ds", "excess_rs", "excess_dr"):
            object.__setattr__(self, name, _as_table(getattr(self, name), name))
        if not self.blocked_direct and self.d_ds is None:
            raise GeometryError("d_ds is required when the direct link is not blocked")
        if self.ris_positions is not None:
            pos = np.array(self.ris_positions, dtype=float, ndmin=2)
            pos.flags.writeable = False
            object.__setattr__(self, "ris_positions", pos)

    @classmethod
    def from_positions(cls, tx_positions, ris_positions, rx_positions, blocked_direct: bool = False):
        """
        Derive path lengths from 3-D antenna positions (Euclidean norm).

        Args:
            tx_positions: M x 3 array of Tx antenna positions.
            ris_positions: N x 3 array of RIS element positions.
            rx_positions: K x 3 array of Rx antenna positions.
            blocked_direct: Zero the direct Tx-Rx link.
        """
        tx = np.array(tx_positions, dtype=float, ndmin=2)
        ris = np.array(ris_positions, dtype=float, ndmin=2)
        rx = np.array(rx_positions, dtype=float, ndmin=2)
        for name, pos in (("tx", tx), ("ris", ris), ("rx", rx)):
            if pos.shape[1] != 3:
                raise GeometryError(f"{name} positions must be 3-D points, got shape {pos.shape}")
        return cls(
            d_rs=cdist(ris, tx),
            d_dr=cdist(rx, ris),
            d_ds=cdist(rx, tx),
            blocked_direct=blocked_direct,
            ris_positions=ris,
        )


def validate_geometry(cfg: LinkConfig, geom: LinkGeometry) -> None:
    """
    Check table shapes and distances against the configuration.

    Raises:
        GeometryError: On shape mismatch or a non-positive distance.
    """
    expected = {
        "d_rs": (cfg.N, cfg.M),
        "d_dr": (cfg.K, cfg.N),
        "d_ds": (cfg.K, cfg.M),
        "excess_rs": (cfg.N, cfg.M),
        "excess_dr": (cfg.K, cfg.N),
    }
    for name, shape in expected.items():
        table = getattr(geom, name)
        if table is None:
            continue
        if table.shape != shape:
            raise GeometryError(f"{name} has shape {table.shape}, expected {shape}")
        if not np.all(np.isfinite(table)):
            raise GeometryError(f"{name} contains non-finite entries")

    used = [geom.d_rs, geom.d_dr]
    if not geom.blocked_direct:
        used.append(geom.d_ds)
    for table in used:
        if np.any(table <= 0.0):
            raise GeometryError("all pair distances must be positive")
        if np.any(table < cfg.wavelength):
            logger.warning(
                "pair distance %.4g m is below one wavelength (%.4g m); far-field model may be inaccurate",
                float(table.min()), cfg.wavelength,
            )

    if geom.ris_positions is not None and len(geom.ris_positions) > 1:
        spacing = float(pdist(geom.ris_positions).min())
        if spacing < cfg.wavelength / 2.0:
            logger.warning(
                "RIS element spacing %.4g m is below half a wavelength; intra-array coupling is ignored",
                spacing,
            )


def mutual_impedance(d, wavelength: float, R: float = DEFAULT_RESISTANCE):
    """
    Mutual impedance between two isotropic radiators.

    z21 = -R / (j k d) * exp(-j k d) with k = 2 pi / wavelength.

    Args:
        d: Distance(s) in meters, scalar or array.
        wavelength: Wavelength in meters.
        R: Port resistance in ohms.

    Returns:
        Complex impedance in ohms, same shape as ``d``.

    Raises:
        GeometryError: If any distance is not positive.
    """
    d = np.asarray(d, dtype=float)
    if np.any(~np.isfinite(d)) or np.any(d <= 0.0):
        raise GeometryError("mutual impedance requires positive, finite distances")
    if not wavelength > 0:
        raise GeometryError(f"wavelength must be positive, got {wavelength}")
    kd = 2.0 * np.pi * (d / wavelength)
    z = 1j * R / kd * np.exp(-1j * kd)
    if z.ndim == 0:
        return complex(z)
    return z


def _hop(d: np.ndarray, excess: Optional[np.ndarray], cfg: LinkConfig) -> np.ndarray:
    z = mutual_impedance(d, cfg.wavelength, cfg.R)
    if excess is not None:
        z = z * np.exp(-2j * np.pi * (excess / cfg.wavelength))
    return np.asarray(z, dtype=complex)


def hop_impedances(cfg: LinkConfig, geom: LinkGeometry) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Synthesize the three forward channel blocks.

    Returns:
        (Z_RS, Z_DR, Z_DS) in ohms; Z_DS is zero when the direct link is blocked.
    """
    validate_geometry(cfg, geom)
    z_rs = _hop(geom.d_rs, geom.excess_rs, cfg)
    z_dr = _hop(geom.d_dr, geom.excess_dr, cfg)
    if geom.blocked_direct:
        z_ds = np.zeros((cfg.K, cfg.M), dtype=complex)
    else:
        z_ds = _hop(geom.d_ds, None, cfg)
    return z_rs, z_dr, z_ds


def build_unilateral_multiport(cfg: LinkConfig, geom: LinkGeometry) -> MultiportImpedance:
    """
    Assemble the unilateral multiport impedance matrix.

    Diagonal blocks are I*R, the forward blocks come from
    :func:`mutual_impedance`, the feedback blocks are exactly zero.
    """
    z_rs, z_dr, z_ds = hop_impedances(cfg, geom)

    return MultiportImpedance.from_blocks(
        {
            ("S", "S"): np.eye(cfg.M) * cfg.R,
            ("R", "R"): np.eye(cfg.N) * cfg.R,
            ("D", "D"): np.eye(cfg.K) * cfg.R,
            ("R", "S"): z_rs,
            ("D", "R"): z_dr,
            ("D", "S"): z_ds,
        },
        (cfg.M, cfg.N, cfg.K),
    )


def single_element_scenario(
    d_rs: float = 100.0,
    d_dr: float = 1000.0,
    R: float = DEFAULT_RESISTANCE,
    wavelength: float = 1.0,
) -> Tuple[LinkConfig, LinkGeometry]:
    """
    SISO link over one RIS element with a blocked direct path.

    ``d_rs`` and ``d_dr`` are given in wavelengths.
    """
    cfg = LinkConfig(M=1, N=1, K=1, R=R, wavelength=wavelength)
    geom = LinkGeometry(
        d_rs=[[d_rs * wavelength]],
        d_dr=[[d_dr * wavelength]],
        blocked_direct=True,
    )
    return cfg, geom


def two_element_scenario(
    spacing: float,
    d_rs: float = 100.0,
    d_dr: float = 1000.0,
    R: float = DEFAULT_RESISTANCE,
    wavelength: float = 1.0,
    excess_hop: str = "dr",
) -> Tuple[LinkConfig, LinkGeometry]:
    """
    SISO link over two RIS elements with a blocked direct path.

    Element 2's total path exceeds element 1's by ``spacing``. The extra
    length is phase-only and sits on the hop named by ``excess_hop``, so
    both elements keep element 1's spreading loss. All lengths are in
    wavelengths.
    """
    if excess_hop not in EXCESS_HOPS:
        raise GeometryError(f"excess_hop must be one of {EXCESS_HOPS}, got {excess_hop!r}")
    if spacing < 0:
        raise GeometryError(f"element spacing must be non-negative, got {spacing}")
    cfg = LinkConfig(M=1, N=2, K=1, R=R, wavelength=wavelength)
    extra = spacing * wavelength
    excess_rs = [[0.0], [extra]] if excess_hop == "rs" else None
    excess_dr = [[0.0, extra]] if excess_hop == "dr" else None
    geom = LinkGeometry(
        d_rs=[[d_rs * wavelength], [d_rs * wavelength]],
        d_dr=[[d_dr * wavelength, d_dr * wavelength]],
        blocked_direct=True,
        excess_rs=excess_rs,
        excess_dr=excess_dr,
    )
    return cfg, geom
