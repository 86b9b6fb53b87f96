# risnet/utils.py
"""Small numeric helpers shared across the package."""
import math
from typing import Union

import numpy as np

ArrayLike = Union[float, complex, np.ndarray]


def to_db(gain: ArrayLike) -> ArrayLike:
    """
    Convert a linear power gain to decibels.

    A gain of exactly zero maps to ``-inf`` instead of raising a
    divide-by-zero warning.

    Args:
        gain: Linear (power) gain, scalar or array.

    Returns:
        10*log10(gain), same shape as the input.
    """
    g = np.asarray(gain, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(g)
    if out.ndim == 0:
        return float(out)
    return out


def wrap_phase(phi: ArrayLike) -> ArrayLike:
    """
    Wrap phases to the interval [0, 2*pi).

    Args:
        phi: Phase(s) in radians.

    Returns:
        Phase(s) reduced modulo 2*pi.
    """
    out = np.mod(np.asarray(phi, dtype=float), 2.0 * np.pi)
    # mod can return exactly 2*pi for tiny negative inputs
    out = np.where(out >= 2.0 * np.pi, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """
    Relative Frobenius-norm error ``||actual - expected|| / ||expected||``.

    Falls back to the absolute error when ``expected`` is the zero matrix.
    """
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    diff = float(np.linalg.norm(actual - expected))
    ref = float(np.linalg.norm(expected))
    if ref == 0.0:
        return diff
    return diff / ref


def format_number(value: float) -> str:
    """
    Render a float for CSV output.

    Uses 17 significant digits in scientific notation so values survive a
    text round trip. Infinities are written as ``inf`` / ``-inf``.
    """
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.16e}"


def format_complex(value: complex) -> str:
    """Render a complex number as a Python complex literal with full precision."""
    value = complex(value)
    re = f"{value.real:.16e}"
    im = f"{abs(value.imag):.16e}"
    sign = "-" if math.copysign(1.0, value.imag) < 0 else "+"
    return f"{re}{sign}{im}j"
