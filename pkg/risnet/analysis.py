"""
Closed-form reference values for the single- and two-element links,
and a consistency report for element-spacing sweeps.

All spacings are in wavelengths; gains are linear and normalized to the
path loss of RIS element 1.
"""
import math
from typing import Dict, Sequence

import numpy as np

from .utils import to_db


def single_element_transfer(x):
    """
    Normalized transfer D0' = 1 / (1 + jx) of one RIS element.

    Args:
        x: Normalized reactance X / R (scalar or array).

    Returns:
        Complex transfer coefficient(s).
    """
    return 1.0 / (1.0 + 1j * np.asarray(x, dtype=float))


def single_element_phase_deg(x):
    """phi = -arctan(x) in degrees."""
    return -np.degrees(np.arctan(np.asarray(x, dtype=float)))


def single_element_magnitude(x):
    """|D0'| = (1 + x^2)^(-1/2)."""
    return 1.0 / np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


def two_element_transfer(x1, x2, spacing):
    """
    Normalized transfer of the two-element link.

    D0' = 1/(1 + j x1) + exp(-j 2 pi d) / (1 + j x2).
    """
    shift = np.exp(-2j * np.pi * np.asarray(spacing, dtype=float))
    return single_element_transfer(x1) + shift * single_element_transfer(x2)


def optimal_physical_gain(spacing):
    """Best achievable |D0'|^2 with two elements: (1 + |cos(pi d)|)^2."""
    return (1.0 + np.abs(np.cos(np.pi * np.asarray(spacing, dtype=float)))) ** 2


def conventional_optimal_gain(n_elements: int = 2) -> float:
    """Conventional-model optimum (n/2)^2; every element contributes 1/2 in magnitude."""
    return (n_elements / 2.0) ** 2


def cross_applied_gain(spacing):
    """Physical gain at the conventional optimum with element 1's phase at zero: sin^2(pi d)."""
    return np.sin(np.pi * np.asarray(spacing, dtype=float)) ** 2


def random_physical_gain(spacing):
    """Mean physical gain under uniform random phases: 1 + cos(2 pi d) / 2."""
    return 1.0 + np.cos(2.0 * np.pi * np.asarray(spacing, dtype=float)) / 2.0


def random_conventional_gain(n_elements: int = 2) -> float:
    """Mean conventional gain under uniform random phases: n / 4."""
    return n_elements / 4.0


def analyze_sweep(
    rows: Sequence,
    tolerance: float = 1e-9,
    mc_sigmas: float = 3.0,
    verbose: bool = True,
) -> Dict:
    """
    Compare a two-element spacing sweep with the closed forms.

    Each row must expose ``spacing``, ``physical_opt``, ``conventional_opt``,
    ``cross_applied``, ``random_physical``, ``random_physical_se``,
    ``random_conventional`` and ``random_conventional_se`` (linear gains).

    Args:
        rows: Sweep rows.
        tolerance: Allowed deviation of the optimized and cross-applied curves.
        mc_sigmas: Allowed Monte-Carlo deviation in standard errors.
        verbose: If True, print the report.

    Returns:
        dict: Maximum deviations per check and an overall ``passed`` flag.
    """
    d = np.array([r.spacing for r in rows])
    phys = np.array([r.physical_opt for r in rows])
    conv = np.array([r.conventional_opt for r in rows])
    cross = np.array([r.cross_applied for r in rows])
    rp = np.array([r.random_physical for r in rows])
    rp_se = np.array([r.random_physical_se for r in rows])
    rc = np.array([r.random_conventional for r in rows])
    rc_se = np.array([r.random_conventional_se for r in rows])

    def worst_sigma(values, se, expected):
        z = np.abs(values - expected) / np.where(se > 0, se, np.inf)
        return float(np.max(z)) if len(z) else 0.0

    results = {
        'points': len(rows),
        'physical_opt_error': float(np.max(np.abs(phys - optimal_physical_gain(d)), initial=0.0)),
        'conventional_flatness': float(np.max(np.abs(conv - conventional_optimal_gain()), initial=0.0)),
        'cross_applied_error': float(np.max(np.abs(cross - cross_applied_gain(d)), initial=0.0)),
        'dominance_violation': float(np.max(np.maximum(cross - phys, rp - phys), initial=0.0)),
        'random_physical_sigma': worst_sigma(rp, rp_se, random_physical_gain(d)),
        'random_conventional_sigma': worst_sigma(rc, rc_se, random_conventional_gain()),
    }
    results['passed'] = (
        results['physical_opt_error'] <= 1e-6
        and results['conventional_flatness'] <= tolerance
        and results['cross_applied_error'] <= tolerance
        and results['dominance_violation'] <= tolerance
        and results['random_physical_sigma'] <= mc_sigmas
        and results['random_conventional_sigma'] <= mc_sigmas
    )

    if verbose:
        print(f"\n{'='*70}")
        print("Spacing Sweep Consistency Report")
        print(f"{'='*70}")
        print(f"Points: {results['points']}")
        print("\nOptimized curves (max abs deviation from closed form):")
        print(f"  Physical optimum:     {results['physical_opt_error']:.3e}")
        print(f"  Conventional (0 dB):  {results['conventional_flatness']:.3e}")
        print(f"  Cross-applied:        {results['cross_applied_error']:.3e}")
        print(f"  Dominance violation:  {results['dominance_violation']:.3e}")
        print("\nRandom-phase baselines (worst deviation in standard errors):")
        print(f"  Physical:     {results['random_physical_sigma']:.2f}")
        print(f"  Conventional: {results['random_conventional_sigma']:.2f}")
        if len(rows):
            worst = int(np.argmin(cross))
            print(f"\nLowest cross-applied gain: {to_db(max(cross[worst], 0.0)):.2f} dB at d = {d[worst]:.3f} lambda")
        if results['passed']:
            print("\nResult: ✓ Pass")
        else:
            print("\nResult: ✗ Fail")
        print(f"\n{'='*70}\n")

    return results


def optimal_reactances(spacing: float) -> Dict[str, float]:
    """
    Closed-form optimal normalized reactances of the two-element link.

    x1 = tan(theta/4) while cos(theta/2) > 0, x1 = -cot(theta/4) once it
    turns negative, and x2 = -x1, with theta = 2 pi d. At d = lambda/2 the
    optimum is the whole family x1 * x2 = -1; (1, -1) is returned.
    """
    quarter = math.pi * spacing / 2.0
    half = math.cos(2.0 * quarter)
    if half > 1e-12:
        x1 = math.tan(quarter)
    elif half < -1e-12:
        x1 = -1.0 / math.tan(quarter)
    else:
        x1 = 1.0
    return {'x1': x1, 'x2': -x1, 'gain': float(optimal_physical_gain(spacing))}
