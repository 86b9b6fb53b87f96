"""
Unit tests for risnet.analysis module
Tests the closed-form references and the sweep consistency report
"""
from dataclasses import dataclass

import numpy as np
import pytest

from risnet.analysis import (
    analyze_sweep,
    conventional_optimal_gain,
    cross_applied_gain,
    optimal_physical_gain,
    optimal_reactances,
    random_conventional_gain,
    random_physical_gain,
    single_element_magnitude,
    single_element_phase_deg,
    single_element_transfer,
    two_element_transfer,
)

ROOT2 = np.sqrt(2.0)


@dataclass
class Row:
    spacing: float
    physical_opt: float
    conventional_opt: float
    cross_applied: float
    random_physical: float
    random_physical_se: float
    random_conventional: float
    random_conventional_se: float


def exact_rows(spacings):
    return [
        Row(
            d,
            float(optimal_physical_gain(d)),
            1.0,
            float(cross_applied_gain(d)),
            float(random_physical_gain(d)),
            1e-3,
            0.5,
            1e-3,
        )
        for d in spacings
    ]


class TestSingleElement:
    """Test suite for single-element closed forms"""

    def test_table_points(self):
        """Test x = -1, 0, 1"""
        assert abs(single_element_phase_deg(-1.0) - 45.0) < 1e-12
        assert abs(single_element_phase_deg(1.0) + 45.0) < 1e-12
        assert abs(single_element_magnitude(-1.0) - 1 / ROOT2) < 1e-15
        assert single_element_transfer(0.0) == 1.0

    def test_magnitude_equals_cos_phase(self):
        """Test |D0'| = cos(phi)"""
        x = np.linspace(-50, 50, 101)
        np.testing.assert_allclose(
            single_element_magnitude(x), np.cos(np.radians(single_element_phase_deg(x))), atol=1e-14
        )

    def test_transfer_matches_parts(self):
        """Test that magnitude and phase match the complex value"""
        x = np.array([-3.0, 0.2, 7.0])
        t = single_element_transfer(x)
        np.testing.assert_allclose(np.abs(t), single_element_magnitude(x), rtol=1e-14)
        np.testing.assert_allclose(np.degrees(np.angle(t)), single_element_phase_deg(x), atol=1e-12)


class TestTwoElement:
    """Test suite for two-element closed forms"""

    def test_optimal_gain_table(self):
        """Test 6.02 dB at d = 0 and lambda, 0 dB at lambda/2, 4.64 dB at lambda/4"""
        assert optimal_physical_gain(0.0) == 4.0
        assert abs(optimal_physical_gain(1.0) - 4.0) < 1e-12
        assert abs(optimal_physical_gain(0.5) - 1.0) < 1e-12
        assert abs(optimal_physical_gain(0.25) - 1 / (6 - 4 * ROOT2)) < 1e-12

    def test_optimal_reactances(self):
        """Test the tabulated optimum reactances"""
        cases = {
            0.0: (0.0, 0.0),
            0.25: (ROOT2 - 1, 1 - ROOT2),
            0.5: (1.0, -1.0),
            0.75: (1 - ROOT2, ROOT2 - 1),
            1.0: (0.0, 0.0),
        }
        for d, (x1, x2) in cases.items():
            ref = optimal_reactances(d)
            assert abs(ref['x1'] - x1) < 1e-12
            assert abs(ref['x2'] - x2) < 1e-12

    def test_reactances_attain_gain(self):
        """Test that the closed-form reactances reach the optimal gain"""
        for d in np.linspace(0.0, 1.0, 21):
            ref = optimal_reactances(d)
            gain = abs(two_element_transfer(ref['x1'], ref['x2'], d)) ** 2
            assert abs(gain - optimal_physical_gain(d)) < 1e-12

    def test_cross_applied(self):
        """Test sin^2(pi d)"""
        assert cross_applied_gain(0.0) == 0.0
        assert abs(cross_applied_gain(0.5) - 1.0) < 1e-15

    def test_cross_applied_matches_transfer(self):
        """Test sin^2(pi d) against the transfer at the pinned conventional optimum"""
        for d in np.linspace(0.0, 1.0, 11):
            theta1 = 1.0
            theta2 = np.exp(2j * np.pi * d)
            value = (1 - theta1) / 2 + np.exp(-2j * np.pi * d) * (1 - theta2) / 2
            assert abs(abs(value) ** 2 - cross_applied_gain(d)) < 1e-12

    def test_random_means(self):
        """Test the random-phase expectations"""
        assert random_physical_gain(0.0) == 1.5
        assert abs(random_physical_gain(0.5) - 0.5) < 1e-15
        assert random_conventional_gain() == 0.5
        assert conventional_optimal_gain() == 1.0
        assert conventional_optimal_gain(4) == 4.0


class TestAnalyzeSweep:
    """Test suite for analyze_sweep report"""

    def test_exact_rows_pass(self, capsys):
        """Test that closed-form rows pass and the report is printed"""
        results = analyze_sweep(exact_rows(np.linspace(0, 1, 11)), verbose=True)
        out = capsys.readouterr().out
        assert results['passed']
        assert results['points'] == 11
        assert "Spacing Sweep Consistency Report" in out
        assert "Pass" in out

    def test_flatness_violation(self):
        """Test that a non-flat conventional curve fails"""
        rows = exact_rows([0.0, 0.5])
        rows[1].conventional_opt = 1.001
        results = analyze_sweep(rows, verbose=False)
        assert not results['passed']
        assert results['conventional_flatness'] == pytest.approx(1e-3)

    def test_dominance_violation(self):
        """Test that a cross-applied gain above the optimum fails"""
        rows = exact_rows([0.5])
        rows[0].cross_applied = 1.2
        results = analyze_sweep(rows, verbose=False)
        assert results['dominance_violation'] == pytest.approx(0.2)
        assert not results['passed']

    def test_monte_carlo_deviation(self):
        """Test that a baseline far outside its standard errors fails"""
        rows = exact_rows([0.25])
        rows[0].random_conventional = 0.51
        results = analyze_sweep(rows, verbose=False, mc_sigmas=4.0)
        assert results['random_conventional_sigma'] == pytest.approx(10.0)
        assert not results['passed']

    def test_quiet(self, capsys):
        """Test that verbose=False prints nothing"""
        analyze_sweep(exact_rows([0.1]), verbose=False)
        assert capsys.readouterr().out == ""
