"""
Unit tests for risnet.formats module
Tests scenario and block-matrix file parsing
"""
import numpy as np
import pytest

from risnet.channel import build_unilateral_multiport, two_element_scenario
from risnet.errors import FormatError
from risnet.formats import (
    parse_block_file,
    parse_scenario,
    read_block_file,
    read_scenario,
    render_block_file,
    write_block_file,
)
from risnet.multiport import MultiportImpedance, MultiportScattering, z_to_s

TWO_ELEMENT = """\
# two RIS elements, blocked direct path
M = 1
N = 2
K = 1
R = 50
wavelength = 1.0
blocked_direct = true

[d_rs]
100
100
[d_dr]
1000, 1000
[excess_dr]
0, 0.25
"""


class TestParseScenario:
    """Test suite for scenario files"""

    def test_distance_tables(self):
        """Test a scenario with distance and excess tables"""
        cfg, geom, reference = parse_scenario(TWO_ELEMENT)
        assert (cfg.M, cfg.N, cfg.K) == (1, 2, 1)
        assert cfg.R == 50.0
        assert reference == 0
        np.testing.assert_allclose(geom.d_rs, [[100.0], [100.0]])
        np.testing.assert_allclose(geom.excess_dr, [[0.0, 0.25]])
        assert geom.blocked_direct

    def test_matches_builder(self):
        """Test that the file reproduces the built-in two-element link"""
        cfg, geom, _ = parse_scenario(TWO_ELEMENT)
        cfg2, geom2 = two_element_scenario(0.25)
        Z1 = build_unilateral_multiport(cfg, geom)
        Z2 = build_unilateral_multiport(cfg2, geom2)
        np.testing.assert_allclose(Z1.matrix, Z2.matrix, rtol=1e-15)

    def test_counts_inferred(self):
        """Test that M, N and K may be omitted"""
        cfg, _, _ = parse_scenario("[d_rs]\n10, 11\n12, 13\n14, 15\n[d_dr]\n20, 21, 22\n")
        assert (cfg.M, cfg.N, cfg.K) == (2, 3, 1)

    def test_positions(self):
        """Test position tables"""
        text = "blocked_direct = no\nreference = 2\n[tx]\n0, 0, 0\n[ris]\n3, 4, 0\n3, 4, 12\n[rx]\n3, 4, 24\n"
        cfg, geom, reference = parse_scenario(text)
        assert cfg.N == 2
        assert reference == 1
        assert not geom.blocked_direct
        np.testing.assert_allclose(geom.d_rs, [[5.0], [13.0]])

    def test_unknown_key(self):
        """Test that an unknown key reports its line"""
        with pytest.raises(FormatError) as excinfo:
            parse_scenario("M = 1\nfrequency = 3e9\n[d_rs]\n1\n[d_dr]\n1\n", path="s.txt")
        assert excinfo.value.line == 2
        assert str(excinfo.value).startswith("s.txt:2:")

    def test_bad_number(self):
        """Test that a non-numeric table entry reports its line"""
        with pytest.raises(FormatError) as excinfo:
            parse_scenario("[d_rs]\n100\n[d_dr]\nfar\n")
        assert excinfo.value.line == 4

    def test_ragged_rows(self):
        """Test that rows of different width raise"""
        with pytest.raises(FormatError) as excinfo:
            parse_scenario("[d_rs]\n1, 2\n3\n[d_dr]\n1\n")
        assert excinfo.value.line == 3

    def test_bad_value(self):
        """Test that a malformed header value raises"""
        with pytest.raises(FormatError) as excinfo:
            parse_scenario("N = two\n")
        assert excinfo.value.line == 1

    def test_bad_bool(self):
        """Test that an unknown boolean raises"""
        with pytest.raises(FormatError):
            parse_scenario("blocked_direct = maybe\n[d_rs]\n1\n[d_dr]\n1\n")

    def test_missing_line_separator(self):
        """Test that a header line without '=' raises"""
        with pytest.raises(FormatError) as excinfo:
            parse_scenario("M 1\n")
        assert excinfo.value.line == 1

    def test_unknown_section(self):
        """Test that an unknown section raises"""
        with pytest.raises(FormatError) as excinfo:
            parse_scenario("[d_rs]\n1\n[d_xx]\n1\n")
        assert excinfo.value.line == 3

    def test_missing_table(self):
        """Test that d_dr is required"""
        with pytest.raises(FormatError):
            parse_scenario("[d_rs]\n1\n")

    def test_shape_mismatch(self):
        """Test that tables must agree with the declared counts"""
        with pytest.raises(FormatError):
            parse_scenario("N = 2\n[d_rs]\n1\n[d_dr]\n1\n")

    def test_non_positive_distance(self):
        """Test that geometry errors surface as format errors"""
        with pytest.raises(FormatError):
            parse_scenario("[d_rs]\n-5\n[d_dr]\n1\n")

    def test_reference_out_of_range(self):
        """Test that the reference element must exist"""
        with pytest.raises(FormatError) as excinfo:
            parse_scenario("reference = 3\n[d_rs]\n1\n[d_dr]\n1\n")
        assert excinfo.value.line == 1

    def test_mixed_modes(self):
        """Test that positions and distances cannot be combined"""
        with pytest.raises(FormatError):
            parse_scenario("[d_rs]\n1\n[tx]\n0, 0, 0\n")

    def test_read_from_file(self, tmp_path):
        """Test reading from disk with the path in errors"""
        path = tmp_path / "scenario.txt"
        path.write_text(TWO_ELEMENT)
        cfg, _, _ = read_scenario(path)
        assert cfg.N == 2
        bad = tmp_path / "bad.txt"
        bad.write_text("M = x\n")
        with pytest.raises(FormatError) as excinfo:
            read_scenario(bad)
        assert excinfo.value.path == str(bad)


class TestBlockFiles:
    """Test suite for block-matrix files"""

    def test_parse(self):
        """Test a small impedance file"""
        text = "kind = Z\nR = 50\nM = 1\nN = 1\nK = 1\n[matrix]\n50, 0, 0\n1+2j, 50, 0\n0, 3-1j, 50\n"
        Z, R = parse_block_file(text)
        assert isinstance(Z, MultiportImpedance)
        assert R == 50.0
        assert Z.z_rs[0, 0] == 1 + 2j
        assert Z.z_dr[0, 0] == 3 - 1j

    def test_scattering_kind(self):
        """Test that kind = S gives a scattering matrix with the default R"""
        S, R = parse_block_file("kind = s\nM = 1\nN = 0\nK = 0\n[matrix]\n0.5\n")
        assert isinstance(S, MultiportScattering)
        assert R == 50.0

    def test_write_and_read(self, tmp_path):
        """Test that writing and reading reproduces the matrix exactly"""
        cfg, geom = two_element_scenario(0.3)
        S = z_to_s(build_unilateral_multiport(cfg, geom), cfg.R)
        path = tmp_path / "s.txt"
        write_block_file(path, S, cfg.R)
        back, R = read_block_file(path)
        assert isinstance(back, MultiportScattering)
        np.testing.assert_array_equal(back.matrix, S.matrix)
        assert R == cfg.R

    def test_render_header(self):
        """Test the header lines of a rendered file"""
        Z = MultiportImpedance(50.0 * np.eye(3), (1, 1, 1))
        text = render_block_file(Z, 50.0)
        assert text.startswith("kind = Z\nR = 50.0\nM = 1\nN = 1\nK = 1\n")
        assert "[matrix]" in text

    def test_bad_literal(self):
        """Test that a malformed complex literal reports its line"""
        text = "kind = Z\nM = 1\nN = 0\nK = 1\n[matrix]\n1, 0\n0, 2+jx\n"
        with pytest.raises(FormatError) as excinfo:
            parse_block_file(text)
        assert excinfo.value.line == 7

    def test_bad_kind(self):
        """Test that kind must be Z or S"""
        with pytest.raises(FormatError) as excinfo:
            parse_block_file("kind = Y\nM = 1\nN = 0\nK = 0\n[matrix]\n1\n")
        assert excinfo.value.line == 1

    def test_missing_key(self):
        """Test that the partition sizes are required"""
        with pytest.raises(FormatError):
            parse_block_file("kind = Z\nM = 1\n[matrix]\n1\n")

    def test_partition_mismatch(self):
        """Test that a matrix not matching M + N + K raises"""
        with pytest.raises(FormatError):
            parse_block_file("kind = Z\nM = 1\nN = 1\nK = 1\n[matrix]\n1, 0\n0, 1\n")
