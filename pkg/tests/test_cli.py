"""
Unit tests for risnet.cli module
Tests argument handling, output files and exit codes
"""
import pytest

from risnet import cli
from risnet.cli import EXIT_CROSS_CHECK, EXIT_INPUT, EXIT_OK, build_parser, main, spec_from_args
from risnet.errors import CrossCheckError

SWEEP_HEADER = (
    "d_over_lambda,gain_physical_opt_db,gain_conventional_opt_db,"
    "gain_cross_applied_db,gain_random_physical_db,gain_random_conventional_db"
)


class TestParser:
    """Test suite for argument parsing"""

    def test_sweep_options(self):
        """Test that sweep options reach the experiment spec"""
        args = build_parser().parse_args(
            ["sweep", "--spacing-steps", "11", "--trials", "500", "--seed", "7", "--workers", "2"]
        )
        spec = spec_from_args(args)
        assert spec.steps == 11
        assert spec.trials == 500
        assert spec.seed == 7
        assert spec.workers == 2

    def test_repeated_x(self):
        """Test that --x accumulates, including infinities"""
        args = build_parser().parse_args(["table1", "--x=-inf", "--x", "2.5"])
        assert spec_from_args(args).x_values == (float("-inf"), 2.5)

    def test_eval_spacing(self):
        """Test that --spacing pins the built-in two-element link"""
        spec = spec_from_args(build_parser().parse_args(["eval", "--spacing", "0.3"]))
        assert spec.spacing_min == spec.spacing_max == 0.3

    def test_missing_command(self):
        """Test that a subcommand is required"""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_convert_requires_input(self):
        """Test that convert needs --input"""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["convert"])


class TestMain:
    """Test suite for main entry point"""

    def test_table1_stdout(self, capsys):
        """Test table1 CSV on stdout"""
        assert main(["table1"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "x,phase_deg,magnitude,gain_db,limit,surrogate_magnitude"
        assert len(lines) == 6
        assert lines[-1].startswith("inf,")

    def test_table1_pretty_with_extra_x(self, capsys):
        """Test the pretty format and extra reactances"""
        assert main(["table1", "--format", "pretty", "--x=-inf", "--x", "2.5"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 9
        assert "0.371391" in lines[-1]

    def test_sweep_to_file(self, tmp_path):
        """Test a short sweep written to a file"""
        out = tmp_path / "sweep.csv"
        argv = ["sweep", "--spacing-steps", "3", "--trials", "500", "--starts", "1", "--output", str(out)]
        assert main(argv) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == SWEEP_HEADER
        assert len(lines) == 4

    def test_sweep_reproducible(self, tmp_path):
        """Test that equal seeds give byte-identical files"""
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            main(["sweep", "--spacing-steps", "3", "--trials", "300", "--starts", "1", "-o", str(path)])
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_sweep_report(self, capsys):
        """Test the consistency report after a sweep"""
        argv = ["sweep", "--spacing-steps", "3", "--trials", "1000000", "--starts", "2", "--report"]
        assert main(argv) == EXIT_OK
        assert "Spacing Sweep Consistency Report" in capsys.readouterr().out

    def test_bad_steps(self, capsys):
        """Test that a one-point sweep is a usage error"""
        assert main(["sweep", "--spacing-steps", "1"]) == EXIT_INPUT
        assert "error:" in capsys.readouterr().err

    def test_negative_seed(self, capsys):
        """Test that a negative seed is a usage error, not a traceback"""
        assert main(["sweep", "--spacing-steps", "2", "--trials", "10", "--seed", "-1"]) == EXIT_INPUT
        assert "error:" in capsys.readouterr().err

    def test_convert(self, tmp_path, capsys):
        """Test Z to S conversion of a blocked single-element link"""
        path = tmp_path / "z.txt"
        path.write_text("kind = Z\nM = 1\nN = 1\nK = 1\n[matrix]\n50, 0, 0\n0.2-0.1j, 50, 0\n0, 0.01+0.03j, 50\n")
        assert main(["convert", "-i", str(path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("kind = S\n")
        assert "# direct block is zero" in out

    def test_convert_missing_file(self, tmp_path, capsys):
        """Test that a missing input file exits with status 1"""
        assert main(["convert", "-i", str(tmp_path / "none.txt")]) == EXIT_INPUT
        assert "none.txt" in capsys.readouterr().err

    def test_convert_malformed(self, tmp_path, capsys):
        """Test that parse errors name the file and line"""
        path = tmp_path / "bad.txt"
        path.write_text("kind = Z\nM = 1\nN = 0\nK = 1\n[matrix]\n1, 0\n0, 2+jx\n")
        assert main(["convert", "-i", str(path)]) == EXIT_INPUT
        assert "bad.txt:7:" in capsys.readouterr().err

    def test_eval(self, capsys):
        """Test eval on the built-in single-element link"""
        assert main(["eval", "--x", "-1"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "model,k,m,real,imag,magnitude,gain_db"
        assert "physical-blocked" in out
        assert "agreement:" in out

    def test_eval_scenario(self, tmp_path, capsys):
        """Test eval on a scenario file"""
        path = tmp_path / "scenario.txt"
        path.write_text("[d_rs]\n100\n100\n[d_dr]\n1000, 1000\n[excess_dr]\n0, 0.25\n")
        assert main(["eval", "--scenario", str(path), "--x", "0.4142", "--x", "-0.4142"]) == EXIT_OK
        assert "theta-form" in capsys.readouterr().out

    def test_cross_check_exit(self, monkeypatch, capsys):
        """Test that a failed cross-check exits with status 2"""
        def failing(spec):
            raise CrossCheckError("optimizer and grid oracle disagree")

        monkeypatch.setattr(cli, "run_table2", failing)
        assert main(["table2"]) == EXIT_CROSS_CHECK
        assert "cross-check failed" in capsys.readouterr().err
