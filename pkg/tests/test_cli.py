"""Tests for the command-line interface."""

import argparse
import json

import pytest

from src.cocycle_lab.cli.commands import (
    build_run_config,
    count,
    create_cli,
    create_parser,
)
from src.cocycle_lab.core.engine import RunOutcome
from src.cocycle_lab.utils.config import Config, get_settings


@pytest.fixture(autouse=True)
def isolated(monkeypatch, tmp_path):
    """Run every test in an empty directory with fresh settings."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("OUTPUT_DIR", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def run_cli(argv):
    """Run the CLI and return its exit code."""
    with pytest.raises(SystemExit) as excinfo:
        create_cli(argv)()
    return excinfo.value.code


class TestCount:
    """Test the integer argument type."""

    @pytest.mark.parametrize(
        "text,value", [("42", 42), ("1e6", 10**6), ("10**6", 10**6), ("2**14", 16384), ("0", 0)]
    )
    def test_accepted(self, text, value):
        """Test plain, scientific and power notation."""
        assert count(text) == value

    @pytest.mark.parametrize("text", ["1.5", "-3", "ten", "1e-3"])
    def test_rejected(self, text):
        """Test fractions, negatives and words are rejected."""
        with pytest.raises(argparse.ArgumentTypeError):
            count(text)


class TestParser:
    """Test argument parsing."""

    def test_run_options_after_subcommand(self):
        """Test run options are accepted after the subcommand."""
        args = create_parser().parse_args(["cf", "--value", "golden", "--seed", "5"])
        assert args.seed == 5
        assert args.command == "cf"

    def test_run_options_before_subcommand(self):
        """Test run options are accepted before the subcommand."""
        args = create_parser().parse_args(["--seed", "5", "-m", "psi", "cf", "--value", "e"])
        assert args.seed == 5
        assert args.map == "psi"

    def test_unset_run_options(self):
        """Test unset run options stay None."""
        args = create_parser().parse_args(["cf", "--value", "e"])
        assert args.seed is None
        assert args.precision is None
        assert args.output_dir is None

    def test_repeatable_boxes(self):
        """Test --box accumulates."""
        args = create_parser().parse_args(
            ["essval", "--alpha", "golden", "--window", "0,1", "--box", "0,0.5", "--box", "0.6,0.7"]
        )
        assert args.box == ["0,0.5", "0.6,0.7"]

    def test_invalid_flag(self):
        """Test unknown flags exit with 2."""
        with pytest.raises(SystemExit) as excinfo:
            create_parser().parse_args(["cf", "--value", "e", "--bogus"])
        assert excinfo.value.code == 2

    def test_missing_required(self):
        """Test a missing required option exits with 2."""
        with pytest.raises(SystemExit) as excinfo:
            create_parser().parse_args(["partition", "--alpha", "sqrt(2), e"])
        assert excinfo.value.code == 2

    def test_unknown_suite(self):
        """Test suite names are restricted to the registered suites."""
        with pytest.raises(SystemExit) as excinfo:
            create_parser().parse_args(["reproduce", "no-such-suite"])
        assert excinfo.value.code == 2


class TestBuildRunConfig:
    """Test conversion of parsed arguments to a RunConfig."""

    def test_params(self):
        """Test parameters exclude globals, None and False values."""
        args = create_parser().parse_args(
            ["partition", "--alpha", "sqrt(2), e", "--ell", "5", "-o", "out"]
        )
        run = build_run_config(args, Config())
        assert run.command == "partition"
        assert run.params == {"alpha": "sqrt(2), e", "ell": 5}
        assert run.output_dir == "out"

    def test_config_fallbacks(self):
        """Test precision, seed and directory default to the configuration."""
        config = Config(precision={"bits": 512}, probes={"seed": 9})
        args = create_parser().parse_args(["cf", "--value", "e"])
        run = build_run_config(args, config)
        assert run.precision_bits == 512
        assert run.seed == 9
        assert run.output_dir == "results"
        assert run.map_name is None

    def test_zero_seed_kept(self):
        """Test an explicit seed of zero is not replaced."""
        args = create_parser().parse_args(["cf", "--value", "e", "--seed", "0"])
        assert build_run_config(args, Config()).seed == 0


class TestCommands:
    """Test commands end to end."""

    def test_no_command(self, capsys):
        """Test running without a subcommand prints help and exits 1."""
        assert run_cli([]) == 1
        assert "usage" in capsys.readouterr().out

    def test_cf(self, tmp_path, capsys):
        """Test cf repairs unbalanced input and writes its artifacts."""
        code = run_cli(["cf", "--value", "sqrt(5)-1)/2", "--depth", "20", "-o", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "Wrote" in out
        assert (tmp_path / "cf.json").exists()
        document = json.loads((tmp_path / "cf.json").read_text())
        assert document["run"]["params"] == {"depth": 20, "value": "sqrt(5)-1)/2"}

    def test_rational_exit_code(self, tmp_path, capsys):
        """Test rational input exits with 2 and writes nothing."""
        assert run_cli(["cf", "--value", "3/7", "-o", str(tmp_path / "out")]) == 2
        assert "Error" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_outcome_exit_code(self, mocker, capsys):
        """Test the engine outcome decides the exit code."""
        engine = mocker.patch("src.cocycle_lab.cli.commands.LabEngine")
        engine.return_value.run.return_value = RunOutcome(
            "partition", 3, [], {"cells": 0}, "lines coincide"
        )
        assert run_cli(["partition", "--alpha", "sqrt(2), e", "--ell", "4"]) == 3
        captured = capsys.readouterr()
        assert "lines coincide" in captured.err
        assert json.loads(captured.out) == {"cells": 0}

    def test_config_init(self, tmp_path):
        """Test config-init refuses to overwrite without --force."""
        target = tmp_path / "lab.toml"
        create_cli(["config-init", "--output", str(target)])()
        assert target.exists()
        assert run_cli(["config-init", "--output", str(target)]) == 2
        create_cli(["config-init", "--output", str(target), "--force"])()

    def test_config_validate(self, tmp_path, capsys):
        """Test config-validate reports key settings."""
        path = tmp_path / "lab.toml"
        path.write_text("[precision]\nbits = 320\n")
        create_cli(["--config", str(path), "config-validate"])()
        assert "Precision: 320 bits" in capsys.readouterr().out

    def test_invalid_config(self, tmp_path):
        """Test an invalid configuration exits with 2."""
        path = tmp_path / "lab.toml"
        path.write_text("[output]\nsignificant_digits = 40\n")
        assert run_cli(["--config", str(path), "config-validate"]) == 2

    def test_missing_config(self, tmp_path):
        """Test a missing configuration file exits with 2."""
        assert run_cli(["--config", str(tmp_path / "none.toml"), "cf", "--value", "e"]) == 2
