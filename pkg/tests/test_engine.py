"""Tests for the run engine and its exit codes."""

import json

import pytest

from src.cocycle_lab.core.engine import LabEngine, RunContext, exit_code_for
from src.cocycle_lab.core.services import HANDLERS
from src.cocycle_lab.utils.config import Config, RunConfig
from src.cocycle_lab.utils.exceptions import (
    BoundaryHitError,
    ConfigurationError,
    CriterionFailure,
    DegeneracyError,
    PrecisionError,
    RationalInputError,
    ResonanceError,
    ReturnTimeoutError,
)


def staging_handler(error=None):
    """Handler that stages one artifact and then optionally raises."""

    def handler(ctx: RunContext) -> None:
        ctx.writer.add_json("report.json", {"value": 1})
        ctx.summary["staged"] = True
        if error is not None:
            raise error

    return handler


@pytest.fixture
def run_config(tmp_path):
    return RunConfig(command="probe", params={"depth": 3}, output_dir=str(tmp_path / "out"))


class TestExitCodes:
    """Test the mapping of exceptions to exit codes."""

    @pytest.mark.parametrize(
        "error,code",
        [
            (ConfigurationError("x"), 2),
            (RationalInputError("x", suspected=True), 2),
            (DegeneracyError("x"), 3),
            (BoundaryHitError("x"), 3),
            (PrecisionError("x"), 4),
            (ResonanceError("x"), 4),
            (CriterionFailure("x"), 5),
            (ReturnTimeoutError("x"), 1),
            (ValueError("x"), 2),
            (RuntimeError("x"), 1),
        ],
    )
    def test_exit_code_for(self, error, code):
        """Test each error class maps to its exit code."""
        assert exit_code_for(error) == code


class TestLabEngine:
    """Test dispatch, staging and commit."""

    def test_success_commits(self, run_config, tmp_path):
        """Test a completed command writes its artifacts."""
        engine = LabEngine(Config(), {"probe": staging_handler()})
        outcome = engine.run(run_config)
        assert outcome.exit_code == 0
        assert outcome.error is None
        assert outcome.artifacts == [tmp_path / "out" / "report.json"]
        document = json.loads(outcome.artifacts[0].read_text())
        assert document["run"]["command"] == "probe"
        assert document["run"]["params"] == {"depth": 3}
        assert outcome.summary == {"staged": True}

    def test_unknown_command(self, run_config):
        """Test an unknown command exits with 2."""
        outcome = LabEngine(Config(), {}).run(run_config)
        assert outcome.exit_code == 2
        assert "Unknown command" in outcome.error
        assert outcome.artifacts == []

    @pytest.mark.parametrize(
        "error,code",
        [
            (ConfigurationError("bad flag"), 2),
            (DegeneracyError("lines coincide"), 3),
            (PrecisionError("too few bits"), 4),
            (ValueError("bad value"), 2),
        ],
    )
    def test_failure_writes_nothing(self, run_config, tmp_path, error, code):
        """Test a failed command leaves no artifact behind."""
        engine = LabEngine(Config(), {"probe": staging_handler(error)})
        outcome = engine.run(run_config)
        assert outcome.exit_code == code
        assert outcome.artifacts == []
        assert not (tmp_path / "out").exists()

    def test_criterion_failure_keeps_report(self, run_config, tmp_path):
        """Test failed criteria still write the suite report."""
        engine = LabEngine(Config(), {"probe": staging_handler(CriterionFailure("FAIL"))})
        outcome = engine.run(run_config)
        assert outcome.exit_code == 5
        assert (tmp_path / "out" / "report.json").exists()

    def test_unexpected_error_propagates(self, run_config, tmp_path):
        """Test unexpected exceptions escape after discarding artifacts."""
        engine = LabEngine(Config(), {"probe": staging_handler(RuntimeError("boom"))})
        with pytest.raises(RuntimeError):
            engine.run(run_config)
        assert not (tmp_path / "out").exists()

    def test_default_registry(self):
        """Test every subcommand is registered."""
        expected = {
            "cf", "ostrowski", "badmargin", "typeprobe", "series",
            "sums", "lambda", "sandwich", "deviation",
            "fourier", "growth", "niederreiter", "coboundary",
            "partition", "eqfunct", "gaps", "hypothesis", "schmidt",
            "skew", "recur", "l2probe", "essval", "weyl", "conjugation", "induced",
            "reproduce", "bench",
        }  # fmt: skip
        assert set(LabEngine(Config()).commands) == expected
        assert set(HANDLERS) == expected


class TestRunContext:
    """Test parameter access from handlers."""

    def _context(self, tmp_path, **kwargs):
        from src.cocycle_lab.utils.artifacts import ArtifactWriter

        run = RunConfig(command="sums", output_dir=str(tmp_path), **kwargs)
        return RunContext(Config(), run, ArtifactWriter(tmp_path, {}))

    def test_param_default(self, tmp_path):
        """Test missing parameters fall back to the default."""
        ctx = self._context(tmp_path, params={"n_max": 10})
        assert ctx.param("n_max", 5) == 10
        assert ctx.param("per_decade", 4) == 4

    def test_require(self, tmp_path):
        """Test a missing required parameter names its flag."""
        ctx = self._context(tmp_path)
        with pytest.raises(ConfigurationError, match="--x0"):
            ctx.require("x0")

    def test_rotation(self, tmp_path):
        """Test the rotation is built at the run precision."""
        ctx = self._context(tmp_path, params={"alpha": "sqrt(2), e"}, precision_bits=128)
        alpha = ctx.rotation()
        assert alpha.rho == 2
        assert alpha.precision_bits == 128

    def test_map_required(self, tmp_path):
        """Test commands without --map and without a default fail."""
        with pytest.raises(ConfigurationError):
            self._context(tmp_path).map()
        assert self._context(tmp_path).map(default="psi").name == "psi"


class TestHandlers:
    """Test real commands end to end through the engine."""

    def test_cf(self, tmp_path):
        """Test the golden conjugate has twenty unit quotients."""
        run = RunConfig(
            command="cf",
            params={"value": "sqrt(5)-1)/2", "depth": 20},
            output_dir=str(tmp_path),
        )
        outcome = LabEngine(Config()).run(run)
        assert outcome.exit_code == 0
        assert outcome.summary["quotients"] == [1] * 20
        assert {p.name for p in outcome.artifacts} == {"cf.json", "convergents.csv"}
        lines = (tmp_path / "convergents.csv").read_text().splitlines()
        assert lines[0].startswith("# run: ")
        assert lines[1] == "n,a_n,p_n,q_n,chain"

    def test_cf_rational(self, tmp_path):
        """Test rational input exits with 2 and writes nothing."""
        run = RunConfig(command="cf", params={"value": "3/7"}, output_dir=str(tmp_path / "out"))
        outcome = LabEngine(Config()).run(run)
        assert outcome.exit_code == 2
        assert not (tmp_path / "out").exists()

    def test_partition_counts(self, tmp_path):
        """Test the partition command reports the cell count."""
        run = RunConfig(
            command="partition",
            params={"alpha": "sqrt(2), e", "ell": 4},
            output_dir=str(tmp_path),
        )
        outcome = LabEngine(Config()).run(run)
        assert outcome.exit_code == 0
        assert outcome.summary["cells"] == 44

    def test_partition_svg_under_output_dir(self, tmp_path):
        """Test a relative SVG path lands inside the output directory."""
        run = RunConfig(
            command="partition",
            params={"alpha": "sqrt(2), e", "ell": 3, "svg": "plots/p3.svg", "style": "shaded"},
            output_dir=str(tmp_path),
        )
        outcome = LabEngine(Config()).run(run)
        assert outcome.exit_code == 0
        svg = tmp_path / "plots" / "p3.svg"
        assert svg in outcome.artifacts
        assert svg.read_text().startswith("<?xml")
