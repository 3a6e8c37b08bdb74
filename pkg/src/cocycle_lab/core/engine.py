"""Run engine for the cocycle laboratory.

The engine resolves a RunConfig into a handler call, stages the artifacts the
handler produces and commits them only when the command finished, so a
failed run leaves nothing at the final paths.
"""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .. import __version__
from ..utils.artifacts import ArtifactWriter
from ..utils.config import Config, RunConfig
from ..utils.exceptions import CocycleLabError, ConfigurationError, CriterionFailure
from ..utils.logging import get_logger, log_duration, run_context
from .dynamics import make_rotation
from .maps import PiecewisePlanarMap, get_map
from .models import RotationVector

logger = get_logger(__name__)


@dataclass
class RunContext:
    """Everything a command handler may read or write."""

    config: Config
    run: RunConfig
    writer: ArtifactWriter
    summary: dict[str, Any] = field(default_factory=dict)

    def param(self, name: str, default: Any = None) -> Any:
        value = self.run.params.get(name)
        return default if value is None else value

    def require(self, name: str) -> Any:
        value = self.run.params.get(name)
        if value is None:
            raise ConfigurationError(f"Command {self.run.command} needs --{name.replace('_', '-')}")
        return value

    @property
    def bits(self) -> int:
        return self.run.precision_bits

    @property
    def seed(self) -> int:
        return self.run.seed

    def rotation(self, name: str = "alpha") -> RotationVector:
        return make_rotation(self.require(name), self.bits)

    def map(self, rho: int | None = None, default: str | None = None) -> PiecewisePlanarMap:
        spec = self.run.map_name or default
        if spec is None:
            raise ConfigurationError(f"Command {self.run.command} needs --map")
        return get_map(spec, rho)


Handler = Callable[[RunContext], None]


@dataclass(frozen=True)
class RunOutcome:
    command: str
    exit_code: int
    artifacts: list[Path]
    summary: dict[str, Any]
    error: str | None = None


def exit_code_for(error: BaseException) -> int:
    """Process exit code for an exception escaping a command."""
    if isinstance(error, CocycleLabError):
        return error.exit_code
    if isinstance(error, ValueError):
        return 2
    return 1


class LabEngine:
    """Dispatches run configurations to registered command handlers."""

    def __init__(self, config: Config, handlers: dict[str, Handler] | None = None):
        """Initialize the engine.

        Args:
            config: Application configuration
            handlers: Command registry (defaults to the built-in commands)
        """
        self.config = config
        if handlers is None:
            from .services import HANDLERS

            handlers = HANDLERS
        self.handlers = handlers

    @property
    def commands(self) -> list[str]:
        return sorted(self.handlers)

    def run(self, run: RunConfig) -> RunOutcome:
        """Execute one command and commit its artifacts.

        Errors are reported through the outcome's exit code; only a
        completed command (or a reproduce run whose criteria failed) writes
        artifacts.
        """
        handler = self.handlers.get(run.command)
        if handler is None:
            message = f"Unknown command {run.command!r}; available: {', '.join(self.commands)}"
            logger.error(message)
            return RunOutcome(run.command, 2, [], {}, message)

        writer = ArtifactWriter(
            run.output_dir, run.header(__version__), self.config.output.significant_digits
        )
        context = RunContext(self.config, run, writer)
        start_time = time.time()
        try:
            with run_context(run.command, run.seed):
                logger.debug(f"Running {run.command} with {run.params}")
                handler(context)
        except CriterionFailure as e:
            logger.error(f"{run.command}: {e}")
            written = writer.commit()
            return RunOutcome(run.command, e.exit_code, written, context.summary, str(e))
        except (CocycleLabError, ValueError) as e:
            logger.error(f"{run.command} failed: {e}")
            writer.discard()
            return RunOutcome(run.command, exit_code_for(e), [], context.summary, str(e))
        except BaseException:
            writer.discard()
            raise

        written = writer.commit()
        log_duration(run.command, time.time() - start_time)
        return RunOutcome(run.command, 0, written, context.summary)


__all__ = ["Handler", "LabEngine", "RunContext", "RunOutcome", "exit_code_for"]
