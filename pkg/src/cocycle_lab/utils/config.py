"""Configuration management for the cocycle laboratory.

Settings come from a TOML (or JSON) file whose sections map onto the pydantic
models below. Command-line flags override file values; the only environment
variable consulted is ``OUTPUT_DIR``.
"""

import json
import sys
from functools import lru_cache
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Handle tomllib import for different Python versions
if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class PrecisionConfig(BaseModel):
    """High-precision arithmetic settings."""

    bits: int = Field(default=256, description="Fractional bits for irrationals")
    boundary_tol: float = Field(
        default=1e-12, description="Distance below which a point hits a boundary"
    )
    relation_bound: int = Field(
        default=10_000, description="Coefficient bound of the integer-relation search"
    )
    certify_bits: int | None = Field(
        default=None, description="Relation tolerance exponent (defaults to bits/2)"
    )

    @field_validator("bits")
    @classmethod
    def validate_bits(cls, value: int) -> int:
        """Validate working precision."""
        if value < 64 or value > 65536:
            raise ValueError("Precision must be between 64 and 65536 bits")
        return value

    @field_validator("boundary_tol")
    @classmethod
    def validate_boundary_tol(cls, value: float) -> float:
        """Validate boundary tolerance."""
        if not 0.0 <= value < 1e-3:
            raise ValueError("Boundary tolerance must be in [0, 1e-3)")
        return value

    @property
    def effective_certify_bits(self) -> int:
        return self.certify_bits if self.certify_bits is not None else self.bits // 2


class ProbeConfig(BaseModel):
    """Monte-Carlo and simulation settings."""

    seed: int = Field(default=20240601, description="Single 64-bit random seed")
    grid: int = Field(default=2048, description="Grid points per axis for events")
    radii: list[float] = Field(
        default_factory=lambda: [0.1, 0.05, 0.01, 0.005],
        description="Near-return radii for the recurrence probe",
    )
    weyl_h_max: int = Field(default=2, description="Weyl panel bound on |h|")
    weyl_k_max: int = Field(default=3, description="Weyl panel bound on |k|")
    bootstrap: int = Field(default=200, description="Bootstrap resamples")
    return_cap: int = Field(
        default=10_000_000, description="Orbit length cap for induced returns"
    )

    @field_validator("seed")
    @classmethod
    def validate_seed(cls, value: int) -> int:
        """Validate seed range."""
        if value < 0 or value >= 2**64:
            raise ValueError("Seed must fit in 64 unsigned bits")
        return value

    @field_validator("radii")
    @classmethod
    def validate_radii(cls, value: list[float]) -> list[float]:
        """Validate and sort near-return radii."""
        if not value or any(r <= 0 for r in value):
            raise ValueError("Radii must be a non-empty list of positive numbers")
        return sorted(value, reverse=True)


class PartitionConfig(BaseModel):
    """Torus partition settings."""

    incidence_tol: float = Field(
        default=1e-9, description="Distance treated as a triple incidence"
    )
    vertical_edge_factor: float = Field(
        default=0.1, description="Cells with a vertical edge >= factor/ell form C"
    )
    neighbor_bound: int = Field(default=36, description="Closure-neighbor bound")
    svg_size: int = Field(default=800, description="SVG canvas size in pixels")

    @field_validator("svg_size")
    @classmethod
    def validate_svg_size(cls, value: int) -> int:
        """Validate canvas size."""
        if value < 16:
            raise ValueError("SVG size must be at least 16 pixels")
        return value


class FourierConfig(BaseModel):
    """Fourier laboratory settings."""

    h_max: int = Field(default=256, description="Box radius of stored spectra")
    resonance_guard: float = Field(
        default=1e-15, description="Smallest admissible ‖h·α‖"
    )
    quad_tol: float = Field(default=1e-11, description="Quadrature oracle tolerance")


class OutputConfig(BaseModel):
    """Artifact output settings."""

    directory: str = Field(default="results", description="Artifact directory")
    significant_digits: int = Field(
        default=15, description="Significant digits for CSV and JSON numbers"
    )

    @field_validator("significant_digits")
    @classmethod
    def validate_digits(cls, value: int) -> int:
        """Validate number formatting precision."""
        if value < 1 or value > 17:
            raise ValueError("Significant digits must be between 1 and 17")
        return value


class LoggingConfig(BaseModel):
    """Logging configuration."""

    level: str = Field(default="INFO", description="Log level")
    format: str = Field(default="detailed", description="Log format (simple, detailed)")
    file: str | None = Field(default=None, description="Log file path")
    max_size: str = Field(default="10MB", description="Maximum log file size")
    backup_count: int = Field(default=5, description="Number of backup log files")
    console_output: bool = Field(default=True, description="Enable console output")

    @field_validator("level")
    @classmethod
    def validate_log_level(cls, value: str) -> str:
        """Validate log level."""
        allowed_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if value.upper() not in allowed_levels:
            raise ValueError(f"Log level must be one of: {allowed_levels}")
        return value.upper()

    @field_validator("format")
    @classmethod
    def validate_log_format(cls, value: str) -> str:
        """Validate log format."""
        allowed_formats = {"simple", "detailed"}
        if value.lower() not in allowed_formats:
            raise ValueError(f"Log format must be one of: {allowed_formats}")
        return value.lower()


class Config(BaseModel):
    """Main configuration class."""

    precision: PrecisionConfig = Field(default_factory=PrecisionConfig)
    probes: ProbeConfig = Field(default_factory=ProbeConfig)
    partition: PartitionConfig = Field(default_factory=PartitionConfig)
    fourier: FourierConfig = Field(default_factory=FourierConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)


class EnvironmentSettings(BaseSettings):
    """The single environment override honoured by the runner."""

    model_config = SettingsConfigDict(case_sensitive=False, extra="ignore")

    output_dir: str | None = Field(default=None, description="OUTPUT_DIR override")


class RunConfig(BaseModel):
    """A fully resolved command invocation.

    Serialized (sorted keys) into the header of every artifact it produces.
    """

    command: str = Field(..., description="Subcommand name")
    params: dict[str, Any] = Field(default_factory=dict, description="Parameters")
    precision_bits: int = Field(default=256, description="Working precision")
    seed: int = Field(default=20240601, description="Random seed")
    output_dir: str = Field(default="results", description="Artifact directory")
    map_name: str | None = Field(default=None, description="Registry map, if any")

    @field_validator("params")
    @classmethod
    def validate_params(cls, value: dict[str, Any]) -> dict[str, Any]:
        """Require JSON-serializable parameters."""
        try:
            json.dumps(value, sort_keys=True)
        except (TypeError, ValueError):
            raise ValueError("Parameters must be JSON-serializable") from None
        return value

    def header(self, version: str) -> dict[str, Any]:
        """Header record embedded in artifacts."""
        return {
            "version": version,
            "command": self.command,
            "params": self.params,
            "precision_bits": self.precision_bits,
            "seed": self.seed,
            "map": self.map_name,
        }


def load_config_file(config_path: Path) -> dict[str, Any]:
    """Load configuration data from a TOML or JSON file.

    Args:
        config_path: Path to the configuration file

    Returns:
        Dictionary containing configuration data

    Raises:
        FileNotFoundError: If config file doesn't exist
        ValueError: If the file cannot be parsed
    """
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    try:
        if config_path.suffix.lower() == ".json":
            with open(config_path, encoding="utf-8") as f:
                data = json.load(f)
            if not isinstance(data, dict):
                raise ValueError("top-level JSON value must be an object")
            return data
        with open(config_path, "rb") as f:
            return tomllib.load(f)
    except Exception as e:
        raise ValueError(f"Invalid configuration file: {config_path}") from e


def default_config_paths() -> list[Path]:
    """Locations searched when no configuration path is given."""
    home_dir = Path.home()
    return [
        Path("cocycle_lab.toml"),
        Path("cocycle-lab.toml"),
        home_dir / ".config" / "cocycle-lab" / "config.toml",
    ]


@lru_cache(maxsize=4)
def get_settings(config_path: str | None = None) -> Config:
    """Load and cache configuration settings.

    Without an explicit path the default locations are searched; when none
    exists the built-in defaults apply. ``OUTPUT_DIR`` overrides the output
    directory in every case.

    Raises:
        FileNotFoundError: If an explicit config file doesn't exist
        ValueError: If configuration is invalid
    """
    config_data: dict[str, Any] = {}
    if config_path is None:
        for path in default_config_paths():
            if path.exists():
                config_data = load_config_file(path)
                break
    else:
        config_data = load_config_file(Path(config_path))

    try:
        config = Config(**config_data)
    except Exception as e:
        raise ValueError(f"Invalid configuration: {e}") from e

    env = EnvironmentSettings()
    if env.output_dir:
        config.output.directory = env.output_dir
    return config


def create_example_config(output_path: Path) -> None:
    """Create an example configuration file.

    Args:
        output_path: Path where to create the example config
    """
    example_config = """# Cocycle laboratory configuration (TOML)

[precision]
bits = 256            # fractional bits for irrationals
boundary_tol = 1e-12  # boundary-hit tolerance
relation_bound = 10000

[probes]
seed = 20240601
grid = 2048
radii = [0.1, 0.05, 0.01, 0.005]
weyl_h_max = 2
weyl_k_max = 3
bootstrap = 200

[partition]
incidence_tol = 1e-9
vertical_edge_factor = 0.1
neighbor_bound = 36
svg_size = 800

[fourier]
h_max = 256
resonance_guard = 1e-15
quad_tol = 1e-11

[output]
directory = "results"   # OUTPUT_DIR overrides this
significant_digits = 15

[logging]
level = "INFO"
format = "detailed"  # simple, detailed
# file = "cocycle_lab.log"
max_size = "10MB"
backup_count = 5
console_output = true
"""

    with open(output_path, "w", encoding="utf-8") as f:
        f.write(example_config)
