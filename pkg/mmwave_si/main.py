# === Python Modules for Path Handling ===
import sys
from pathlib import Path

## === Adding the project root directory to sys.path so the package imports when this file is run directly ===
sys.path.append(
    str(Path(__file__).resolve().parent.parent)
)

# === Python Modules ===
from dataclasses import dataclass, field
from typing import Annotated, List, Literal, Sequence

from dotenv import load_dotenv
from pydantic import AfterValidator, BaseModel, Field, ValidationError
from pydantic_settings import (
    BaseSettings,
    CliApp,
    CliSubCommand,
    SettingsConfigDict,
    SettingsError,
    get_subcommand
)

# === Schema ===
from mmwave_si.schema.schema import NeighborhoodSpec

# === Pipelines ===
from mmwave_si.pipelines.analyze_pipeline import AnalyzePipeline, parse_direction
from mmwave_si.pipelines.fit_pipeline import FitPipeline
from mmwave_si.pipelines.pattern_pipeline import PatternPipeline
from mmwave_si.pipelines.report_pipeline import ReportPipeline
from mmwave_si.pipelines.sample_pipeline import SamplePipeline
from mmwave_si.pipelines.simulate_pipeline import SimulatePipeline

# === Utils ===
from mmwave_si.utils.common import configure_logging, get_logger
from mmwave_si.utils.exceptions import MmwaveSiError

logger = get_logger("mmwave_si.main")

PROG_NAME = "mmwave-si"


@dataclass
class RunContext:
    """Values shared by every subcommand: the command line and the worker count."""
    command: List[str] = field(default_factory = list)
    threads: int | None = None


def _check_neighborhood(value: str) -> str:
    try:
        NeighborhoodSpec.parse(value)
    except (ValueError, ValidationError) as e:
        raise ValueError(f"invalid neighborhood {value!r}: {e}") from None
    return value


def _check_direction(value: str) -> str:
    try:
        parse_direction(value)
    except (ValueError, ValidationError) as e:
        raise ValueError(f"invalid direction {value!r}: {e}") from None
    return value


NeighborhoodText = Annotated[str, AfterValidator(_check_neighborhood)]
DirectionText = Annotated[str, AfterValidator(_check_direction)]
Quantity = Literal[
    "global",
    "inr-min",
    "inr-max",
    "inr-min-cond",
    "inr-max-cond",
    "inr-min-composed",
    "inr-max-composed",
    "range"
]


# === Subcommands ===
class SimulateCLI(BaseModel):
    """Simulate the INR of every beam pair and write the grid CSV."""

    config: Path | None = Field(
        default = None,
        description = "Geometry/link JSON config; defaults are used when omitted."
    )
    out: Path = Field(
        default = Path("grid.csv"),
        description = "Grid CSV to write; run metadata goes to <stem>.json."
    )
    cache: Path | None = Field(
        default = None,
        description = "Also write a binary cache of the grid here."
    )
    channel_out: Path | None = Field(
        default = None,
        description = "Also dump the calibrated channel matrix here."
    )

    def run(self, ctx: RunContext) -> None:
        SimulatePipeline(
            out_path = self.out,
            config_path = self.config,
            cache_path = self.cache,
            channel_path = self.channel_out,
            threads = ctx.threads,
            command = ctx.command
        ).simulate()


class AnalyzeCLI(BaseModel):
    """Neighborhood statistics, per-beam summaries, threshold fractions, CDFs and slices of a grid."""

    grid: Path = Field(description = "Grid CSV or binary cache.")
    out_dir: Path = Field(
        default = Path("analysis"),
        description = "Folder for the output CSVs."
    )
    neighborhood: NeighborhoodText = Field(
        default = "5,5",
        description = "Neighborhood half-widths 'DTHETA,DPHI' in degrees."
    )
    thresholds: List[float] = Field(
        default = [10.0, 20.0, 30.0],
        description = "Per-beam INR thresholds in dB."
    )
    neighborhood_threshold: float = Field(
        default = 0.0,
        description = "INR threshold for the neighborhood fractions."
    )
    slice_tx: DirectionText | None = Field(
        default = None,
        description = "Export the receive-side INR map of transmit beam 'AZ,EL'."
    )
    slice_rx: DirectionText | None = Field(
        default = None,
        description = "Export the transmit-side INR map of receive beam 'AZ,EL'."
    )
    no_pairs: bool = Field(
        default = False,
        description = "Skip the per-pair statistics CSV."
    )

    def run(self, ctx: RunContext) -> None:
        AnalyzePipeline(
            grid_path = self.grid,
            out_dir = self.out_dir,
            neighborhood = NeighborhoodSpec.parse(self.neighborhood),
            thresholds_db = self.thresholds,
            neighborhood_threshold_db = self.neighborhood_threshold,
            slice_tx = parse_direction(self.slice_tx) if self.slice_tx else None,
            slice_rx = parse_direction(self.slice_rx) if self.slice_rx else None,
            write_pairs = not self.no_pairs,
            command = ctx.command
        ).analyze()


class FitCLI(BaseModel):
    """Fit the global model and the neighborhood tables to a grid."""

    grid: Path = Field(description = "Grid CSV or binary cache.")
    out: Path = Field(
        default = Path("fits.json"),
        description = "Fit JSON to write."
    )
    max_neighborhood: int = Field(
        default = 5,
        ge = 0,
        description = "Largest DTHETA/DPHI fitted, in degrees."
    )
    bin_width: float = Field(
        default = 1.0,
        gt = 0.0,
        description = "Center-INR bin width for conditioned fits, in dB."
    )
    min_bin_samples: int = Field(
        default = 100,
        ge = 10,
        description = "Bins with fewer samples are reported as absent."
    )

    def run(self, ctx: RunContext) -> None:
        FitPipeline(
            grid_path = self.grid,
            out_path = self.out,
            max_neighborhood = self.max_neighborhood,
            bin_width_db = self.bin_width,
            min_bin_samples = self.min_bin_samples,
            command = ctx.command
        ).fit()


class SampleCLI(BaseModel):
    """Draw INR samples from the embedded models."""

    quantity: Quantity = Field(
        default = "global",
        description = "Model quantity to draw."
    )
    neighborhood: NeighborhoodText = Field(
        default = "1,1",
        description = "Neighborhood 'DTHETA,DPHI' in degrees."
    )
    inr_db: float | None = Field(
        default = None,
        description = "Nominal INR for the conditioned quantities."
    )
    n: int = Field(
        default = 1,
        ge = 1,
        description = "Number of draws."
    )
    seed: int | None = Field(
        default = None,
        ge = 0,
        description = "Generator seed; recorded in the output."
    )
    out: Path | None = Field(
        default = None,
        description = "Output file; standard output when omitted."
    )
    format: Literal["lines", "csv"] = Field(
        default = "lines",
        description = "One value per line, or a sample,value_db CSV."
    )

    def run(self, ctx: RunContext) -> None:
        SamplePipeline(
            quantity = self.quantity,
            neighborhood = NeighborhoodSpec.parse(self.neighborhood),
            inr_db = self.inr_db,
            n = self.n,
            seed = self.seed,
            out_path = self.out,
            output_format = self.format,
            command = ctx.command
        ).sample()


class ReportCLI(BaseModel):
    """Headline statistics of a grid next to the global-model predictions."""

    grid: Path = Field(description = "Grid CSV or binary cache.")
    out: Path | None = Field(
        default = None,
        description = "Report file; standard output when omitted."
    )
    format: Literal["text", "json"] = Field(
        default = "text",
        description = "Report layout."
    )

    def run(self, ctx: RunContext) -> None:
        ReportPipeline(
            grid_path = self.grid,
            out_path = self.out,
            output_format = self.format,
            command = ctx.command
        ).report()


class PatternCLI(BaseModel):
    """Export a beam-gain cut of a conjugate beam."""

    out: Path = Field(
        default = Path("pattern.csv"),
        description = "CSV to write (az_deg,el_deg,gain_db)."
    )
    steer: DirectionText = Field(
        default = "0,0",
        description = "Steering direction 'AZ,EL'."
    )
    axis: Literal["azimuth", "elevation"] = Field(
        default = "azimuth",
        description = "Cut through the steering direction."
    )
    span: float = Field(
        default = 90.0,
        gt = 0.0,
        description = "Half-span of the cut in degrees."
    )
    resolution: float = Field(
        default = 0.1,
        gt = 0.0,
        description = "Cut step in degrees."
    )
    config: Path | None = Field(
        default = None,
        description = "Geometry/link JSON config for the array and budget."
    )

    def run(self, ctx: RunContext) -> None:
        PatternPipeline(
            out_path = self.out,
            steer = parse_direction(self.steer),
            axis = self.axis,
            span_deg = self.span,
            resolution_deg = self.resolution,
            config_path = self.config,
            command = ctx.command
        ).export_pattern()


class MmwaveSiCLI(BaseSettings):
    """Beamformed self-interference between colocated mmWave arrays: simulate, analyze, fit, sample."""

    model_config = SettingsConfigDict(
        env_prefix = "MMWAVE_SI_",
        cli_prog_name = PROG_NAME,
        cli_kebab_case = True,
        cli_implicit_flags = True
    )

    threads: int | None = Field(
        default = None,
        ge = 1,
        description = "Worker threads; defaults to the available cores."
    )
    log_level: str = Field(
        default = "INFO",
        description = "Log level on standard error."
    )

    simulate: CliSubCommand[SimulateCLI]
    analyze: CliSubCommand[AnalyzeCLI]
    fit: CliSubCommand[FitCLI]
    sample: CliSubCommand[SampleCLI]
    report: CliSubCommand[ReportCLI]
    pattern: CliSubCommand[PatternCLI]


# === Main body ===
def main(
        argv: Sequence[str] | None = None
) -> int:
    """
    Parses the command line, runs one subcommand and maps failures to exit codes:
    0 success, 2 usage/config, 3 data, 4 numeric non-convergence.
    """
    load_dotenv()
    args = list(sys.argv[1:] if argv is None else argv)
    configure_logging()

    try:
        cli = CliApp.run(
            MmwaveSiCLI,
            cli_args = args
        )
        configure_logging(cli.log_level)

        command = get_subcommand(cli)
        command.run(RunContext(
            command = [PROG_NAME, *args],
            threads = cli.threads
        ))

    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 2

    except (ValidationError, SettingsError) as e:
        logger.error(f"Invalid arguments: {e}")
        return 2

    except MmwaveSiError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code

    except FileNotFoundError as e:
        logger.error(f"File not found: {e}")
        return 2

    return 0


if __name__ == "__main__":
    sys.exit(main())
