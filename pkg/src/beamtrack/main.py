"""CLI entry point."""

import json
import logging
from typing import Any, Callable

import click

from .config import ConfigError, ExperimentConfig, ExperimentKind, parse_config
from .experiments.harness import run_experiment
from .experiments.results import emit_results, json_mirror_path

logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)

MODE_CHOICES = ["sum", "individual", "equal", "all", "none"]


def experiment_options(func: Callable) -> Callable:
    """Options shared by every experiment subcommand."""
    options = [
        click.option("--config", "-c", default=None, help="Config file path (YAML or JSON)"),
        click.option("--seed", type=int, default=None, help="Master seed (64-bit)"),
        click.option("--sensors", default=None, help="Sensor counts, e.g. 2-20 or 4,8,16"),
        click.option("--pmax", default=None, help="Comma-separated total power budgets"),
        click.option("--mode", type=click.Choice(MODE_CHOICES), default=None, help="Constraint mode"),
        click.option("--epsilon", type=float, default=None, help="Outage MSE threshold"),
        click.option("--trials", type=int, default=None, help="Monte Carlo trials"),
        click.option("--realizations", type=int, default=None, help="Network/channel realizations"),
        click.option("--steps", type=int, default=None, help="Tracking steps"),
        click.option("--out", "-o", default=None, help="CSV output path"),
        click.option("--json", "json_mirror", is_flag=True, help="Also write a JSON mirror"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def load_config(experiment: ExperimentKind | None, config: str | None, **flags: Any) -> ExperimentConfig:
    try:
        return parse_config(
            config,
            experiment=experiment,
            seed=flags["seed"],
            n_sensors=flags["sensors"],
            p_max=flags["pmax"],
            constraint_mode=flags["mode"],
            epsilon=flags["epsilon"],
            trials=flags["trials"],
            realizations=flags["realizations"],
            steps=flags["steps"],
            output_path=flags["out"],
            json_mirror=flags["json_mirror"] or None,
        )
    except (ConfigError, OSError) as e:
        raise click.ClickException(f"Invalid configuration: {e}") from e


def run_and_report(cfg: ExperimentConfig) -> None:
    rows = run_experiment(cfg)
    path = emit_results(rows, cfg.output_path, json_mirror=cfg.json_mirror, config=cfg.to_dict())
    failures = sum(row.failures for row in rows)

    click.echo(f"{cfg.experiment.value}: {len(rows)} rows written to {path}")
    if cfg.json_mirror:
        click.echo(f"  JSON mirror: {json_mirror_path(path)}")
    if failures:
        click.echo(f"  Failed realizations: {failures}")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level")
def cli(verbose: bool) -> None:
    """Beamtrack - Kalman tracking through analog sensor networks with optimized gains."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


@cli.command("mse-sweep")
@experiment_options
def mse_sweep(config: str | None, **flags: Any) -> None:
    """Mean one-step MSE versus the number of sensors."""
    run_and_report(load_config(ExperimentKind.MSE_VS_SENSORS, config, **flags))


@cli.command("outage-sweep")
@experiment_options
def outage_sweep(config: str | None, **flags: Any) -> None:
    """Equal-power outage probability versus total power, theory and simulation."""
    run_and_report(load_config(ExperimentKind.OUTAGE_VS_POWER, config, **flags))


@cli.command()
@experiment_options
def track(config: str | None, **flags: Any) -> None:
    """Per-step recursion and empirical MSE of a tracking run."""
    run_and_report(load_config(ExperimentKind.TRACKING_TRACE, config, **flags))


@cli.command("show-config")
@click.option(
    "--experiment",
    "-e",
    type=click.Choice([kind.value for kind in ExperimentKind]),
    default=None,
    help="Experiment whose defaults to resolve",
)
@experiment_options
def show_config(config: str | None, experiment: str | None, **flags: Any) -> None:
    """Print the fully resolved configuration as JSON."""
    kind = ExperimentKind(experiment) if experiment else None
    cfg = load_config(kind, config, **flags)
    click.echo(json.dumps(cfg.to_dict(), indent=2))


if __name__ == "__main__":
    cli()
