import asyncio
import logging
import sys

import click

from app.actions import action_handlers, describe_actions
from app.services.action_runner import execute_action, execute_certification
from app.services.errors import ConfigurationError
from app.services.utils import dumps, load_scenario_file

logger = logging.getLogger(__name__)


def _load(config_path: str) -> dict:
    try:
        return load_scenario_file(config_path)
    except ConfigurationError as e:
        logger.error(str(e))
        click.echo(dumps({"exit_code": e.exit_code, "detail": {"error": str(e)}}, indent=2))
        sys.exit(e.exit_code)


def _overrides(output_dir, seed) -> dict:
    overrides = {}
    if output_dir is not None:
        overrides["output_dir"] = output_dir
    if seed is not None:
        overrides["seed"] = seed
    return overrides


@click.group()
def cli():
    """Feedback error correction for continuously detected errors: scenario runner."""


@cli.command("run")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--output-dir", default=None, help="Base directory for run outputs (overrides the config).")
@click.option("--seed", type=int, default=None, help="Base seed for trajectory ensembles (overrides the config).")
def run(config_path, output_dir, seed):
    """Run the scenario described by CONFIG_PATH and write its result files."""
    config_data = _load(config_path)
    result = asyncio.run(execute_action(config_data, config_overrides=_overrides(output_dir, seed)))
    click.echo(dumps(result, indent=2))
    sys.exit(result["exit_code"])


@cli.command("list-scenarios")
def list_scenarios():
    """Print the built-in scenarios, one per line."""
    for name, description in describe_actions(action_handlers).items():
        click.echo(f"{name}\t{description}")


@cli.command("certify")
@click.argument("config_path", type=click.Path(dir_okay=False))
def certify(config_path):
    """Synthesize the scenario's schemes and print their certificates; no dynamics are run."""
    config_data = _load(config_path)
    result = asyncio.run(execute_certification(config_data))
    click.echo(dumps(result, indent=2))
    sys.exit(result["exit_code"])


if __name__ == "__main__":
    cli()
