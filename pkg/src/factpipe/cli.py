"""Command line front end for the dataset pipeline.

Exit codes: 0 on success, 1 when a stage fails, 2 for configuration
problems (including missing input checkpoints).
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import pipeline
from .pipeline import ConfigError, ProviderSettings, RunConfig, StageFailure, config_from_yaml

logger = logging.getLogger(__name__)


def _build_config(obj: dict) -> RunConfig:
    overrides = {k: v for k, v in obj.items() if k != "config_path" and v not in (None, (), [])}
    config_path = obj.get("config_path")
    provider_kind = overrides.pop("provider_kind", None)
    model_id = overrides.pop("model_id", None)
    cassette_dir = overrides.pop("cassette_dir", None)
    record_cassettes = overrides.pop("record_cassettes", False)
    if config_path:
        config = config_from_yaml(config_path, **overrides)
    else:
        workdir = overrides.pop("workdir", None)
        if workdir is None:
            raise ConfigError("either --config or --workdir is required")
        config = RunConfig(workdir=Path(workdir), **overrides)
    provider = config.provider
    if provider_kind or model_id or cassette_dir or record_cassettes:
        provider = ProviderSettings(
            kind=provider_kind or provider.kind,
            model_id=model_id or provider.model_id,
            base_url=provider.base_url,
            api_key_env=provider.api_key_env,
            cassette_dir=cassette_dir or provider.cassette_dir,
            record=record_cassettes or provider.record,
            max_in_flight=provider.max_in_flight,
        )
        config.provider = provider
        # re-check cross-field constraints the override may have broken
        if config.offline and provider.kind == "remote":
            raise ConfigError("offline mode cannot use a remote provider")
    return config


def _execute(obj: dict, stages: list[str]) -> None:
    try:
        config = _build_config(obj)
        report = pipeline.run(config, stages)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except StageFailure as exc:
        click.echo(f"stage failure: {exc}", err=True)
        sys.exit(1)
    for result in report.results:
        click.echo(result.describe())
    sys.exit(0)


def _common_options(fn):
    fn = click.option("--workdir", type=click.Path(path_type=Path), default=None, help="Pipeline working directory.")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), default=None, help="YAML run configuration.")(fn)
    fn = click.option("--language", "languages", multiple=True, help="Dataset language (repeatable).")(fn)
    fn = click.option("--offline", is_flag=True, default=None, help="Serve API pages, articles and frames from fixtures.")(fn)
    fn = click.option("--fixtures", "fixture_root", type=click.Path(path_type=Path), default=None, help="Fixture root for offline runs.")(fn)
    fn = click.option("--provider", "provider_kind", type=click.Choice(["mock", "remote", "replay"]), default=None)(fn)
    fn = click.option("--model-id", default=None, help="Generation model identifier.")(fn)
    fn = click.option("--cassettes", "cassette_dir", type=click.Path(path_type=Path), default=None, help="Cassette directory for record or replay.")(fn)
    fn = click.option("--record-cassettes", is_flag=True, default=None, help="Record provider responses into the cassette directory.")(fn)
    return fn


def _collect(kwargs: dict) -> dict:
    obj = dict(kwargs)
    if obj.get("cassette_dir") is not None:
        obj["cassette_dir"] = str(obj["cassette_dir"])
    return obj


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose: bool) -> None:
    """Build multilingual multimodal fact-checking datasets in stages."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@_common_options
@click.option("--publisher-site", "publisher_sites", multiple=True, help="Restrict harvest to a publisher site (repeatable).")
@click.option("--page-size", type=click.IntRange(1, 100), default=None)
@click.option("--max-age-days", type=click.IntRange(min=1), default=None)
def harvest(**kwargs) -> None:
    """Fetch claim reviews from the fact check API."""
    _execute(_collect(kwargs), ["harvest"])


@cli.command()
@_common_options
def scrape(**kwargs) -> None:
    """Download and segment the debunking articles."""
    _execute(_collect(kwargs), ["scrape"])


@cli.command()
@_common_options
def normalize(**kwargs) -> None:
    """Map publisher ratings onto the shared verdict labels."""
    _execute(_collect(kwargs), ["normalize"])


@cli.command()
@_common_options
def categorize(**kwargs) -> None:
    """Classify each claim's content type."""
    _execute(_collect(kwargs), ["categorize"])


@cli.command("extract-evidence")
@_common_options
def extract_evidence(**kwargs) -> None:
    """Extract category-typed evidence from the scraped articles."""
    _execute(_collect(kwargs), ["extract-evidence"])


@cli.command()
@_common_options
@click.option("--interval", "keyframe_interval_s", type=float, default=None, help="Seconds between sampled frames.")
@click.option("--hamming-threshold", type=int, default=None, help="Near-duplicate cutoff on perceptual hashes.")
def keyframes(**kwargs) -> None:
    """Sample and dedup video keyframes."""
    _execute(_collect(kwargs), ["keyframes"])


@cli.command()
@_common_options
@click.option("--mode", "justify_modes", multiple=True, type=click.Choice(["TextOnly", "Multimodal"]), help="Justification mode (repeatable).")
@click.option("--ablate-multimedia", is_flag=True, default=None, help="Drop multimedia evidence before text-only generation.")
def justify(**kwargs) -> None:
    """Generate verdict-aligned justifications."""
    _execute(_collect(kwargs), ["justify"])


@cli.command()
@_common_options
@click.option("--judge-model-id", default=None)
def evaluate(**kwargs) -> None:
    """Score evidence and justifications with the rubric judge."""
    _execute(_collect(kwargs), ["evaluate"])


@cli.command()
@_common_options
def report(**kwargs) -> None:
    """Write distribution tables, plots and score summaries."""
    _execute(_collect(kwargs), ["report"])


@cli.command("run-all")
@_common_options
@click.option("--publisher-site", "publisher_sites", multiple=True)
@click.option("--page-size", type=click.IntRange(1, 100), default=None)
@click.option("--max-age-days", type=click.IntRange(min=1), default=None)
@click.option("--mode", "justify_modes", multiple=True, type=click.Choice(["TextOnly", "Multimodal"]))
@click.option("--ablate-multimedia", is_flag=True, default=None)
@click.option("--judge-model-id", default=None)
def run_all(**kwargs) -> None:
    """Run every stage in order."""
    _execute(_collect(kwargs), list(pipeline.STAGES))


def main() -> None:
    cli(prog_name="factpipe")


if __name__ == "__main__":
    main()
