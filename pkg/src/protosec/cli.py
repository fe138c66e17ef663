"""Command line front end.

Exit codes: 0 success (increasing, no counterexample, no attack), 1 error,
2 not proved increasing or counterexample found, 3 attack trace found.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path

import click
import structlog
from pydantic import BaseModel, Field

from . import report
from .analyzer import Metric, Overall, analyze, compare_metrics
from .config import Settings
from .dsl import parse_file
from .errors import ConfigError, ProtosecError
from .log import configure_logging
from .oracle import bounded_attack_search, probe_full_invariance
from .roles import encryption_patterns, extract_generalized_roles, pick_secret

log = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_PROVED = 2
EXIT_ATTACK = 3


class Command(str, Enum):
    ANALYZE = "analyze"
    ROLES = "roles"
    PATTERNS = "patterns"
    COMPARE = "compare"
    PROBE = "oracle probe"
    ATTACK = "oracle attack"


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"


class CliConfig(BaseModel):
    input: Path
    command: Command
    metric: Metric = Metric.WITNESS
    output_format: OutputFormat = OutputFormat.TEXT
    roles_file: Path | None = None
    secret: str | None = None
    settings: Settings = Field(default_factory=Settings)


def _execute(config: CliConfig) -> int:
    ctx, spec = parse_file(config.input)
    as_json = config.output_format is OutputFormat.JSON
    roles = None
    if config.roles_file is not None:
        roles = report.load_roles(config.roles_file, ctx, spec)

    if config.command is Command.ANALYZE:
        result = analyze(spec, config.metric, ctx, roles)
        click.echo(report.report_doc(result).dump() if as_json else report.render_report(result), nl=as_json)
        return EXIT_OK if result.overall is Overall.INCREASING else EXIT_NOT_PROVED

    if config.command is Command.COMPARE:
        results = compare_metrics(spec, ctx)
        click.echo(report.compare_doc(results).dump() if as_json else report.render_compare(results), nl=as_json)
        return EXIT_OK

    roles = roles if roles is not None else extract_generalized_roles(spec, ctx)

    if config.command is Command.ROLES:
        click.echo(report.roles_doc(roles).dump() if as_json else report.render_roles(roles), nl=as_json)
        return EXIT_OK

    if config.command is Command.PATTERNS:
        patterns = encryption_patterns(roles)
        click.echo(report.patterns_doc(patterns).dump() if as_json else report.render_patterns(patterns), nl=as_json)
        return EXIT_OK

    settings = config.settings
    if config.command is Command.PROBE:
        found = probe_full_invariance(
            config.metric,
            ctx,
            settings.trials,
            depth=settings.depth,
            max_messages=settings.max_messages,
            max_candidates=settings.max_candidates,
            seed=settings.seed,
        )
        if as_json:
            click.echo(report.probe_doc(config.metric.value, settings.trials, settings.seed, found).dump())
        else:
            click.echo(report.render_probe(found, settings.trials), nl=False)
        return EXIT_NOT_PROVED if found else EXIT_OK

    secret = pick_secret(spec, config.secret)
    trace = bounded_attack_search(spec, ctx, settings.sessions, secret, node_cap=settings.node_cap, roles=roles)
    if as_json:
        click.echo(report.trace_doc(settings.sessions, secret, trace).dump())
    else:
        click.echo(report.render_trace(trace, secret, settings.sessions), nl=False)
    return EXIT_OK if trace is None else EXIT_ATTACK


def run(config: CliConfig) -> int:
    """Run one command; errors become a diagnostic on stderr and exit code 1."""
    log.debug("run", command=config.command.value, input=str(config.input))
    try:
        return _execute(config)
    except ProtosecError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    except OSError as exc:
        click.echo(f"error: {exc.strerror}: {exc.filename}", err=True)
        return EXIT_ERROR


def _settings(ctx: click.Context, **overrides: int | None) -> Settings:
    try:
        return Settings.from_env(**overrides)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_ERROR)


input_argument = click.argument("input", type=click.Path(dir_okay=False, path_type=Path))
format_option = click.option(
    "--format", "output_format", type=click.Choice([f.value for f in OutputFormat]), default="text", show_default=True
)
metric_option = click.option(
    "--metric", type=click.Choice([m.value for m in Metric]), default="witness", show_default=True
)
roles_option = click.option(
    "--roles", "roles_file", type=click.Path(dir_okay=False, path_type=Path), help="Roles JSON replacing derivation."
)


@click.group()
@click.option("--log-level", default="WARNING", show_default=True)
@click.option("--log-json", is_flag=True, help="Emit logs as JSON lines on stderr.")
def main(log_level: str, log_json: bool) -> None:
    """Static secrecy analysis of cryptographic protocols."""
    configure_logging(log_level, json=log_json)


@main.command("analyze")
@input_argument
@metric_option
@format_option
@roles_option
@click.pass_context
def analyze_command(ctx: click.Context, input: Path, metric: str, output_format: str, roles_file: Path | None) -> None:
    """Check that every rule is increasing under METRIC."""
    config = CliConfig(
        input=input, command=Command.ANALYZE, metric=metric, output_format=output_format, roles_file=roles_file
    )
    ctx.exit(run(config))


@main.command("roles")
@input_argument
@format_option
@click.pass_context
def roles_command(ctx: click.Context, input: Path, output_format: str) -> None:
    """Print the generalized roles."""
    ctx.exit(run(CliConfig(input=input, command=Command.ROLES, output_format=output_format)))


@main.command("patterns")
@input_argument
@format_option
@roles_option
@click.pass_context
def patterns_command(ctx: click.Context, input: Path, output_format: str, roles_file: Path | None) -> None:
    """Print the numbered encryption patterns."""
    ctx.exit(run(CliConfig(input=input, command=Command.PATTERNS, output_format=output_format, roles_file=roles_file)))


@main.command("compare")
@input_argument
@format_option
@click.pass_context
def compare_command(ctx: click.Context, input: Path, output_format: str) -> None:
    """Analyze under every metric."""
    ctx.exit(run(CliConfig(input=input, command=Command.COMPARE, output_format=output_format)))


@main.group("oracle")
def oracle_group() -> None:
    """Dolev-Yao cross-checks."""


@oracle_group.command("probe")
@input_argument
@metric_option
@format_option
@click.option("--trials", type=int)
@click.option("--depth", type=int)
@click.option("--seed", type=int)
@click.pass_context
def probe_command(ctx, input, metric, output_format, trials, depth, seed) -> None:
    """Look for counterexamples to full invariance of METRIC."""
    config = CliConfig(
        input=input,
        command=Command.PROBE,
        metric=metric,
        output_format=output_format,
        settings=_settings(ctx, trials=trials, depth=depth, seed=seed),
    )
    ctx.exit(run(config))


@oracle_group.command("attack")
@input_argument
@format_option
@roles_option
@click.option("--sessions", type=int)
@click.option("--secret", help="Fresh atom to protect; defaults to the first declared secret.")
@click.option("--node-cap", type=int)
@click.pass_context
def attack_command(ctx, input, output_format, roles_file, sessions, secret, node_cap) -> None:
    """Search bounded sessions for a trace leaking SECRET."""
    config = CliConfig(
        input=input,
        command=Command.ATTACK,
        output_format=output_format,
        roles_file=roles_file,
        secret=secret,
        settings=_settings(ctx, sessions=sessions, node_cap=node_cap),
    )
    ctx.exit(run(config))


if __name__ == "__main__":
    main()
