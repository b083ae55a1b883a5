import sys

import click
from rich.console import Console
from rich.progress import Progress

from leraBench.commands import pass_config
from leraBench.config import SuiteConfig
from leraBench.errors import ConfigurationError
from leraBench.metrics import GROUP_KEYS, REPORT_FORMATS, emit_report
from leraBench.suite import run_suite
from leraBench.tools import eprint


@click.command("run")
@click.option("--config", "configPath", required=True, type=click.Path(dir_okay=False), help="Suite TOML file.")
@click.option("--out", default=None, help="Output directory (default: suite.out).")
@click.option("--jobs", type=int, default=None, help="Episodes run in parallel.")
@click.option("--format", "fmt", type=click.Choice(REPORT_FORMATS), default="markdown",
              help="Report printed on stdout; every format is written to the output directory.")
@click.option("--group", type=click.Choice(GROUP_KEYS), default=None, help="Break the printed report down by task or family.")
@pass_config
def do_run(config, configPath, out, jobs, fmt, group):
    """Run the episode matrix of a suite and write traces and reports."""
    try:
        suite = SuiteConfig.load(configPath, config.progConfig)
    except ConfigurationError as ex:
        eprint(f"{configPath}: {ex}")
        sys.exit(2)
    jobs = jobs or config.progConfig.get("jobs") or None
    total = len(suite.tasks) * len(suite.seeds) * len(suite.agents)
    crashed = []

    def onTrace(trace):
        progress.advance(bar)
        if trace.error:
            crashed.append(trace)

    try:
        with Progress(console=Console(stderr=True), transient=True) as progress:
            bar = progress.add_task(suite.id, total=total)
            result = run_suite(suite, out=out, jobs=jobs, traceFile=config.progConfig["traceFile"], onTrace=onTrace)
    except ConfigurationError as ex:
        eprint(f"backend: {ex}")
        sys.exit(3)
    if crashed:
        eprint(f"{len(crashed)} episode(s) crashed; see the error field in the trace log")
    click.echo(emit_report(result, fmt, group), nl=False)
