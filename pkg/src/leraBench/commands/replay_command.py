import sys

import click
from rich.console import Console
from rich.text import Text

from leraBench.agent import ActionEvent, EpisodeTrace
from leraBench.tools import eprint


def load_traces(path):
    """Parse a trace log; raises ValueError naming the first bad line."""
    traces = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                traces.append(EpisodeTrace.from_json(line))
            except (ValueError, TypeError, KeyError) as ex:
                raise ValueError(f"line {number}: malformed trace ({ex})") from ex
    return traces


def _indent(label, text):
    lines = (text or "").splitlines() or [""]
    return "\n".join([f"    {label}: {lines[0]}"] + [f"       {line}" for line in lines[1:]])


@click.command("replay")
@click.argument("trace_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--episode", "index", type=int, default=0, help="0-based episode index in the trace log.")
def do_replay(trace_file, index):
    """Print the action, verdict and replanning timeline of one episode."""
    try:
        traces = load_traces(trace_file)
    except ValueError as ex:
        eprint(f"{trace_file}: {ex}")
        sys.exit(2)
    if not 0 <= index < len(traces):
        eprint(f"episode {index} out of range: the log holds {len(traces)} episode(s)")
        sys.exit(2)
    trace = traces[index]
    console = Console(markup=False, highlight=False)
    console.print(f"Episode {index}: {trace.task_id}, agent {trace.agent or '-'}, seed {trace.seed}")
    step = 0
    replans = 0
    for event in trace.events:
        if isinstance(event, ActionEvent):
            step += 1
            line = Text(f"  {step:>3}. {event.action:<30} {event.status:<22} ")
            line.append("pass" if event.passed else "FAIL", style="green" if event.passed else "red")
            if event.passed != event.ground_truth:
                line.append(" (checker wrong)", style="yellow")
            console.print(line)
            if not event.passed:
                console.print(f"       evidence: {event.evidence}")
            continue
        replans += 1
        verdict = "successful" if event.success else "unsuccessful"
        console.print(f"  replan #{replans} ({event.variant}, {event.calls_made} model calls): {verdict}")
        if event.look is not None:
            console.print(_indent("L", event.look))
        if event.explain is not None:
            console.print(_indent("E", event.explain))
        console.print(_indent("P'", event.raw))
        if event.error:
            console.print(f"    error: {event.error}")
    if replans == 0:
        console.print("  no replanning events")
    outcome = "success" if trace.success else "failure"
    console.print(f"Result: {outcome}, {trace.satisfied}/{trace.total} goals"
                  + (", budget exhausted" if trace.budget_exhausted else ""))
    if trace.error:
        console.print(f"Error: {trace.error}")
