import sys

import click

from leraBench.tools import eprint, sanitizeName
from leraBench.world.actions import perturb
from leraBench.world.render import FORMATS, observe
from leraBench.world.tasks import get_task

EXTENSIONS = {"snapshot": "toml", "text": "txt", "raster": "ppm"}


@click.command("render")
@click.argument("task_id")
@click.option("--seed", type=int, default=0, help="Episode seed; picks the tabletop layout.")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="snapshot")
@click.option("--output", "-o", default=None, help="Target file, '-' for stdout (default: <task>-<seed>.<ext>).")
def do_render(task_id, seed, fmt, output):
    """Write the starting observation of a task, perturbations applied."""
    try:
        task = get_task(task_id)
    except KeyError:
        eprint(f"unknown task {task_id}")
        sys.exit(2)
    data = observe(perturb(task.sceneFor(seed), task.perturbations), fmt)
    if isinstance(data, str):
        data = data.encode("utf-8")
    if output == "-":
        click.get_binary_stream("stdout").write(data)
        return
    output = output or f"{sanitizeName(task_id)}-{seed}.{EXTENSIONS[fmt]}"
    with open(output, "wb") as f:
        f.write(data)
    eprint(f"wrote {output}")
