import click

from leraBench.world.scene import FAMILIES
from leraBench.world.tasks import original_tasks, task_library


@click.command("list-tasks")
@click.option("--family", type=click.Choice(FAMILIES), default=None, help="Only tasks of this family.")
@click.option("--match", default=None, help="Only tasks whose id or instruction contains this text.")
@click.option("--originals", is_flag=True, help="Also list the unperturbed twins of perturbed tasks.")
def do_list_tasks(family, match, originals):
    """List the built-in tasks: id, family, instruction, plan length, goal count."""
    rows = []
    tasks = task_library() + (original_tasks() if originals else [])
    for task in tasks:
        if family and task.family != family:
            continue
        if match and match.lower() not in f"{task.id} {task.instruction}".lower():
            continue
        rows.append(task)
    if not rows:
        click.echo("no matching tasks")
        return
    click.echo("id\tfamily\tinstruction\tplan\tgoals")
    for task in rows:
        click.echo(f"{task.id}\t{task.family}\t{task.instruction}\t{len(task.gt_plan)}\t{len(task.goals)}")
