#!/usr/bin/env python
"""
leraBench runs replanning experiments: tabletop and household tasks, a
planner/executor/checker agent and Look-Explain-Replan replanners on top of
scripted or real model backends.
"""
__title__ = 'leraBench'
__license__ = 'MIT'

import importlib
import pkgutil

import click

from leraBench import __version__
from leraBench.config import Config
from leraBench.errors import ConfigurationError
from leraBench.tools import eprint, setVerbosity


@click.group()
@click.version_option(__version__)
@click.option("--verbose", is_flag=True, default=None, help="Log progress at INFO level.")
@click.option("--debug", is_flag=True, default=None, help="Log at DEBUG level.")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Override a program setting from config.toml for this run.")
@click.pass_context
def cli(ctx, verbose, debug, overrides):
    try:
        config = ctx.ensure_object(Config)
        for item in overrides:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
            config.updateParameter(key.strip(), value.strip())
    except ConfigurationError as ex:
        eprint(f"Error: {ex}")
        ctx.exit(2)
    if verbose is not None:
        config.progConfig["verbose"] = verbose
    if debug is not None:
        config.progConfig["debug"] = debug
    setVerbosity(config.progConfig["verbose"], config.progConfig["debug"])


def _register_commands(group):
    """Add every do_<name> command found in leraBench.commands.<name>_command."""
    command_package = 'leraBench.commands'
    command_modules = pkgutil.iter_modules(importlib.import_module(command_package).__path__)
    for module_info in sorted(command_modules, key=lambda m: m.name):
        if not module_info.name.endswith('_command'):
            continue
        command_name = module_info.name.rsplit('_', 1)[0]
        try:
            module = importlib.import_module(f".{module_info.name}", command_package)
        except ImportError as e:
            eprint(f"Failed to import command '{command_name}': {str(e)}")
            continue
        do_function = getattr(module, f"do_{command_name}", None)
        if isinstance(do_function, click.Command):
            group.add_command(do_function)


_register_commands(cli)

if __name__ == '__main__':
    cli()
