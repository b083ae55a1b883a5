"""Subcommands; main registers every do_<name> found in a <name>_command module."""
import click

from leraBench.config import Config

pass_config = click.make_pass_decorator(Config, ensure=True)
