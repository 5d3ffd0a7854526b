#!/usr/bin/env python

from importlib.metadata import version

import click

from secure_consensus.commands.analyze import analyze as analyze_command
from secure_consensus.commands.montecarlo import montecarlo as montecarlo_command
from secure_consensus.commands.simulate import simulate as simulate_command
from secure_consensus.commands.validate import validate as validate_command


@click.group()
@click.version_option(
    version=version("secure-consensus"),
    message=f"secure-consensus %(version)s",
)
def consensus_helper():
    pass


consensus_helper.add_command(validate_command)
consensus_helper.add_command(simulate_command)
consensus_helper.add_command(analyze_command)
consensus_helper.add_command(montecarlo_command)

if __name__ == "__main__":
    consensus_helper()
