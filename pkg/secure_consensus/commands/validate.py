import click

from secure_consensus.consensus_exception import ConsensusException
from secure_consensus.domain.experiment import Experiment
from secure_consensus.providers.io import ClickIOProvider


@click.command()
@click.argument("path", type=click.Path())
def validate(path):
    """
    Check a scenario file: schema, graph connectivity, weight matrix
    assumptions (A1)/(A2) and detector parameters.

    Exits 2 when the file cannot be parsed and 1 when validation fails.
    """
    try:
        Experiment(path).validate()
    except ConsensusException as err:
        ClickIOProvider().abort_with_error(str(err), err.exit_code)
