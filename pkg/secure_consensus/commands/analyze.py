import click

from secure_consensus.consensus_exception import ConsensusException
from secure_consensus.constants import MAX_SEED
from secure_consensus.domain.experiment import Experiment
from secure_consensus.providers.io import ClickIOProvider


@click.command()
@click.argument("path", type=click.Path())
@click.option("--out", help="Directory to write analysis.json to")
@click.option("--beta", type=float, help="Confidence parameter of the error intervals")
@click.option("--p-max", type=int, help="Largest attacker set considered for the union interval")
@click.option(
    "--seed", type=click.IntRange(0, MAX_SEED), help="Override the scenario's noise seed"
)
def analyze(path, out, beta, p_max, seed):
    """
    Report privacy verdicts, detectability, the false alarm bound, convergence
    rates and consensus error intervals for a scenario.

    Interval half-widths are compared with the scenario's `expected` section
    when present.
    """
    try:
        Experiment(path).analyze(out, beta=beta, p_max=p_max, seed=seed)
    except ConsensusException as err:
        ClickIOProvider().abort_with_error(str(err), err.exit_code)
