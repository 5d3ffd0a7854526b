import click

from secure_consensus.consensus_exception import ConsensusException
from secure_consensus.constants import MAX_SEED
from secure_consensus.domain.experiment import Experiment
from secure_consensus.providers.io import ClickIOProvider


@click.command()
@click.argument("path", type=click.Path())
@click.option("--out", default="out", show_default=True, help="Directory for CSV and JSON output")
@click.option(
    "--seed", type=click.IntRange(0, MAX_SEED), help="Override the scenario's noise seed"
)
@click.option("--horizon", type=int, help="Override the scenario's horizon K")
@click.option("--zero-noise", is_flag=True, help="Run with variance-0 privacy noise")
def simulate(path, out, seed, horizon, zero_noise):
    """Run the scenario once and write the trace and detection reports to
    --out."""
    try:
        Experiment(path).simulate(out, seed=seed, zero_noise=zero_noise or None, horizon=horizon)
    except ConsensusException as err:
        ClickIOProvider().abort_with_error(str(err), err.exit_code)
