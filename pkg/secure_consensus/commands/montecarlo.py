import click

from secure_consensus.consensus_exception import ConsensusException
from secure_consensus.constants import MAX_SEED
from secure_consensus.domain.experiment import Experiment
from secure_consensus.providers.io import ClickIOProvider


@click.command()
@click.argument("path", type=click.Path())
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--workers", type=int, help="Worker processes, defaults to the number of cores")
@click.option(
    "--seed", type=click.IntRange(0, MAX_SEED), help="Override the scenario's noise seed"
)
@click.option("--horizon", type=int, help="Override the scenario's horizon K")
@click.option("--out", help="Directory to write campaign.json to")
def montecarlo(path, trials, workers, seed, horizon, out):
    """Estimate the false alarm rate of every detector over attack-free
    trials and compare it with the analytic bound."""
    try:
        Experiment(path).montecarlo(
            trials, workers=workers, seed=seed, horizon=horizon, out_dir=out
        )
    except ConsensusException as err:
        ClickIOProvider().abort_with_error(str(err), err.exit_code)
