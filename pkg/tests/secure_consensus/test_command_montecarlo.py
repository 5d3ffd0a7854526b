from unittest.mock import patch

from click.testing import CliRunner

from secure_consensus.commands.montecarlo import montecarlo
from tests.secure_consensus.conftest import RING_SCENARIO


@patch("secure_consensus.commands.montecarlo.Experiment")
def test_command_montecarlo_passes_options(mock_experiment):
    result = CliRunner().invoke(
        montecarlo,
        ["scenario.json", "--trials", "500", "--workers", "2", "--horizon", "100", "--out", "o"],
    )

    assert result.exit_code == 0
    mock_experiment.return_value.montecarlo.assert_called_with(
        500, workers=2, seed=None, horizon=100, out_dir="o"
    )


def test_command_montecarlo_zero_trials_fails():
    result = CliRunner().invoke(montecarlo, [str(RING_SCENARIO), "--trials", "0"])

    assert result.exit_code == 1
    assert "at least one trial" in result.output


def test_command_montecarlo_small_campaign(tmp_path):
    result = CliRunner().invoke(
        montecarlo,
        [
            str(RING_SCENARIO),
            "--trials",
            "10",
            "--workers",
            "1",
            "--horizon",
            "20",
            "--out",
            str(tmp_path),
        ],
    )

    assert result.exit_code == 0
    assert (tmp_path / "campaign.json").exists()
