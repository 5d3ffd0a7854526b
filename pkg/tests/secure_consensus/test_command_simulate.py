from unittest.mock import patch

import pytest
from click.testing import CliRunner

from secure_consensus.commands.simulate import simulate
from secure_consensus.domain.sim import SimulationException
from tests.secure_consensus.conftest import ALARM_SCENARIO
from tests.secure_consensus.conftest import RING_SCENARIO


@pytest.mark.parametrize(
    "cli_args, called_with",
    [
        ([], ("out", {"seed": None, "zero_noise": None, "horizon": None})),
        (
            ["--out", "results", "--seed", "4", "--horizon", "50", "--zero-noise"],
            ("results", {"seed": 4, "zero_noise": True, "horizon": 50}),
        ),
    ],
)
@patch("secure_consensus.commands.simulate.Experiment")
def test_command_simulate_passes_options(mock_experiment, cli_args, called_with):
    result = CliRunner().invoke(simulate, ["scenario.json"] + cli_args)

    out, kwargs = called_with
    assert result.exit_code == 0
    mock_experiment.assert_called_with("scenario.json")
    mock_experiment.return_value.simulate.assert_called_with(out, **kwargs)


@patch("secure_consensus.commands.simulate.Experiment")
def test_command_simulate_numerical_failure_exits_3(mock_experiment):
    mock_experiment.return_value.simulate.side_effect = SimulationException("diverged")

    result = CliRunner().invoke(simulate, ["scenario.json"])

    assert result.exit_code == 3


def test_command_simulate_writes_outputs(tmp_path):
    result = CliRunner().invoke(simulate, [str(RING_SCENARIO), "--out", str(tmp_path)])

    assert result.exit_code == 0
    assert (tmp_path / "trace.csv").exists()
    assert (tmp_path / "detection-agent-1.json").exists()


def test_command_simulate_alarm_demo(tmp_path):
    result = CliRunner().invoke(simulate, [str(ALARM_SCENARIO), "--out", str(tmp_path)])

    assert result.exit_code == 0
    assert '"first_alarm": null' not in (tmp_path / "detection-agent-1.json").read_text()


@pytest.mark.parametrize("seed", ["-1", str(2**64)])
@patch("secure_consensus.commands.simulate.Experiment")
def test_command_simulate_rejects_seeds_outside_the_seed_range(mock_experiment, seed):
    result = CliRunner().invoke(simulate, ["scenario.json", "--seed", seed])

    assert result.exit_code == 2
    mock_experiment.assert_not_called()
