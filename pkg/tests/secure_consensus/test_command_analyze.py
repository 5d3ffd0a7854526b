import json
from unittest.mock import patch

from click.testing import CliRunner

from secure_consensus.commands.analyze import analyze
from secure_consensus.domain.analysis import AnalysisException
from tests.secure_consensus.conftest import RING_SCENARIO


@patch("secure_consensus.commands.analyze.Experiment")
def test_command_analyze_passes_options(mock_experiment):
    result = CliRunner().invoke(
        analyze, ["scenario.json", "--beta", "0.01", "--p-max", "2", "--seed", "9"]
    )

    assert result.exit_code == 0
    mock_experiment.return_value.analyze.assert_called_with(None, beta=0.01, p_max=2, seed=9)


@patch("secure_consensus.commands.analyze.Experiment")
def test_command_analyze_domain_failure_exits_1(mock_experiment):
    mock_experiment.return_value.analyze.side_effect = AnalysisException("no candidates")

    result = CliRunner().invoke(analyze, ["scenario.json"])

    assert result.exit_code == 1
    assert "no candidates" in result.output


def test_command_analyze_ring_scenario(tmp_path):
    result = CliRunner().invoke(analyze, [str(RING_SCENARIO), "--out", str(tmp_path)])

    assert result.exit_code == 0
    report = json.loads((tmp_path / "analysis.json").read_text())
    assert report["p_max"] == 3
    assert report["detectors"][0]["expected_mismatches"] == []
