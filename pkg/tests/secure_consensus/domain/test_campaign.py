from dataclasses import replace
from unittest.mock import Mock

import pytest

from secure_consensus.domain.campaign import Campaign
from secure_consensus.domain.campaign import CampaignException
from secure_consensus.domain.campaign import CampaignResult
from secure_consensus.domain.sim import DetectorConfig


@pytest.fixture
def short_scenario(ring_scenario):
    return replace(ring_scenario, horizon=30)


class TestCampaignResult:
    def test_rates(self):
        result = CampaignResult(agent=1, trials=200, alarms=3, alpha_bound=0.01, seed=0)

        assert result.empirical_rate == 0.015
        assert result.tolerance == pytest.approx(3 * (0.01 / 200) ** 0.5)
        assert result.within_bound
        assert result.to_dict()["empirical_rate"] == 0.015

    def test_more_alarms_than_trials_is_invalid(self):
        with pytest.raises(CampaignException):
            CampaignResult(agent=1, trials=2, alarms=3, alpha_bound=0.01, seed=0)


class TestCampaign:
    def test_zero_trials_raise(self, short_scenario):
        with pytest.raises(CampaignException):
            Campaign(short_scenario, workers=1, io=Mock()).run(0)

    def test_needs_a_detector(self, short_scenario):
        with pytest.raises(CampaignException):
            Campaign(replace(short_scenario, detectors=()), workers=1, io=Mock())

    def test_attack_is_silenced(self, short_scenario):
        campaign = Campaign(short_scenario, workers=1, io=Mock())

        assert campaign.scenario.attack.attackers == (3,)
        assert campaign.scenario.attack.total().tolist() == [0.0]

    def test_unreachable_threshold_never_alarms(self, short_scenario):
        scenario = replace(short_scenario, detectors=(DetectorConfig(1, 1e9, 0.7),))

        [result] = Campaign(scenario, workers=1, io=Mock()).run(50)

        assert result.alarms == 0
        assert result.empirical_rate == 0.0

    def test_counts_do_not_depend_on_the_number_of_workers(self, short_scenario):
        scenario = replace(short_scenario, detectors=(DetectorConfig(1, 0.5, 0.7),))

        inline = Campaign(scenario, workers=1, io=Mock()).run(40)
        parallel = Campaign(scenario, workers=3, io=Mock()).run(40)

        assert inline == parallel
        assert inline[0].alarms > 0

    def test_chunks_cover_every_trial_once(self, short_scenario):
        campaign = Campaign(short_scenario, workers=3, io=Mock())

        trials = [t for _, _, chunk in campaign.chunks(10) for t in chunk]

        assert trials == list(range(10))

    @pytest.mark.slow
    def test_empirical_false_alarm_rate_respects_the_bound(self, ring_scenario):
        scenario = replace(ring_scenario, horizon=100)

        [result] = Campaign(scenario, workers=4, io=Mock()).run(10000)

        assert result.alpha_bound <= 0.01
        assert result.empirical_rate <= result.alpha_bound + 3 * (result.alpha_bound / 10000) ** 0.5
