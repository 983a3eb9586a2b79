"""Seeded synthetic corpora: determinism, labeling, validation."""

import dataclasses
import json

import pytest

from urbansense.errors import ScenarioError
from urbansense.gazetteer import load_gazetteer
from urbansense.ingestion import serialize_event_log
from urbansense.synth import (
    GroundTruth,
    ground_truth_from_dict,
    load_ground_truth,
    load_phrase_banks,
    load_scenario_spec,
    synthesize_geocorpus,
    synthesize_scenario,
    write_ground_truth,
)


class TestScenario:
    def test_same_seed_is_byte_identical(self, scenario_spec, phrase_banks, gazetteer):
        log1, truth1 = synthesize_scenario(scenario_spec, phrase_banks, gazetteer)
        log2, truth2 = synthesize_scenario(scenario_spec, phrase_banks, gazetteer)
        assert serialize_event_log(log1) == serialize_event_log(log2)
        assert truth1.to_dict() == truth2.to_dict()

    def test_different_seed_differs(self, scenario_spec, phrase_banks, gazetteer):
        other = dataclasses.replace(scenario_spec, seed=scenario_spec.seed + 1)
        log1, _ = synthesize_scenario(scenario_spec, phrase_banks, gazetteer)
        log2, _ = synthesize_scenario(other, phrase_banks, gazetteer)
        assert serialize_event_log(log1) != serialize_event_log(log2)

    def test_log_is_time_ordered_with_unique_ids(self, scenario):
        log, _ = scenario
        ts = [m.ts for m in log.messages]
        assert ts == sorted(ts)
        assert len({m.id for m in log.messages}) == len(log.messages)

    def test_truth_labels_every_message(self, scenario):
        log, truth = scenario
        assert set(truth.relevance) == {m.id for m in log.messages}

    def test_truth_incident_ids_exist(self, scenario):
        log, truth = scenario
        ids = {m.id for m in log.messages}
        assert set(truth.incidents) <= ids

    def test_scenario_is_big_enough_for_measurement(self, scenario):
        log, _ = scenario
        assert len(log.messages) >= 5000

    def test_three_gathering_injections_in_truth(self, scenario):
        _, truth = scenario
        assert len(truth.gatherings) == 3

    def test_negative_counts_rejected(self, scenario_spec):
        with pytest.raises(ScenarioError):
            dataclasses.replace(scenario_spec, personas={"peaceful": -1})

    def test_unknown_bank_rejected(self, scenario_spec, phrase_banks, gazetteer):
        banks = {k: v for k, v in phrase_banks.items() if k != "peaceful"}
        with pytest.raises(ScenarioError):
            synthesize_scenario(scenario_spec, banks, gazetteer)

    def test_truth_file_roundtrip(self, scenario, tmp_path):
        _, truth = scenario
        path = tmp_path / "truth.json"
        write_ground_truth(truth, str(path))
        loaded = load_ground_truth(str(path))
        assert loaded.to_dict() == truth.to_dict()

    def test_ground_truth_dict_roundtrip(self, scenario):
        _, truth = scenario
        again = ground_truth_from_dict(truth.to_dict())
        assert isinstance(again, GroundTruth)
        assert again.to_dict() == truth.to_dict()

    def test_spec_loader_reads_bundled_scenario(self, default_config):
        spec = load_scenario_spec(default_config.scenario_path)
        assert spec.personas
        assert spec.event.path
        assert spec.window_s > 0

    def test_phrase_banks_loader_requires_all_banks(self, default_config):
        banks = load_phrase_banks(default_config.phrases_path)
        with pytest.raises(ScenarioError):
            load_phrase_banks({k: v for k, v in banks.items() if k != "violence"})


class TestGeocorpus:
    def test_deterministic_per_seed(self, gazetteer):
        c1 = synthesize_geocorpus(gazetteer, 200, 0.15, seed=7)
        c2 = synthesize_geocorpus(gazetteer, 200, 0.15, seed=7)
        assert c1 == c2
        c3 = synthesize_geocorpus(gazetteer, 200, 0.15, seed=8)
        assert c1 != c3

    def test_size_and_bait_fraction(self, gazetteer):
        corpus = synthesize_geocorpus(gazetteer, 400, 0.15, seed=3)
        assert len(corpus) == 400
        baits = sum(1 for _, label in corpus if label is None)
        assert baits == round(400 * 0.15)

    def test_labels_point_at_real_entries(self, gazetteer):
        corpus = synthesize_geocorpus(gazetteer, 300, 0.1, seed=5)
        for _, label in corpus:
            if label is not None:
                assert label in gazetteer.entries

    def test_zero_rate_means_no_bait(self, gazetteer):
        corpus = synthesize_geocorpus(gazetteer, 100, 0.0, seed=1)
        assert all(label is not None for _, label in corpus)

    def test_argument_validation(self, gazetteer):
        with pytest.raises(ScenarioError):
            synthesize_geocorpus(gazetteer, 0, 0.1, seed=1)
        with pytest.raises(ScenarioError):
            synthesize_geocorpus(gazetteer, 10, 1.0, seed=1)
        with pytest.raises(ScenarioError):
            synthesize_geocorpus(load_gazetteer(iter(["id,canonical_name,kind,lat,lon,aliases,context_cues"])), 10, 0.1, seed=1)
