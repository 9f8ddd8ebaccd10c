"""Scenario files: schema validation, presets and round trips."""

import json
from pathlib import Path

import pytest

from asyncmdi.keyrate import evaluate
from asyncmdi.scenario import (
    ConfigError,
    RunSettings,
    load_scenario,
    parse_scenario,
    scenario_to_dict,
)

PRESETS = sorted((Path(__file__).resolve().parents[1] / "scenarios").glob("*.json"))
SOURCE = {"mu": 0.4, "nu": 0.05, "p_mu": 0.25, "p_nu": 0.25, "p_o": 0.25, "p_ohat": 0.25}


def test_presets_present():
    assert len(PRESETS) >= 7


@pytest.mark.parametrize("path", PRESETS, ids=lambda p: p.stem)
def test_preset_loads_and_round_trips(path):
    sf = load_scenario(path)
    again = parse_scenario(json.loads(json.dumps(scenario_to_dict(sf))))
    assert again == sf
    first = sf.run.distances()[0]
    assert evaluate(sf.scenario.at_distance(first)) == evaluate(again.scenario.at_distance(first))


def test_minimal_document_defaults():
    sf = parse_scenario({"source_a": SOURCE, "source_b": SOURCE})
    assert sf.scenario.N == 1e12
    assert sf.scenario.matching.mode == "short"
    assert sf.optimizer.population == 64


@pytest.mark.parametrize(
    "doc",
    [
        {"source_a": SOURCE},
        {"source_a": SOURCE, "source_b": SOURCE, "extra": 1},
        {"source_a": SOURCE, "source_b": {**SOURCE, "mu": -1}},
        {"source_a": SOURCE, "source_b": {**SOURCE, "p_mu": 0.9}},
        {"source_a": SOURCE, "source_b": SOURCE, "matching": {"mode": "sometimes"}},
        {"source_a": SOURCE, "source_b": SOURCE, "optimizer": {"mu_bounds": [0.5, 0.1]}},
        {"source_a": SOURCE, "source_b": SOURCE, "drift": {"technique": "none"}},
    ],
)
def test_invalid_documents(doc):
    with pytest.raises(ConfigError):
        parse_scenario(doc)


def test_unreadable_and_malformed(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_scenario(bad)


def test_distance_grid():
    assert RunSettings(distance_start=100, distance_stop=130, distance_step=10).distances() == [100, 110, 120, 130]
    assert RunSettings(distance_start=100, distance_stop=90).distances() == []
    with pytest.raises(ConfigError):
        RunSettings(distance_step=0).distances()


def test_asymmetry(arbitrary_scenario):
    sc = arbitrary_scenario.at_distance(300.0, asymmetry_km=20.0)
    assert (sc.channel.l_a, sc.channel.l_b) == (160.0, 140.0)
    with pytest.raises(ValueError):
        arbitrary_scenario.at_distance(10.0, asymmetry_km=20.0)
