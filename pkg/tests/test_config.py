import json

import pytest

from fslr.config import (RunConfig, load_config, merge_overrides, parse_size,
                         resolve_size)
from fslr.counts import build_counts
from fslr.corpus import LabeledWindow
from fslr.errors import ConfigError


def test_defaults_and_echo():
    cfg = RunConfig()
    assert (cfg.N, cfg.entity_type, cfg.policy, cfg.cutoff) == (10, "PER", "CET", 8000)
    echo = cfg.echo()
    assert "\n" not in echo and json.loads(echo) == cfg.to_dict()
    assert "threads" not in json.loads(echo)
    assert RunConfig.from_dict(json.loads(echo)) == cfg


@pytest.mark.parametrize("bad", [
    {"N": 0}, {"N": "3"}, {"entity_type": "per"}, {"policy": "Info"},
    {"denominator": "both"}, {"seed": -1}, {"lam": -1e-3},
    {"lambdas": []}, {"lambdas": [1e-3, 1e-4]}, {"subset_sizes": [5, 1]},
    {"cutoff": 0}, {"max_rank": 0}, {"runs": -1}, {"unseen": "zero"},
    {"paths": {"bogus": "x"}}, {"synth": {"extra": 1}}, {"size": "150%"},
    {"size": -3}, {"size": "many"}, {"size": True}, {"nonsense": 1},
])
def test_invalid_values(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_sizes():
    assert parse_size(5) == ("abs", 5) and parse_size("7") == ("abs", 7)
    assert parse_size("10%") == ("frac", 0.1)
    m = build_counts([LabeledWindow((f"a{i}", f"b{i % 3}"), i % 2 == 0) for i in range(20)])
    assert resolve_size("100%", m) == 3 and resolve_size("50%", m) == 1
    assert resolve_size(12, m) == 12
    with pytest.raises(ConfigError):
        resolve_size(None, m)
    assert RunConfig(size="25 %".replace(" ", "")).size == "25%"
    assert RunConfig(size="40").size == 40


def test_load_and_merge(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"N": 4, "policy": "GSS", "paths": {"model": "m.tsv"}}))
    cfg = load_config(p)
    assert cfg.N == 4 and cfg.path("model") == "m.tsv"
    merged = merge_overrides(cfg, {"N": 6, "policy": None}, {"model": None, "mask": "k"})
    assert (merged.N, merged.policy) == (6, "GSS")
    assert merged.paths == {"model": "m.tsv", "mask": "k"}
    with pytest.raises(ConfigError):
        merge_overrides(cfg, {"N": -2}, {})
    with pytest.raises(ConfigError):
        cfg.path("mask")
    assert cfg.path("mask", required=False) is None
    with pytest.raises(ConfigError):
        cfg.input_path("model")
    for text in ("{", "[1]"):
        p.write_text(text)
        with pytest.raises(ConfigError):
            load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_splits():
    assert RunConfig().splits() == {"train": 10000, "valid": 1000, "test": 1000}
    assert RunConfig(synth={"splits": {"train": 5}}).splits()["train"] == 5
    with pytest.raises(ConfigError):
        RunConfig(synth={"splits": {"train": -5}}).splits()


def test_shipped_standard_config():
    from pathlib import Path
    cfg = load_config(Path(__file__).parent.parent / "configs" / "standard.json")
    assert cfg.seed == 7 and cfg.size == "10%"
    assert cfg.synthetic_config().triggers[0].token == "mr"
