import json

import pytest

from spikesym.config import ConfigError, ExperimentConfig, from_dict, load_config


def test_defaults_materialize():
    cfg = from_dict({})
    d = cfg.to_dict()
    assert d["chain"]["pitch"] == 120 and d["alphabet"]["W"] == 8
    assert from_dict(d) == cfg


def test_partial_override():
    cfg = from_dict({"seed": 4, "evolution": {"pop_size": 20}})
    assert cfg.seed == 4 and cfg.evolution.pop_size == 20 and cfg.evolution.generations == 50


@pytest.mark.parametrize(
    "data, path",
    [
        ({"bogus": 1}, "/bogus"),
        ({"chain": {"pich": 1}}, "/chain/pich"),
        ({"chain": {"pitch": "wide"}}, "/chain/pitch"),
        ({"chain": {"pitch": 90}}, "/chain"),
        ({"noise": {"p_delete": 2.0}}, "/noise"),
        ({"evolution": {"elite": 50}}, "/evolution/elite"),
        ({"version": 2}, "/version"),
        ({"seed": True}, "/seed"),
    ],
)
def test_errors_name_path(data, path):
    with pytest.raises(ConfigError) as exc:
        from_dict(data)
    assert path in str(exc.value)


def test_chain_violation_names_inequality():
    with pytest.raises(ConfigError, match="pitch >= D \\+ refractory \\+ eps"):
        from_dict({"chain": {"pitch": 90}})


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 9}))
    assert load_config(p).seed == 9
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)


def test_helpers():
    cfg = ExperimentConfig()
    assert cfg.chain_spec().violations() == []
    assert cfg.noise_model().silent
    assert len(cfg.make_alphabet().symbols) == cfg.alphabet.n
