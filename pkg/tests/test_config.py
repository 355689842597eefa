import json

import pytest

from memsim.config import load_config, make_config, parse_override
from memsim.errors import ConfigError


def paths(exc):
    return [p for p, _ in exc.value.problems]


def write(tmp_path, body, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(body))
    return str(p)


def test_defaults_build():
    cfg = make_config(user={"apps": [{"synthetic": {"compute_gap": 5}}]})
    assert cfg.model == "none" and cfg.scheduler.policy == "frfcfs"
    assert cfg.dram.timing.tRCD == 8 and len(cfg.apps) == 1
    assert cfg.apps[0].repeat


def test_unknown_keys_reported_with_path():
    with pytest.raises(ConfigError) as e:
        make_config(user={"dram": {"timing": {"tXYZ": 1}}, "bogus": 1})
    assert set(paths(e)) == {"dram.timing.tXYZ", "bogus"}


def test_value_problems_collected():
    with pytest.raises(ConfigError) as e:
        make_config(user={"apps": [{"synthetic": {}}], "dram": {"channels": 3},
                          "scheduler": {"policy": "nope"}, "model": "magic"})
    assert {"dram.channels", "scheduler.policy", "model"} <= set(paths(e))


def test_missing_trace_path(tmp_path):
    cfg = write(tmp_path, {"apps": [{"trace": "missing.trace"}]})
    with pytest.raises(ConfigError) as e:
        load_config(cfg)
    assert paths(e) == ["apps.0.trace"]


def test_relative_trace_resolved_against_config(tmp_path):
    (tmp_path / "a.trace").write_text("1 0x0 R\n")
    cfg = load_config(write(tmp_path, {"apps": [{"trace": "a.trace", "repeat": False}]}))
    assert len(cfg.apps[0].load()) == 1 and not cfg.apps[0].repeat


def test_policy_model_mismatch_and_interval():
    with pytest.raises(ConfigError) as e:
        make_config(user={"apps": [{"synthetic": {}}], "policy": {"kind": "mise_qos"},
                          "model": "asm"})
    assert "policy.kind" in paths(e)
    with pytest.raises(ConfigError) as e:
        make_config(user={"apps": [{"synthetic": {}}], "model": "mise",
                          "mise": {"interval": 15000, "epoch": 10000}})
    assert "mise.interval" in paths(e)


def test_overrides_and_seed(tmp_path):
    cfg = write(tmp_path, {"apps": [{"synthetic": {}}]})
    c = load_config(cfg, ["dram.timing.tCL=9", "scheduler.policy=bliss"], seed=7)
    assert c.dram.timing.tCL == 9 and c.scheduler.policy == "bliss" and c.seed == 7
    assert parse_override("a.b=[1,2]") == ("a.b", [1, 2])
    with pytest.raises(ConfigError):
        parse_override("novalue")
    with pytest.raises(ConfigError):
        load_config(cfg, ["dram.nothing=1"])


def test_bad_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{")
    with pytest.raises(ConfigError) as e:
        load_config(str(p))
    assert paths(e) == ["--config"]


def test_hash_depends_on_content():
    a = make_config(user={"apps": [{"synthetic": {"compute_gap": 1}}]})
    b = make_config(user={"apps": [{"synthetic": {"compute_gap": 1}}]})
    c = make_config(user={"apps": [{"synthetic": {"compute_gap": 2}}]})
    assert a.config_hash() == b.config_hash() != c.config_hash()
