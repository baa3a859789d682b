import json

import numpy as np
import pytest

from roughflow.config import RunConfig
from roughflow.errors import InputError
from roughflow.io import path_from_json, path_to_json, read_csv_path, write_csv_path
from roughflow.parallel import pmap, thread_cap
from roughflow.roughpath import canonical_lift


def test_defaults_fill_q():
    cfg = RunConfig()
    assert cfg.q == cfg.p + 0.5
    assert cfg.schedule == (0.1, 0.05, 0.025, 0.0125)


@pytest.mark.parametrize(
    "kwargs",
    [{"p": 2.0}, {"p": 2.5, "q": 2.4}, {"q": 4.5}, {"depth": 0}, {"chen_tol": 0.0},
     {"schedule": [0.1, 0.2]}, {"schedule": []}, {"r": -1.0}],
)
def test_invalid_configs(kwargs):
    with pytest.raises(InputError):
        RunConfig(**kwargs)


def test_file_then_flags(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"p": 2.2, "q": 3.9, "seed": 4, "schedule": [0.5, 0.25]}))
    cfg = RunConfig.from_sources(path, {"q": 3.0, "seed": None})
    assert (cfg.p, cfg.q, cfg.seed, cfg.schedule) == (2.2, 3.0, 4, (0.5, 0.25))
    assert RunConfig.from_sources(None, cfg.to_dict()) == cfg


def test_bad_config_file(tmp_path):
    (tmp_path / "a.json").write_text("[1, 2]")
    with pytest.raises(InputError):
        RunConfig.from_file(tmp_path / "a.json")
    (tmp_path / "b.json").write_text("{not json")
    with pytest.raises(InputError):
        RunConfig.from_file(tmp_path / "b.json")
    with pytest.raises(InputError):
        RunConfig.from_file(tmp_path / "missing.json")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("x,t\n0,0\n", ":1:"),
        ("t,x1\n0,0\n0,1\n", "increasing"),
        ("t,x1\n0,0\n1,2,3\n", ":3:"),
        ("t,x1\n0,0\n1,nan\n", "non-finite"),
        ("t,x1\n0,0\n", "two data rows"),
    ],
)
def test_csv_errors(tmp_path, text, fragment):
    path = tmp_path / "p.csv"
    path.write_text(text)
    with pytest.raises(InputError, match=fragment):
        read_csv_path(path)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    t = np.cumsum(rng.uniform(0.1, 1.0, 7))
    x = rng.normal(size=(7, 3))
    write_csv_path(tmp_path / "p.csv", t, x)
    t2, x2 = read_csv_path(tmp_path / "p.csv")
    assert np.array_equal(t, t2) and np.array_equal(x, x2)


def test_json_schema_and_round_trip():
    X = canonical_lift([0.0, 0.1, 0.3], [[0.0, 1.0], [1.0 / 3.0, 2.0], [0.5, -1.0]])
    obj = json.loads(json.dumps(path_to_json(X)))
    assert obj["dim"] == 2 and len(obj["level2"][1]) == 4
    assert path_from_json(obj).equals(X)
    obj["level1"] = obj["level1"][:2]
    with pytest.raises(InputError):
        path_from_json(obj)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("ROUGHFLOW_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("ROUGHFLOW_THREADS", "0")
    with pytest.raises(InputError):
        thread_cap()
    monkeypatch.setenv("ROUGHFLOW_THREADS", "many")
    with pytest.raises(InputError):
        thread_cap()


def test_pmap_keeps_order(monkeypatch):
    monkeypatch.setenv("ROUGHFLOW_THREADS", "4")
    assert pmap(lambda v: v * v, range(50)) == [v * v for v in range(50)]
    monkeypatch.setenv("ROUGHFLOW_THREADS", "1")
    assert pmap(lambda v: -v, [1, 2]) == [-1, -2]
