import json

import numpy as np
import pytest

from esmda import ConfigError, LinearModel, load_config, parse_config, save_config
from esmda.ensemble import write_csv


def minimal_doc():
    return {
        "seed": 3,
        "n_e": 20,
        "schedule": {"type": "equal", "n_a": 2},
        "prior": {"mean": [0.0, 0.0], "std": [1.0, 2.0]},
        "forward_model": {"type": "linear", "G": [[1.0, 0.0], [0.5, 1.0], [0.0, 2.0]], "bias": [0.0, 1.0, 0.0]},
        "d_hist": [0.5, 1.0, -0.3],
        "std_devs": [0.5, 0.5, 0.5],
    }


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_minimal_round_trip(tmp_path):
    cfg = load_config(write(tmp_path, minimal_doc()))
    save_config(cfg, tmp_path / "again.json")
    assert load_config(tmp_path / "again.json") == cfg


def test_geometric_round_trip(tmp_path):
    doc = minimal_doc()
    doc["schedule"] = {"type": "geometric", "n_a": 5, "ratio": 0.3}
    cfg = load_config(write(tmp_path, doc))
    save_config(cfg, tmp_path / "again.json")
    again = load_config(tmp_path / "again.json")
    assert again == cfg
    assert again.schedule.alphas == cfg.schedule.alphas


def test_csv_sources_relative_to_config(tmp_path):
    G = np.array([[1.0, 0.0], [0.5, 1.0], [0.0, 2.0]])
    (tmp_path / "data").mkdir()
    write_csv(tmp_path / "data" / "G.csv", G, "c")
    write_csv(tmp_path / "data" / "d.csv", [0.5, 1.0, -0.3], "d")
    doc = minimal_doc()
    doc["forward_model"] = {"type": "linear", "G": "data/G.csv"}
    doc["d_hist"] = "data/d.csv"
    cfg = load_config(write(tmp_path, doc))
    assert isinstance(cfg.model, LinearModel)
    np.testing.assert_array_equal(cfg.model.G, G)
    np.testing.assert_array_equal(cfg.d_hist, [0.5, 1.0, -0.3])


def test_headerless_csv(tmp_path):
    (tmp_path / "G.csv").write_text("1,0\n0.5,1\n0,2\n")
    doc = minimal_doc()
    doc["forward_model"] = {"type": "linear", "G": "G.csv"}
    assert load_config(write(tmp_path, doc)).model.G.shape == (3, 2)


def test_invalid_schedule_rejected():
    doc = minimal_doc()
    doc["schedule"] = {"type": "explicit", "alphas": [2.0, 3.0]}
    with pytest.raises(ConfigError, match="sum of 1/alpha must equal 1") as info:
        parse_config(doc)
    assert info.value.where == "config.schedule"


def test_invalid_schedule_override(tmp_path):
    doc = minimal_doc()
    doc["schedule"] = {"type": "explicit", "alphas": [2.0, 3.0]}
    doc["allow_invalid_schedule"] = True
    assert parse_config(doc).schedule.alphas == (2.0, 3.0)
    doc["allow_invalid_schedule"] = False
    assert load_config(write(tmp_path, doc), allow_invalid_schedule=True).allow_invalid_schedule


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d.update(extra=1), "config"),
        (lambda d: d.pop("seed"), "config"),
        (lambda d: d["prior"].update(sigma=[1, 1]), "config.prior"),
        (lambda d: d["forward_model"].update(foo=1), "config.forward_model"),
        (lambda d: d.update(solver={"mode": "dense", "tol": 1}), "config.solver"),
        (lambda d: d.update(solver={"mode": "qr"}), "config.solver"),
        (lambda d: d.update(n_e=1), "config.n_e"),
        (lambda d: d.update(seed=-1), "config.seed"),
        (lambda d: d.update(seed=1.5), "config.seed"),
        (lambda d: d.update(parallelism=0), "config.parallelism"),
        (lambda d: d["forward_model"].update(type="spline"), "config.forward_model.type"),
        (lambda d: d["schedule"].update(n_a=0), "config.schedule"),
        (lambda d: d.update(std_devs=[0.5, -0.5, 0.5]), "config.std_devs"),
        (lambda d: d["prior"].update(covariance=[[1, 2], [2, 1]]) or d["prior"].pop("std"), "config.prior.covariance"),
        (lambda d: d["prior"].update(factor=[[1, 0], [0, 1]]), "config.prior"),
    ],
)
def test_rejections_name_location(mutate, where):
    doc = minimal_doc()
    mutate(doc)
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.where == where


def test_dimension_mismatch_reports_sizes():
    doc = minimal_doc()
    doc["d_hist"] = [1.0, 2.0]
    with pytest.raises(ConfigError, match="expected N_d=3.*found 2"):
        parse_config(doc)
    doc = minimal_doc()
    doc["prior"] = {"mean": [0.0, 0.0, 0.0], "std": [1.0, 1.0, 1.0]}
    with pytest.raises(ConfigError, match="N_m=2.*N_m=3"):
        parse_config(doc)
    doc = minimal_doc()
    doc["std_devs"] = [1.0]
    with pytest.raises(ConfigError, match="expected N_d=3 values, found 1"):
        parse_config(doc)


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"seed": 1,,}')
    with pytest.raises(ConfigError, match="line 1"):
        load_config(path)


def test_decline_config():
    doc = minimal_doc()
    doc["forward_model"] = {"type": "decline", "times": [0.0, 1.0, 2.0]}
    doc["solver"] = {"mode": "subspace", "energy_fraction": 0.99}
    cfg = parse_config(doc)
    assert cfg.model.n_d == 3 and cfg.solver.energy_fraction == 0.99
