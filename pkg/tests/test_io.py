import json

import numpy as np
import pytest

from weakkam import ScalarField, custom, mane, pendulum, remark, zero
from weakkam.io import (
    ExperimentConfig,
    dump_config,
    load_config,
    semigroup_config,
    spec_from_dict,
    spec_to_dict,
    write_csv,
    write_json,
)


@pytest.mark.parametrize("spec", [
    pendulum(), pendulum(0.5), mane(), remark(0.2), zero(),
    custom(ScalarField((0.1, 0.2), (0.0, 0.3)), ScalarField((0.0, 1.0))),
], ids=lambda s: s.name)
def test_spec_round_trip(spec):
    back = spec_from_dict(spec_to_dict(spec))
    x = np.linspace(0, 1, 33)
    assert np.allclose(back.b(x), spec.b(x)) and np.allclose(back.U(x), spec.U(x))
    assert back.family == spec.family


def test_spec_blocks():
    assert spec_from_dict({"family": "mechanical", "amplitude": 2.0}).U(0.0) == pytest.approx(2.0)
    assert spec_from_dict({"family": "mechanical", "U_cos": [0, 0, 1]}).U(0.5) == pytest.approx(1)
    assert spec_from_dict({"family": "mane", "b_sin": [0, 2]}).b(0.25) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        spec_from_dict({"family": "unknown"})


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig("vanishing_plus", {"family": "mane"}, [0.5, 0.1], 256,
                           {"dt": 0.01}, seed=3, options={"c": 0.0})
    path = tmp_path / "c.toml"
    dump_config(cfg, path)
    back = load_config(path)
    assert back == cfg
    assert semigroup_config(back).dt == 0.01
    assert back.option("c") == 0.0 and back.option("missing", 7) == 7


def test_config_rejects_unknown_semigroup_keys():
    with pytest.raises(ValueError):
        ExperimentConfig("remark", semigroup={"bogus": 1})


def test_load_config_fills_experiment(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("n = 64\nlambdas = [1.0]\n")
    assert load_config(path, experiment="remark").experiment == "remark"


def test_write_csv_layout(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, {"x": [0.0, 0.5], "u": [1.0, 2.0]}, {"lam": 0.1})
    lines = path.read_text().splitlines()
    assert lines[0] == "# lam = 0.1"
    assert lines[1] == "x,u"
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2)
    assert data.tolist() == [[0.0, 1.0], [0.5, 2.0]]


def test_write_json_handles_numpy(tmp_path):
    path = tmp_path / "r.json"
    write_json({"a": np.float64(1.5), "b": np.arange(3), "c": float("nan"), "d": np.bool_(True)},
               path)
    assert json.loads(path.read_text()) == {"a": 1.5, "b": [0, 1, 2], "c": "nan", "d": True}
