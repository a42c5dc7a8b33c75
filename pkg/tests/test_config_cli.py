import json

import pytest
import yaml

from ostrokernel import ConfigError, load_config, shipped_scenarios
from ostrokernel.cli import main
from ostrokernel.config import parse_config
from ostrokernel.pipelines import run_config

EXPECTED_SCENARIOS = [
    "action-orders",
    "cancellation",
    "kernel-symbol-agreement",
    "normalization",
    "pais-uhlenbeck-canonical",
    "pais-uhlenbeck-ostrogradsky",
    "propagation",
    "riemann-kinetic-legendre",
    "second-order-step",
    "stationary-phase",
]


def _action_cfg(**over):
    case = {
        "label": "pu",
        "order": 2,
        "lagrangian": {"name": "pais-uhlenbeck", "params": {"omega": 1.0}},
        "deltas": [0.1, 0.05, 0.02, 0.01],
        "point": {"t2": 0.0, "x2": 0.4, "v2": 0.7, "accel": 0.5, "jerk": -0.8},
        "nodes": 10,
        "slope_min": 3.7,
    }
    case.update(over)
    return {"name": "t", "pipeline": "action-orders", "hbar": 1.0, "seed": 0, "cases": [case]}


def _write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_shipped_scenarios_listed(capsys):
    assert shipped_scenarios() == EXPECTED_SCENARIOS
    assert main(["list-scenarios"]) == 0
    assert capsys.readouterr().out.split() == EXPECTED_SCENARIOS


@pytest.mark.parametrize("name", EXPECTED_SCENARIOS)
def test_shipped_scenarios_validate(name):
    cfg = load_config(name)
    assert cfg.name == name and cfg.cases


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.pop("hbar"), "hbar"),
        (lambda d: d.update(hbar=-1.0), "hbar"),
        (lambda d: d.update(pipeline="nope"), "pipeline"),
        (lambda d: d.update(cases=[]), "cases"),
        (lambda d: d["cases"][0].update(deltas=[]), "cases[0].deltas"),
        (lambda d: d["cases"][0].update(deltas=[0.1, 0.2, 0.05, 0.01]), "cases[0].deltas"),
        (lambda d: d["cases"][0].update(deltas=[0.1, 0.05, 0.02]), "cases[0].deltas"),
        (lambda d: d["cases"][0]["lagrangian"].update(params={}), "cases[0].lagrangian.params.omega"),
        (lambda d: d["cases"][0].pop("point"), "cases[0].point"),
    ],
)
def test_config_errors_name_the_field(mutate, field):
    data = _action_cfg()
    mutate(data)
    with pytest.raises(ConfigError) as info:
        cfg = parse_config(data)
        run_config(cfg)
    assert info.value.field == field


def test_empty_delta_list_exit_code(tmp_path, capsys):
    data = _action_cfg(deltas=[])
    rc = main(["run", str(_write(tmp_path, data)), "--out", str(tmp_path / "out")])
    assert rc == 2
    assert "cases[0].deltas" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "absent.yaml")]) == 2


def test_failed_assertion_exit_code(tmp_path):
    data = _action_cfg(slope_min=9.0)
    assert main(["run", str(_write(tmp_path, data)), "--out", str(tmp_path / "out")]) == 1
    rep = json.loads((tmp_path / "out" / "t" / "report.json").read_text())
    assert rep["passed"] is False


def test_numerical_failure_exit_code(tmp_path, capsys):
    # ∂²L/∂a² = 0: the acceleration inversion is singular
    case = {
        "label": "singular",
        "order": 2,
        "lagrangian": {"expression": "v**2/2 + x*a", "order": 2},
        "deltas": [0.1, 0.05, 0.02, 0.01],
        "point": {"t2": 0.0, "x2": 0.3, "xdot2": 0.7, "k": 0.4, "kprime": 0.6},
        "slope_min": 0.8,
    }
    data = {"name": "s", "pipeline": "stationary-phase", "hbar": 1.0, "seed": 0, "cases": [case]}
    assert main(["run", str(_write(tmp_path, data)), "--out", str(tmp_path / "out")]) == 1
    assert "Singular" in capsys.readouterr().err


def test_outputs_and_csv_schema(tmp_path):
    rc = main(["run", str(_write(tmp_path, _action_cfg())), "--out", str(tmp_path / "out")])
    assert rc == 0
    out = tmp_path / "out" / "t"
    rows = (out / "pu.csv").read_text().splitlines()
    assert rows[0] == "delta,error"
    assert len(rows) == 5
    d, e = rows[1].split(",")
    assert float(d) == 0.1 and float(e) > 0
    assert set(json.loads((out / "timing.json").read_text())) == {"pu"}


def test_expression_lagrangian_config(tmp_path):
    data = _action_cfg(lagrangian={"expression": "a**2/2 + c*a**4 - v**2/2", "order": 2, "params": {"c": 0.1}})
    report, results, _ = run_config(parse_config(data))
    assert report["passed"] and results[0].record["fit"]["slope"] >= 3.7


def test_bad_expression_is_config_error():
    data = _action_cfg(lagrangian={"expression": "__import__('os')", "order": 2})
    with pytest.raises(ConfigError):
        run_config(parse_config(data))


def test_reports_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "pais-uhlenbeck-ostrogradsky", "--out", str(tmp_path / name)]) == 0
    for fn in ("report.json", "random-states.csv", "quartic-affine.csv"):
        a = (tmp_path / "a" / "pais-uhlenbeck-ostrogradsky" / fn).read_bytes()
        b = (tmp_path / "b" / "pais-uhlenbeck-ostrogradsky" / fn).read_bytes()
        assert a == b


def test_seed_changes_samples(tmp_path):
    data = yaml.safe_load(open(load_config("pais-uhlenbeck-ostrogradsky").source))
    r0, res0, _ = run_config(parse_config(data))
    data["seed"] = data["seed"] + 1
    r1, res1, _ = run_config(parse_config(data))
    assert res0[0].csv_rows != res1[0].csv_rows
    assert r0["passed"] and r1["passed"]
