import json

import numpy as np
import pytest

from conftest import bell_cut
from wirecut.benchmarks import ripple_carry_adder
from wirecut.circuit import CutPoint, GateOp, QuantumCircuit, dump_document
from wirecut.errors import InputError
from wirecut.harness import (
    PRESET_TABLE,
    PRESETS,
    SCHEMA_VERSION,
    Experiment,
    RunConfig,
    _emit,
    evaluate_variance,
    measure_variance,
    run_pipeline,
    validate_document,
    write_report,
)
from wirecut.optimizer import OptimizerConfig
from wirecut.simulator import probabilities

FAST = OptimizerConfig(iterations=2)


def three_qubit():
    """Two 2-qubit halves joined by one cut on the middle wire (7 configurations under four states)."""
    c = QuantumCircuit(
        3,
        (
            GateOp("h", (0,)),
            GateOp("ry", (1,), (0.4,)),
            GateOp("cx", (0, 1)),
            GateOp("rx", (2,), (1.2,)),
            GateOp("cx", (1, 2)),
            GateOp("h", (1,)),
        ),
    )
    return c, [CutPoint(1, 2)]


def config(preset="A", **kw):
    circuit, cuts = kw.pop("circuit", None) or three_qubit()
    return RunConfig.from_preset(preset, circuit=circuit, cuts=cuts, optimizer=kw.pop("optimizer", FAST), **kw)


def test_preset_expansion():
    expected = {
        "baseline": ("L4_PRESET", "even", False),
        "A": ("PARAM_L4", "posterior", False),
        "B": ("PARAM_L4", "posterior", False),
        "C": ("PARAM_L4", "posterior", True),
        "D": ("PARAM_L6", "posterior", True),
        "E": ("PARAM_L4", "even", True),
        "F": ("PARAM_L6", "even", True),
    }
    for name, (scheme, strategy, optimize) in expected.items():
        cfg = RunConfig.from_preset(name)
        assert (cfg.scheme, cfg.strategy, cfg.optimize) == (scheme, strategy, optimize)
    for name in "ABCD":
        assert RunConfig.from_preset(name).prior_ratio == 0.2
    assert RunConfig.from_preset("A").segments == 1
    assert RunConfig.from_preset("B").segments == 5
    assert set(PRESET_TABLE) | {"custom"} == set(PRESETS)


def test_named_presets_ignore_overrides_but_custom_takes_them():
    assert RunConfig.from_preset("A", segments=9, scheme="PARAM_L6").segments == 1
    custom = RunConfig.from_preset("custom", segments=9, scheme="PARAM_L6", strategy="posterior")
    assert (custom.segments, custom.scheme) == (9, "PARAM_L6")


@pytest.mark.parametrize("kwargs", [{"preset": "Z"}, {"scheme": "L5"}, {"prior_ratio": 2.0}, {"segments": 0}, {"total_shots": 0}])
def test_bad_config(kwargs):
    with pytest.raises(InputError):
        RunConfig(**kwargs)


def test_baseline_spends_evenly():
    res = Experiment(config("baseline", total_shots=7000)).run()
    assert len(res.configs) == 7
    assert res.shots.tolist() == [1000] * 7
    assert [s["kind"] for s in res.stages] == ["even"]


def test_stage_budgets():
    a = Experiment(config("A", total_shots=1000)).run()
    assert [s["budget"] for s in a.stages] == [200, 800]
    b = Experiment(config("B", total_shots=1000)).run()
    assert [s["budget"] for s in b.stages] == [200, 160, 160, 160, 160, 160]
    for res in (a, b):
        assert res.total_shots == 1000
        assert sum(sum(s["allocation"]) for s in res.stages) == 1000


def test_default_budget_is_1000_per_configuration():
    res = Experiment(config("A")).run()
    assert res.total_shots == 1000 * len(res.configs)


@pytest.mark.parametrize("preset", ["baseline", "A", "B", "C", "D", "E", "F"])
def test_exact_mode_reproduces_uncut_distribution(preset):
    circuit, cuts = ripple_carry_adder(2, 1, 2, superpose=True)
    res = Experiment(config(preset, circuit=(circuit, cuts), exact=True)).run()
    assert np.max(np.abs(res.distribution - probabilities(circuit))) <= 1e-9


def test_exact_mode_has_no_spread():
    ev = measure_variance(config("A", exact=True), 3)
    assert ev.empirical_err == 0.0
    assert np.all(ev.distributions == ev.distributions[0])


def test_determinism_across_workers():
    circuit, cuts = ripple_carry_adder(2, 1, 2, superpose=True)
    texts = []
    for workers in (1, 1, 4):
        rep = Experiment(config("C", circuit=(circuit, cuts), workers=workers, include_counts=True)).run().report()
        texts.append(json.dumps(rep))
    assert texts[0] == texts[1] == texts[2]
    other = Experiment(config("C", circuit=(circuit, cuts), seed=1)).run().report()
    assert json.dumps(other) != texts[0]


def test_report_schema():
    rep = run_pipeline(config("D", include_counts=True))
    assert rep["schema_version"] == SCHEMA_VERSION
    for key in (
        "config",
        "partition",
        "configurations",
        "stages",
        "shots_per_configuration",
        "thetas",
        "tables",
        "distribution",
        "variance_coefficients",
        "predicted_err",
        "improvement_ratio_bound",
        "optimization",
        "verification",
        "records",
    ):
        assert key in rep
    assert "timings" not in rep
    assert rep["partition"]["num_cuts"] == 1
    assert len(rep["thetas"]) == 1 and len(rep["thetas"][0]) == 24
    dist = rep["distribution"]
    assert abs(sum(dist["clamped"]) - 1) < 1e-12
    assert all(0 <= v <= 1 for v in dist["clamped"])
    assert dist["clamping_applied"] == any(v < 0 or v > 1 for v in dist["raw"])
    assert rep["optimization"]["loss"] <= rep["optimization"]["initial_loss"]
    assert sum(r["n_shots"] for r in rep["records"]) == rep["total_shots"]
    json.dumps(rep)  # serializable


def test_report_with_timings():
    res = Experiment(config("A")).run()
    assert "total" in res.report(timings=True)["timings"]


def test_sparse_emission():
    p = np.zeros(2**17)
    p[[3, 70000]] = [0.25, 0.75]
    assert _emit(p) == {"3": 0.25, "70000": 0.75}
    assert _emit(np.array([0.5, 0.5])) == [0.5, 0.5]


def test_evaluate_with_comparison():
    out = evaluate_variance(config("A"), 4, compare="baseline")
    assert out["evaluation"]["repetitions"] == 4
    cmp = out["comparison"]
    assert cmp["preset"] == "baseline"
    assert cmp["ratio"] == pytest.approx(cmp["empirical_err"] / out["evaluation"]["empirical_err"])
    with pytest.raises(InputError):
        measure_variance(config("A"), 1)


def test_small_prior_budget_warns():
    with pytest.warns(RuntimeWarning):
        res = Experiment(config("A", total_shots=20)).run()
    assert res.total_shots == 20


def test_circuit_file_and_validate(tmp_path):
    circuit, cuts = bell_cut()
    path = tmp_path / "bell.json"
    path.write_text(json.dumps(dump_document(circuit, cuts)))
    cfg = RunConfig.from_preset("A", circuit_path=str(path))
    rep = run_pipeline(cfg)
    assert rep["config"]["circuit_path"] == str(path)
    doc = validate_document(RunConfig(circuit_path=str(path), scheme="PARAM_L6"))
    assert doc["round_trip"] and doc["num_configurations"] == 9
    assert max(doc["table_residuals"]) <= 1e-12
    with pytest.raises(InputError):
        Experiment(RunConfig(circuit_path=str(tmp_path / "missing.json")))
    with pytest.raises(InputError):
        Experiment(RunConfig(circuit=circuit, cuts=[]))


def test_write_report(tmp_path):
    target = tmp_path / "r.json"
    text = write_report({"a": 1}, str(target))
    assert json.loads(target.read_text()) == json.loads(text) == {"a": 1}
