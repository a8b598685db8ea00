import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_circuit, random_cuts
from wirecut.circuit import (
    Configuration,
    CutPoint,
    GateOp,
    QuantumCircuit,
    apply_cuts,
    configuration_circuit,
    dump_document,
    enumerate_configurations,
    parse_document,
    prep_states_for,
    stitch,
    validate_cuts,
)
from wirecut.errors import CircuitError, CutError, InputError


def test_parse_round_trip():
    doc = {
        "num_qubits": 3,
        "gates": [
            {"name": "H", "qubits": [0]},
            {"name": "cx", "qubits": [0, 1]},
            {"name": "rz", "qubits": [2], "params": [0.5]},
            {"name": "cx", "qubits": [1, 2]},
        ],
        "cuts": [{"qubit": 1, "after_gate": 1}],
    }
    circuit, cuts = parse_document(json.dumps(doc))
    assert circuit.gates[0].name == "h"
    assert cuts == [CutPoint(1, 1)]
    again, cuts2 = parse_document(dump_document(circuit, cuts))
    assert again == circuit and cuts2 == cuts


@pytest.mark.parametrize(
    "doc",
    [
        "not json",
        "[]",
        {"gates": []},
        {"num_qubits": 2, "gates": [{"name": "foo", "qubits": [0]}]},
        {"num_qubits": 2, "gates": [{"name": "cx", "qubits": [0, 0]}]},
        {"num_qubits": 2, "gates": [{"name": "h", "qubits": [5]}]},
        {"num_qubits": 2, "gates": [{"name": "rx", "qubits": [0]}]},
        {"num_qubits": 2, "gates": [{"name": "h", "qubits": [0], "params": [True]}]},
        {"num_qubits": 2, "gates": [], "cuts": [{"qubit": "0"}]},
    ],
)
def test_malformed_documents_are_input_errors(doc):
    with pytest.raises(CircuitError):
        parse_document(doc)


def test_cut_validation():
    c = QuantumCircuit(2, (GateOp("h", (0,)), GateOp("cx", (0, 1)), GateOp("h", (1,))))
    validate_cuts(c, [CutPoint(0, 0)])
    for bad in ([CutPoint(1, 0)], [CutPoint(0, 1)], [CutPoint(0, 7)], [CutPoint(0, 0), CutPoint(0, 0)]):
        with pytest.raises(CutError):
            validate_cuts(c, bad)
    assert issubclass(CutError, InputError)


def test_single_cut_partition(bell):
    circuit, cuts, part = bell
    assert part.K == 1 and len(part.fragments) == 2
    up, down = part.cut_fragments[0]
    assert part.fragments[up].meas_slots and not part.fragments[up].output_map
    assert part.fragments[down].prep_slots
    assert sorted(part.fragments[down].output_map.values()) == [0, 1]


def test_width_limit():
    c = QuantumCircuit(3, (GateOp("h", (0,)), GateOp("cx", (0, 1)), GateOp("cx", (1, 2))))
    with pytest.raises(InputError):
        apply_cuts(c, [], max_width=2)
    part = apply_cuts(c, [CutPoint(1, 1)], max_width=2)
    assert max(f.width for f in part.fragments) == 2


def test_same_fragment_cut_is_supported():
    # cutting a wire whose two ends stay connected through another qubit
    c = QuantumCircuit(
        2, (GateOp("cx", (0, 1)), GateOp("h", (0,)), GateOp("cx", (0, 1)))
    )
    part = apply_cuts(c, [CutPoint(0, 1)])
    assert len(part.fragments) == 1
    up, down = part.cut_fragments[0]
    assert up == down


def test_configuration_order_and_count():
    c = QuantumCircuit(3, (GateOp("h", (0,)), GateOp("cx", (0, 1)), GateOp("cx", (1, 2)), GateOp("h", (2,))))
    part = apply_cuts(c, [CutPoint(1, 1), CutPoint(2, 2)])
    for ell in (4, 6):
        configs = enumerate_configurations(part, prep_states_for(ell))
        expected = sum(3 ** len(f.meas_slots) * ell ** len(f.prep_slots) for f in part.fragments)
        assert len(configs) == expected
        assert [c.ordinal for c in configs] == list(range(expected))
        assert [c.fragment for c in configs] == sorted(c.fragment for c in configs)
    first = enumerate_configurations(part, prep_states_for(4))
    meas_frag = [cf for cf in first if cf.bases and not cf.states]
    assert [cf.bases for cf in meas_frag][:3] == [("X",), ("Y",), ("Z",)]


def test_configuration_circuit_adds_prep_and_rotations(bell):
    _, _, part = bell
    up, down = part.cut_fragments[0]
    meas = configuration_circuit(part.fragments[up], Configuration(up, ("Y",), ()))
    assert [g.name for g in meas.gates[-2:]] == ["sdg", "h"]
    prep = configuration_circuit(part.fragments[down], Configuration(down, (), ("-i",)))
    assert [g.name for g in prep.gates[:3]] == ["x", "h", "s"]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), K=st.integers(0, 3))
def test_stitch_round_trips(seed, n, K):
    rng = np.random.default_rng(seed)
    circuit = random_circuit(rng, n, 3)
    cuts = random_cuts(rng, circuit, K)
    part = apply_cuts(circuit, cuts)
    assert stitch(part) == circuit
    # every cut has exactly one measure end and one prepare end
    meas = sorted(c for f in part.fragments for _, c in f.meas_slots)
    prep = sorted(c for f in part.fragments for _, c in f.prep_slots)
    assert meas == prep == list(range(K))
    outputs = sorted(q for f in part.fragments for q in f.output_map.values())
    assert outputs == list(range(n))
