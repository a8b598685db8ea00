"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from wirecut.circuit import (
    CutPoint,
    GateOp,
    QuantumCircuit,
    apply_cuts,
    enumerate_configurations,
    prep_states_for,
)
from wirecut.errors import CutError
from wirecut.simulator import simulate_fragment

ONE_QUBIT = ("h", "x", "s", "t", "sdg", "y", "z")
ROTATIONS = ("rx", "ry", "rz")


def random_circuit(rng: np.random.Generator, n: int, depth: int) -> QuantumCircuit:
    """Layers of random single-qubit gates and a chain of random CNOT/CZ pairs."""
    gates = []
    for _ in range(depth):
        for q in range(n):
            if rng.random() < 0.5:
                gates.append(GateOp(str(rng.choice(ROTATIONS)), (q,), (float(rng.uniform(0, 2 * np.pi)),)))
            else:
                gates.append(GateOp(str(rng.choice(ONE_QUBIT)), (q,)))
        for _ in range(max(1, n // 2)):
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(GateOp(str(rng.choice(["cx", "cz"])), (int(a), int(b))))
    return QuantumCircuit(n, tuple(gates))


def random_cuts(rng: np.random.Generator, circuit: QuantumCircuit, K: int) -> list[CutPoint]:
    """K distinct valid cut points (a later gate must act on the wire)."""
    candidates = []
    for k, g in enumerate(circuit.gates):
        for q in g.qubits:
            if any(q in h.qubits for h in circuit.gates[k + 1 :]):
                candidates.append(CutPoint(q, k))
    if len(candidates) < K:
        raise CutError("not enough cut candidates")
    picks = rng.choice(len(candidates), size=K, replace=False)
    return [candidates[int(i)] for i in sorted(picks)]


def exact_source(partition, ell: int) -> dict:
    configs = enumerate_configurations(partition, prep_states_for(ell))
    out = {}
    for fid, frag in enumerate(partition.fragments):
        for dist in simulate_fragment(frag, [c for c in configs if c.fragment == fid]):
            out[dist.config.key] = dist.probs
    return out


def bell_cut():
    """H then CNOT; the control wire is cut between the two gates."""
    circuit = QuantumCircuit(2, (GateOp("h", (0,)), GateOp("cx", (0, 1))))
    return circuit, [CutPoint(0, 0)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def bell():
    circuit, cuts = bell_cut()
    return circuit, cuts, apply_cuts(circuit, cuts)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
