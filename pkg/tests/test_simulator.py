from functools import reduce

import numpy as np
import pytest

from conftest import random_circuit, random_cuts
from wirecut.circuit import (
    Configuration,
    GateOp,
    QuantumCircuit,
    apply_cuts,
    enumerate_configurations,
    prep_states_for,
)
from wirecut.errors import WirecutError
from wirecut.simulator import (
    ConfigurationDistribution,
    ShotRecord,
    derive_seed,
    estimate,
    gate_matrix,
    probabilities,
    sample,
    simulate_exact,
    simulate_fragment,
    statevector,
)


def _full_unitary(g: GateOp, n: int) -> np.ndarray:
    """Oracle: dense operator built from Kronecker products (qubit 0 is the rightmost factor)."""
    U = gate_matrix(g.name, g.params)
    k = len(g.qubits)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> q) & 1 for q in range(n)]
        sub = sum(bits[q] << (k - 1 - i) for i, q in enumerate(g.qubits))
        for new in range(2**k):
            amp = U[new, sub]
            if amp == 0:
                continue
            b = list(bits)
            for i, q in enumerate(g.qubits):
                b[q] = (new >> (k - 1 - i)) & 1
            out[sum(v << q for q, v in enumerate(b)), col] += amp
    return out


@pytest.mark.parametrize("name,params", [("h", ()), ("cx", ()), ("rx", (0.3,)), ("cp", (1.1,)), ("sdg", ())])
def test_gates_are_unitary(name, params):
    U = gate_matrix(name, params)
    assert np.allclose(U.conj().T @ U, np.eye(U.shape[0]))


def test_little_endian():
    c = QuantumCircuit(3, (GateOp("x", (0,)),))
    assert np.argmax(probabilities(c)) == 1
    c = QuantumCircuit(3, (GateOp("x", (2,)),))
    assert np.argmax(probabilities(c)) == 4
    c = QuantumCircuit(2, (GateOp("x", (0,)), GateOp("cx", (0, 1))))
    assert np.argmax(probabilities(c)) == 3


def test_bell_state():
    c = QuantumCircuit(2, (GateOp("h", (0,)), GateOp("cx", (0, 1))))
    assert np.allclose(probabilities(c), [0.5, 0, 0, 0.5])


def test_matches_kronecker_oracle(rng):
    for _ in range(5):
        n = int(rng.integers(2, 5))
        c = random_circuit(rng, n, 3)
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1
        psi = reduce(lambda s, g: _full_unitary(g, n) @ s, c.gates, psi)
        assert np.allclose(statevector(c), psi, atol=1e-12)


def test_width_limit():
    with pytest.raises(WirecutError):
        statevector(QuantumCircuit(5, ()), max_qubits=4)


def _dist():
    return ConfigurationDistribution(Configuration(0, (), ()), np.array([0.5, 0.25, 0.25, 1e-17]))


def test_sampling_is_seeded_and_exact_in_total():
    a = sample(_dist(), 1000, derive_seed(7, 3, 0))
    b = sample(_dist(), 1000, derive_seed(7, 3, 0))
    c = sample(_dist(), 1000, derive_seed(7, 3, 1))
    assert a.counts == b.counts and a.counts != c.counts
    assert sum(a.counts.values()) == 1000
    assert 3 not in a.counts  # clamped tiny probability
    assert sample(_dist(), 0, 1).counts == {}
    with pytest.raises(ValueError):
        sample(_dist(), -1, 1)


def test_estimate_pools_records():
    cfg = Configuration(0, (), ())
    recs = [ShotRecord(cfg, {0: 3, 2: 1}, 4), ShotRecord(cfg, {1: 4}, 4)]
    est = estimate(recs, 4)
    assert est.n_shots == 8
    assert np.allclose(est.probs, [3 / 8, 4 / 8, 1 / 8, 0])
    assert estimate([ShotRecord(cfg, {}, 0)], 4).absent
    with pytest.raises(ValueError):
        estimate([])
    with pytest.raises(ValueError):
        estimate([ShotRecord(cfg, {}, 1), ShotRecord(Configuration(1, (), ()), {}, 1)])


def test_sample_mean_converges():
    d = _dist()
    rec = sample(d, 200_000, 11)
    freq = np.zeros(4)
    for k, v in rec.counts.items():
        freq[k] = v / rec.n_shots
    assert np.allclose(freq, d.probs, atol=5e-3)


def test_batched_fragment_simulation_matches_single_runs(rng):
    for _ in range(5):
        c = random_circuit(rng, int(rng.integers(3, 7)), 3)
        part = apply_cuts(c, random_cuts(rng, c, int(rng.integers(1, 4))))
        configs = enumerate_configurations(part, prep_states_for(6))
        for fid, frag in enumerate(part.fragments):
            batch = simulate_fragment(frag, [cf for cf in configs if cf.fragment == fid])
            for dist in batch:
                single = simulate_exact(frag, dist.config).probs
                assert np.max(np.abs(dist.probs - single)) < 1e-13
