"""Dense statevector evaluation of fragment configurations and shot sampling.

Qubit ordering is little-endian: qubit 0 is the least significant bit of an
outcome index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .circuit import MEAS_GATES, PREP_GATES, Configuration, Fragment, QuantumCircuit, configuration_circuit
from .errors import CircuitError, WirecutError

DEFAULT_MAX_QUBITS = 20
CLAMP_BELOW = 1e-15

_SQ = 1 / np.sqrt(2)

_FIXED: dict[str, np.ndarray] = {
    "h": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "tdg": np.array([[1, 0], [0, np.exp(-1j * np.pi / 4)]], dtype=complex),
    # two-qubit matrices use basis |q0 q1> with q0 = first listed qubit (control)
    "cx": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def _rx(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


_PARAMETRIC: dict[str, Callable[[float], np.ndarray]] = {
    "rx": _rx,
    "ry": _ry,
    "rz": _rz,
    "p": lambda t: np.diag([1, np.exp(1j * t)]),
    "cp": lambda t: np.diag([1, 1, 1, np.exp(1j * t)]),
}


def register_gate_matrix(name: str, matrix: np.ndarray | Callable[[float], np.ndarray]) -> None:
    """Attach a unitary (or a one-angle family of unitaries) to a registered gate name."""
    if callable(matrix):
        _PARAMETRIC[name] = matrix
    else:
        _FIXED[name] = np.asarray(matrix, dtype=complex)


def gate_matrix(name: str, params: Sequence[float] = ()) -> np.ndarray:
    if name in _FIXED:
        return _FIXED[name]
    if name in _PARAMETRIC:
        return np.asarray(_PARAMETRIC[name](*params), dtype=complex)
    raise CircuitError(f"no matrix registered for gate {name!r}")


def apply_gate(state: np.ndarray, matrix: np.ndarray, qubits: Sequence[int], num_qubits: int) -> np.ndarray:
    """Apply a 1- or 2-qubit unitary to a flat little-endian statevector."""
    k = len(qubits)
    psi = state.reshape([2] * num_qubits)
    axes = [num_qubits - 1 - q for q in qubits]
    op = matrix.reshape([2] * (2 * k))
    psi = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    psi = np.moveaxis(psi, list(range(k)), axes)
    return psi.reshape(-1)


def statevector(circuit: QuantumCircuit, max_qubits: int | None = DEFAULT_MAX_QUBITS) -> np.ndarray:
    n = circuit.num_qubits
    if max_qubits is not None and n > max_qubits:
        raise WirecutError(f"{n} qubits exceeds the simulator limit of {max_qubits}")
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        psi = apply_gate(psi, gate_matrix(g.name, g.params), g.qubits, n)
    return psi


def probabilities(circuit: QuantumCircuit, max_qubits: int | None = DEFAULT_MAX_QUBITS) -> np.ndarray:
    psi = statevector(circuit, max_qubits)
    p = np.abs(psi) ** 2
    return p / p.sum()


@dataclass(frozen=True)
class ConfigurationDistribution:
    config: Configuration
    probs: np.ndarray


@dataclass
class ShotRecord:
    config: Configuration
    counts: dict[int, int]
    n_shots: int

    def to_dict(self) -> dict:
        return {
            "config": self.config.ordinal,
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "n_shots": self.n_shots,
        }


@dataclass
class ConfigurationEstimate:
    """Pooled outcome frequencies of one configuration. `probs` is None when no shots were taken."""

    config: Configuration
    probs: np.ndarray | None
    n_shots: int

    @property
    def absent(self) -> bool:
        return self.probs is None


def simulate_exact(
    fragment: Fragment, config: Configuration, max_qubits: int | None = DEFAULT_MAX_QUBITS
) -> ConfigurationDistribution:
    probs = probabilities(configuration_circuit(fragment, config), max_qubits)
    return ConfigurationDistribution(config, probs)


def _prep_ket(state: str) -> np.ndarray:
    ket = np.array([1.0, 0.0], dtype=complex)
    for name in PREP_GATES[state]:
        ket = gate_matrix(name) @ ket
    return ket


def simulate_fragment(
    fragment: Fragment, configs: Sequence[Configuration], max_qubits: int | None = DEFAULT_MAX_QUBITS
) -> list[ConfigurationDistribution]:
    """Exact distributions for many configurations of one fragment.

    The fragment body runs once per computational-basis input on the prepare
    lines; each configuration's state is the matching linear combination of
    those runs followed by its measurement rotations.
    """
    n = fragment.width
    if max_qubits is not None and n > max_qubits:
        raise WirecutError(f"{n} qubits exceeds the simulator limit of {max_qubits}")
    lines = [line for line, _ in fragment.prep_slots]
    body = {}
    for bits in itertools.product((0, 1), repeat=len(lines)):
        psi = np.zeros(2**n, dtype=complex)
        psi[sum(b << line for b, line in zip(bits, lines))] = 1.0
        for g in fragment.circuit.gates:
            psi = apply_gate(psi, gate_matrix(g.name, g.params), g.qubits, n)
        body[bits] = psi
    kets = {s: _prep_ket(s) for s in PREP_GATES}
    prepared: dict[tuple[str, ...], np.ndarray] = {}
    out = []
    for config in configs:
        psi = prepared.get(config.states)
        if psi is None:
            psi = np.zeros(2**n, dtype=complex)
            for bits, phi in body.items():
                w = np.prod([kets[s][b] for s, b in zip(config.states, bits)])
                if w != 0:
                    psi = psi + w * phi
            prepared[config.states] = psi
        for (line, _), basis in zip(fragment.meas_slots, config.bases):
            for name in MEAS_GATES[basis]:
                psi = apply_gate(psi, gate_matrix(name), (line,), n)
        p = np.abs(psi) ** 2
        out.append(ConfigurationDistribution(config, p / p.sum()))
    return out


def derive_seed(master: int, *path: int) -> np.random.SeedSequence:
    """Independent stream for (master seed, configuration ordinal, segment, ...)."""
    return np.random.SeedSequence([int(master) & (2**64 - 1), *[int(p) for p in path]])


def sample(dist: ConfigurationDistribution, n_shots: int, seed: int | np.random.SeedSequence) -> ShotRecord:
    """Draw `n_shots` outcomes from the multinomial over `dist.probs`."""
    if n_shots < 0:
        raise ValueError("n_shots must be non-negative")
    if n_shots == 0:
        return ShotRecord(dist.config, {}, 0)
    p = np.where(dist.probs < CLAMP_BELOW, 0.0, dist.probs)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_shots, p)
    nz = np.flatnonzero(counts)
    return ShotRecord(dist.config, {int(k): int(counts[k]) for k in nz}, n_shots)


def estimate(records: Sequence[ShotRecord], size: int | None = None) -> ConfigurationEstimate:
    """Pool shot records of one configuration into outcome frequencies."""
    if not records:
        raise ValueError("nothing to estimate: no shot records")
    config = records[0].config
    if any(r.config.key != config.key for r in records):
        raise ValueError("records belong to different configurations")
    total = sum(r.n_shots for r in records)
    if size is None:
        top = max((k for r in records for k in r.counts), default=0)
        size = 1 << max(1, int(top).bit_length())
    if total == 0:
        return ConfigurationEstimate(config, None, 0)
    counts = np.zeros(size)
    for r in records:
        for k, v in r.counts.items():
            counts[k] += v
    return ConfigurationEstimate(config, counts / total, total)
