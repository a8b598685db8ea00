"""Small benchmark circuits and simple (non-optimal) cut suggestions."""

from __future__ import annotations

import math
from typing import Iterable

import networkx as nx
import numpy as np

from .circuit import CutPoint, GateOp, QuantumCircuit, apply_cuts, validate_cuts
from .errors import InputError

KINDS = ("bv", "qaoa_regular", "adder", "aqft")


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.gates: list[GateOp] = []

    def add(self, name: str, *qubits: int, params: tuple[float, ...] = ()) -> int:
        self.gates.append(GateOp(name, tuple(qubits), params))
        return len(self.gates) - 1

    def last_on(self, q: int) -> int:
        for k in range(len(self.gates) - 1, -1, -1):
            if q in self.gates[k].qubits:
                return k
        raise ValueError(f"no gate on qubit {q}")

    def ccx(self, a: int, b: int, t: int) -> None:
        """Toffoli from the 6-CNOT Clifford+T decomposition."""
        self.add("h", t)
        self.add("cx", b, t)
        self.add("tdg", t)
        self.add("cx", a, t)
        self.add("t", t)
        self.add("cx", b, t)
        self.add("tdg", t)
        self.add("cx", a, t)
        self.add("t", b)
        self.add("t", t)
        self.add("h", t)
        self.add("cx", a, b)
        self.add("t", a)
        self.add("tdg", b)
        self.add("cx", a, b)

    def circuit(self) -> QuantumCircuit:
        return QuantumCircuit(self.n, tuple(self.gates))


def bernstein_vazirani(n: int, hidden: int | None = None, seed: int | None = None) -> tuple[QuantumCircuit, int]:
    """BV on n-1 data qubits with the oracle target on qubit n-1.

    The target is returned to |0>, so the output is exactly `hidden`.
    """
    if n < 2:
        raise InputError("bv needs at least 2 qubits")
    data = n - 1
    if hidden is None:
        rng = np.random.default_rng(seed)
        hidden = int(rng.integers(1, 2**data))
    if not 0 <= hidden < 2**data:
        raise InputError(f"hidden string must fit in {data} bits")
    b = _Builder(n)
    anc = n - 1
    b.add("x", anc)
    for q in range(n):
        b.add("h", q)
    for q in range(data):
        if (hidden >> q) & 1:
            b.add("cx", q, anc)
    for q in range(n):
        b.add("h", q)
    b.add("x", anc)
    return b.circuit(), hidden


def bv_chain_cuts(circuit: QuantumCircuit, K: int) -> list[CutPoint]:
    """K cuts on the oracle target wire, after evenly spaced CNOTs."""
    anc = circuit.num_qubits - 1
    cx = [k for k, g in enumerate(circuit.gates) if g.name == "cx" and g.qubits[1] == anc]
    if not 0 <= K <= len(cx):
        raise InputError(f"bv circuit has {len(cx)} oracle CNOTs, cannot place {K} cuts")
    if K == 0:
        return []
    picks = np.linspace(0, len(cx) - 1, K).round().astype(int) if K > 1 else [len(cx) // 2]
    return [CutPoint(anc, cx[i]) for i in sorted(set(int(p) for p in picks))]


def bv_data_cuts(circuit: QuantumCircuit, K: int) -> list[CutPoint]:
    """K cuts on data wires 0..K-1, each right after the wire's first Hadamard.

    Every cut detaches a one-gate fragment, so the main fragment gains one
    prepare slot per cut and the configuration count grows as 4**K.
    """
    data = circuit.num_qubits - 1
    if not 0 <= K <= data:
        raise InputError(f"bv circuit has {data} data wires, cannot place {K} cuts")
    cuts = []
    for q in range(K):
        first = next(k for k, g in enumerate(circuit.gates) if q in g.qubits)
        cuts.append(CutPoint(q, first))
    validate_cuts(circuit, cuts)
    return cuts


def qaoa_regular(n: int, degree: int = 3, seed: int | None = None, gamma: float | None = None, beta: float | None = None) -> QuantumCircuit:
    """One QAOA layer (ZZ phases then an RX mixer) on a random regular graph."""
    if n <= degree or (n * degree) % 2:
        raise InputError(f"no {degree}-regular graph on {n} vertices")
    rng = np.random.default_rng(seed)
    graph = nx.random_regular_graph(degree, n, seed=int(rng.integers(2**31)))
    gamma = float(rng.uniform(0, np.pi)) if gamma is None else gamma
    beta = float(rng.uniform(0, np.pi)) if beta is None else beta
    b = _Builder(n)
    for q in range(n):
        b.add("h", q)
    for i, j in sorted(tuple(sorted(e)) for e in graph.edges):
        b.add("cx", i, j)
        b.add("rz", j, params=(2 * gamma,))
        b.add("cx", i, j)
    for q in range(n):
        b.add("rx", q, params=(2 * beta,))
    return b.circuit()


def ripple_carry_adder(
    bits: int, a: int = 0, b: int = 0, superpose: bool = False
) -> tuple[QuantumCircuit, list[CutPoint]]:
    """In-place ripple-carry adder b <- a + b with a carry-out qubit.

    With ``superpose`` both input registers start in uniform superposition
    (after loading `a` and `b`), which spreads the output distribution.

    Layout: qubit 0 is the incoming carry, then (b_i, a_i) pairs, then the
    carry-out, 2*bits + 2 qubits in total. The returned cuts sever the middle
    carry wire twice, leaving a lower and an upper half.
    """
    if bits < 1:
        raise InputError("adder needs at least one bit")
    if not (0 <= a < 2**bits and 0 <= b < 2**bits):
        raise InputError(f"inputs must fit in {bits} bits")
    n = 2 * bits + 2
    bq = [1 + 2 * i for i in range(bits)]
    aq = [2 + 2 * i for i in range(bits)]
    z = n - 1
    B = _Builder(n)
    for i in range(bits):
        if (a >> i) & 1:
            B.add("x", aq[i])
        if (b >> i) & 1:
            B.add("x", bq[i])
        if superpose:
            B.add("h", aq[i])
            B.add("h", bq[i])

    def maj(c: int, y: int, x: int) -> None:
        B.add("cx", x, y)
        B.add("cx", x, c)
        B.ccx(c, y, x)

    def uma(c: int, y: int, x: int) -> None:
        B.ccx(c, y, x)
        B.add("cx", x, c)
        B.add("cx", c, y)

    carries = [0] + aq[:-1]
    mid = (bits - 1) // 2
    cuts: list[CutPoint] = []
    for i in range(bits):
        maj(carries[i], bq[i], aq[i])
        if i == mid and bits > 1:
            cuts.append(CutPoint(aq[i], B.last_on(aq[i])))
    B.add("cx", aq[-1], z)
    for i in reversed(range(bits)):
        uma(carries[i], bq[i], aq[i])
        if i == mid + 1:
            cuts.append(CutPoint(aq[mid], B.last_on(aq[mid])))
    return B.circuit(), cuts


def aqft(n: int, threshold: float = math.inf, input_value: int = 0) -> QuantumCircuit:
    """QFT without the final swaps, dropping rotations between qubits farther apart than `threshold`."""
    if n < 1:
        raise InputError("aqft needs at least one qubit")
    b = _Builder(n)
    for q in range(n):
        if (input_value >> q) & 1:
            b.add("x", q)
    for j in reversed(range(n)):
        b.add("h", j)
        for k in reversed(range(j)):
            if j - k <= threshold:
                b.add("cp", k, j, params=(np.pi / 2 ** (j - k),))
    return b.circuit()


def bipartition_cuts(circuit: QuantumCircuit, block: int | Iterable[int] | None = None) -> list[CutPoint]:
    """Wire cuts that move crossing interactions into qubit block A.

    `block` is either a split index (qubits below it form A) or an explicit
    set of A qubits; the default is the lower half. Each gate on a block-B
    qubit is labelled with the block it must live in (A when it couples to an
    A qubit) and a cut is placed wherever consecutive gates on a wire change
    block. Not optimal.
    """
    n = circuit.num_qubits
    if block is None:
        block = n // 2
    a_side = set(range(block)) if isinstance(block, int) else set(block)
    cuts = []
    for q in sorted(set(range(n)) - a_side):
        on_q = [k for k, g in enumerate(circuit.gates) if q in g.qubits]
        labels: list[str | None] = []
        for k in on_q:
            others = [p for p in circuit.gates[k].qubits if p != q]
            if not others:
                labels.append(None)
            else:
                labels.append("A" if any(p in a_side for p in others) else "B")
        # single-qubit gates follow the previous label (or the next one at the start)
        known = [lab for lab in labels if lab is not None]
        fill = known[0] if known else "B"
        for i, lab in enumerate(labels):
            if lab is None:
                labels[i] = fill
            else:
                fill = lab
        for i in range(len(on_q) - 1):
            if labels[i] != labels[i + 1]:
                cuts.append(CutPoint(q, on_q[i]))
    cuts.sort(key=lambda c: (c.after_gate, c.qubit))
    validate_cuts(circuit, cuts)
    return cuts


def interaction_graph(circuit: QuantumCircuit) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(circuit.num_qubits))
    for g in circuit.gates:
        if len(g.qubits) == 2:
            a, b = g.qubits
            w = graph.get_edge_data(a, b, {"weight": 0})["weight"]
            graph.add_edge(a, b, weight=w + 1)
    return graph


def suggest_cuts(circuit: QuantumCircuit, seed: int | None = 0) -> list[CutPoint]:
    """Bipartition cuts minimizing the widest fragment, then the cut count.

    Candidate blocks are every contiguous qubit split plus a Kernighan-Lin
    bisection of the interaction graph, each tried in both orientations.
    """
    n = circuit.num_qubits
    everything = set(range(n))
    candidates = [set(range(s)) for s in range(1, n)]
    if n >= 2:
        left, _ = nx.algorithms.community.kernighan_lin_bisection(
            interaction_graph(circuit), weight="weight", seed=seed
        )
        candidates.append(set(left))
    best = None
    for a_side in candidates:
        for block in (a_side, everything - a_side):
            if not block or block == everything:
                continue
            cuts = bipartition_cuts(circuit, block)
            widths = [f.width for f in apply_cuts(circuit, cuts, max_width=None).fragments]
            score = (max(widths), len(cuts))
            if best is None or score < best[0]:
                best = (score, cuts)
    return [] if best is None else best[1]


def generate_benchmark(kind: str, n: int, seed: int | None = None, **options) -> tuple[QuantumCircuit, list[CutPoint]]:
    """A desk-scale benchmark circuit plus suggested cuts."""
    if kind == "bv":
        circuit, _ = bernstein_vazirani(n, options.get("hidden"), seed)
        return circuit, bv_chain_cuts(circuit, options.get("cuts", 1))
    if kind == "qaoa_regular":
        circuit = qaoa_regular(n, options.get("degree", 3), seed)
        return circuit, suggest_cuts(circuit, seed)
    if kind == "adder":
        if n < 4 or n % 2:
            raise InputError("adder needs an even qubit count >= 4 (two registers plus carries)")
        bits = (n - 2) // 2
        rng = np.random.default_rng(seed)
        a = options.get("a", int(rng.integers(2**bits)))
        b = options.get("b", int(rng.integers(2**bits)))
        return ripple_carry_adder(bits, a, b, options.get("superpose", False))
    if kind == "aqft":
        threshold = options.get("threshold", max(1, math.ceil(math.log2(max(n, 2)))))
        circuit = aqft(n, threshold, options.get("input_value", 0))
        return circuit, suggest_cuts(circuit, seed)
    raise InputError(f"unknown benchmark kind {kind!r}; choose from {KINDS}")
