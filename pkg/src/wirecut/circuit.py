"""Circuit IR, wire cuts, fragment extraction and configuration enumeration."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .errors import CircuitError, CutError

# name -> (number of qubits, number of angle parameters)
GATE_SPECS: dict[str, tuple[int, int]] = {
    "h": (1, 0),
    "x": (1, 0),
    "y": (1, 0),
    "z": (1, 0),
    "s": (1, 0),
    "sdg": (1, 0),
    "t": (1, 0),
    "tdg": (1, 0),
    "rx": (1, 1),
    "ry": (1, 1),
    "rz": (1, 1),
    "p": (1, 1),
    "cx": (2, 0),
    "cz": (2, 0),
    "cp": (2, 1),
    "swap": (2, 0),
}

BASES = ("X", "Y", "Z")
# Fixed row order of coefficient tables and the enumeration order of prepared states.
PREP_STATES = ("0", "1", "+", "-", "+i", "-i")

# Gates that map |0> to each prepared state, and that rotate each basis onto Z.
PREP_GATES: dict[str, tuple[str, ...]] = {
    "0": (),
    "1": ("x",),
    "+": ("h",),
    "-": ("x", "h"),
    "+i": ("h", "s"),
    "-i": ("x", "h", "s"),
}
MEAS_GATES: dict[str, tuple[str, ...]] = {
    "Z": (),
    "X": ("h",),
    "Y": ("sdg", "h"),
}


def register_gate(name: str, num_qubits: int, num_params: int) -> None:
    """Make a new gate name acceptable to the IR (the simulator needs a matrix too)."""
    if num_qubits not in (1, 2):
        raise ValueError("only 1- and 2-qubit gates are supported")
    GATE_SPECS[name] = (num_qubits, num_params)


@dataclass(frozen=True)
class GateOp:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "params": list(self.params), "qubits": list(self.qubits)}


@dataclass(frozen=True)
class QuantumCircuit:
    num_qubits: int
    gates: tuple[GateOp, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.num_qubits, int) or self.num_qubits < 1:
            raise CircuitError(f"num_qubits must be a positive integer, got {self.num_qubits!r}")
        for k, g in enumerate(self.gates):
            _check_gate(g, self.num_qubits, k)

    def to_dict(self) -> dict[str, Any]:
        return {"num_qubits": self.num_qubits, "gates": [g.to_dict() for g in self.gates]}


def _check_gate(g: GateOp, n: int, k: int) -> None:
    if g.name not in GATE_SPECS:
        raise CircuitError(f"gate {k}: unknown gate name {g.name!r}")
    arity, nparams = GATE_SPECS[g.name]
    if len(g.qubits) != arity:
        raise CircuitError(f"gate {k}: {g.name} acts on {arity} qubit(s), got {len(g.qubits)}")
    if len(g.params) != nparams:
        raise CircuitError(f"gate {k}: {g.name} takes {nparams} parameter(s), got {len(g.params)}")
    if len(set(g.qubits)) != len(g.qubits):
        raise CircuitError(f"gate {k}: duplicate qubit in {g.name} {list(g.qubits)}")
    for q in g.qubits:
        if not isinstance(q, int) or q < 0 or q >= n:
            raise CircuitError(f"gate {k}: qubit index {q!r} out of range for {n} qubits")


@dataclass(frozen=True)
class CutPoint:
    """Severs the wire of `qubit` immediately after gate `after_gate` acts on it."""

    qubit: int
    after_gate: int

    def to_dict(self) -> dict[str, int]:
        return {"qubit": self.qubit, "after_gate": self.after_gate}


def _parse_gate(raw: Any, k: int) -> GateOp:
    if not isinstance(raw, dict) or "name" not in raw or "qubits" not in raw:
        raise CircuitError(f"gate {k}: expected an object with 'name' and 'qubits'")
    name = raw["name"]
    if not isinstance(name, str):
        raise CircuitError(f"gate {k}: name must be a string")
    qubits = raw["qubits"]
    params = raw.get("params", [])
    if not isinstance(qubits, list) or not all(isinstance(q, int) and not isinstance(q, bool) for q in qubits):
        raise CircuitError(f"gate {k}: qubits must be a list of integers")
    if not isinstance(params, list) or not all(
        isinstance(p, (int, float)) and not isinstance(p, bool) for p in params
    ):
        raise CircuitError(f"gate {k}: params must be a list of numbers")
    return GateOp(name.lower(), tuple(qubits), tuple(float(p) for p in params))


def parse_document(doc: str | bytes | dict) -> tuple[QuantumCircuit, list[CutPoint]]:
    """Parse a circuit JSON document, returning the circuit and any cuts it lists."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise CircuitError(f"malformed circuit document: {exc}") from exc
    if not isinstance(doc, dict):
        raise CircuitError("circuit document must be a JSON object")
    if "num_qubits" not in doc or "gates" not in doc:
        raise CircuitError("circuit document needs 'num_qubits' and 'gates'")
    n = doc["num_qubits"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise CircuitError("num_qubits must be an integer")
    if not isinstance(doc["gates"], list):
        raise CircuitError("gates must be a list")
    circuit = QuantumCircuit(n, tuple(_parse_gate(g, k) for k, g in enumerate(doc["gates"])))
    cuts = []
    for k, c in enumerate(doc.get("cuts", []) or []):
        if not isinstance(c, dict) or not isinstance(c.get("qubit"), int) or not isinstance(c.get("after_gate"), int):
            raise CircuitError(f"cut {k}: expected {{'qubit': int, 'after_gate': int}}")
        cuts.append(CutPoint(c["qubit"], c["after_gate"]))
    return circuit, cuts


def parse_circuit(doc: str | bytes | dict) -> QuantumCircuit:
    return parse_document(doc)[0]


def dump_document(circuit: QuantumCircuit, cuts: Sequence[CutPoint] = ()) -> dict[str, Any]:
    out = circuit.to_dict()
    out["cuts"] = [c.to_dict() for c in cuts]
    return out


@dataclass
class Fragment:
    """A connected piece of the cut circuit.

    Every local line is one wire segment of the original circuit. A line starts
    either in |0> or in a prepare slot and ends either as an output bit or in a
    measure slot.
    """

    circuit: QuantumCircuit
    prep_slots: list[tuple[int, int]]  # (local line, cut id)
    meas_slots: list[tuple[int, int]]  # (local line, cut id)
    output_map: dict[int, int]  # local line -> original qubit
    line_qubits: list[int]  # local line -> original qubit of that segment
    gate_origin: list[int]  # local gate -> index in the original gate list

    @property
    def width(self) -> int:
        return self.circuit.num_qubits

    @property
    def output_lines(self) -> list[int]:
        return sorted(self.output_map)

    @property
    def cut_ids(self) -> list[int]:
        """Distinct cuts touching this fragment, ascending."""
        return sorted({c for _, c in self.prep_slots} | {c for _, c in self.meas_slots})


@dataclass
class Partition:
    circuit: QuantumCircuit
    fragments: list[Fragment]
    cuts: list[CutPoint]
    cut_fragments: list[tuple[int, int]]  # per cut: (upstream fragment, downstream fragment)

    @property
    def n(self) -> int:
        return self.circuit.num_qubits

    @property
    def K(self) -> int:
        return len(self.cuts)

    def summary(self) -> dict[str, Any]:
        return {
            "num_qubits": self.n,
            "num_cuts": self.K,
            "fragments": [
                {
                    "width": f.width,
                    "num_gates": len(f.circuit.gates),
                    "prep_slots": [list(s) for s in f.prep_slots],
                    "meas_slots": [list(s) for s in f.meas_slots],
                    "output_qubits": [f.output_map[l] for l in f.output_lines],
                }
                for f in self.fragments
            ],
            "cut_fragments": [list(p) for p in self.cut_fragments],
        }


def validate_cuts(circuit: QuantumCircuit, cuts: Sequence[CutPoint]) -> None:
    seen = set()
    for k, cut in enumerate(cuts):
        if not 0 <= cut.qubit < circuit.num_qubits:
            raise CutError(f"cut {k}: qubit {cut.qubit} out of range")
        if not 0 <= cut.after_gate < len(circuit.gates):
            raise CutError(f"cut {k}: gate index {cut.after_gate} out of range")
        if cut.qubit not in circuit.gates[cut.after_gate].qubits:
            raise CutError(f"cut {k}: gate {cut.after_gate} does not act on qubit {cut.qubit}")
        if not any(cut.qubit in g.qubits for g in circuit.gates[cut.after_gate + 1 :]):
            raise CutError(f"cut {k}: no later gate acts on qubit {cut.qubit}")
        key = (cut.qubit, cut.after_gate)
        if key in seen:
            raise CutError(f"cut {k}: duplicate cut at qubit {cut.qubit} after gate {cut.after_gate}")
        seen.add(key)


class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller representative so component ids are order-stable
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def apply_cuts(circuit: QuantumCircuit, cuts: Sequence[CutPoint], max_width: int | None = 20) -> Partition:
    """Split `circuit` at `cuts` into fragments (connected components of wire segments)."""
    validate_cuts(circuit, cuts)
    n = circuit.num_qubits
    # cut positions per qubit, sorted by gate index
    per_qubit: dict[int, list[tuple[int, int]]] = {q: [] for q in range(n)}
    for cid, cut in enumerate(cuts):
        per_qubit[cut.qubit].append((cut.after_gate, cid))
    for q in per_qubit:
        per_qubit[q].sort()

    # segment (q, s): s-th piece of qubit q's wire; segment s ends at cut per_qubit[q][s]
    def segment_of(q: int, gate_index: int) -> tuple[int, int]:
        s = 0
        for after, _ in per_qubit[q]:
            if gate_index > after:
                s += 1
        return (q, s)

    segments = [(q, s) for q in range(n) for s in range(len(per_qubit[q]) + 1)]
    uf = _UnionFind(segments)
    gate_segments = []
    for k, g in enumerate(circuit.gates):
        segs = [segment_of(q, k) for q in g.qubits]
        gate_segments.append(segs)
        for other in segs[1:]:
            uf.union(segs[0], other)

    components: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for seg in segments:
        components.setdefault(uf.find(seg), []).append(seg)
    ordered = sorted(components.values(), key=lambda segs: min(segs))

    seg_home: dict[tuple[int, int], tuple[int, int]] = {}
    for fid, segs in enumerate(ordered):
        for line, seg in enumerate(sorted(segs)):
            seg_home[seg] = (fid, line)

    fragments = []
    for fid, segs in enumerate(ordered):
        segs = sorted(segs)
        local_gates, origin = [], []
        for k, g in enumerate(circuit.gates):
            homes = [seg_home[s] for s in gate_segments[k]]
            if homes[0][0] != fid:
                continue
            local_gates.append(GateOp(g.name, tuple(h[1] for h in homes), g.params))
            origin.append(k)
        prep, meas, outputs = [], [], {}
        for line, (q, s) in enumerate(segs):
            if s > 0:
                prep.append((line, per_qubit[q][s - 1][1]))
            if s < len(per_qubit[q]):
                meas.append((line, per_qubit[q][s][1]))
            else:
                outputs[line] = q
        width = len(segs)
        if max_width is not None and width > max_width:
            raise CutError(f"fragment {fid} has {width} qubits, above the simulator limit of {max_width}")
        fragments.append(
            Fragment(
                circuit=QuantumCircuit(width, tuple(local_gates)),
                prep_slots=sorted(prep, key=lambda x: x[1]),
                meas_slots=sorted(meas, key=lambda x: x[1]),
                output_map=outputs,
                line_qubits=[q for q, _ in segs],
                gate_origin=origin,
            )
        )

    cut_fragments = []
    for cid, cut in enumerate(cuts):
        s = [a for a, _ in per_qubit[cut.qubit]].index(cut.after_gate)
        up = seg_home[(cut.qubit, s)][0]
        down = seg_home[(cut.qubit, s + 1)][0]
        cut_fragments.append((up, down))
    return Partition(circuit, fragments, list(cuts), cut_fragments)


def stitch(partition: Partition) -> QuantumCircuit:
    """Replay all fragments in original gate order on the original qubit lines."""
    replay = []
    for frag in partition.fragments:
        for g, k in zip(frag.circuit.gates, frag.gate_origin):
            replay.append((k, GateOp(g.name, tuple(frag.line_qubits[l] for l in g.qubits), g.params)))
    replay.sort(key=lambda item: item[0])
    return QuantumCircuit(partition.n, tuple(g for _, g in replay))


@dataclass(frozen=True)
class Configuration:
    """One fragment variant: a basis per measure slot and a state per prepare slot."""

    fragment: int
    bases: tuple[str, ...]
    states: tuple[str, ...]
    ordinal: int = field(default=-1, compare=False)

    @property
    def key(self) -> tuple[int, tuple[str, ...], tuple[str, ...]]:
        return (self.fragment, self.bases, self.states)

    def label(self) -> str:
        return f"f{self.fragment}[{','.join(self.bases)}|{','.join(self.states)}]"


def prep_states_for(ell: int) -> tuple[str, ...]:
    if ell == 4:
        return ("0", "1", "+", "+i")
    if ell == 6:
        return PREP_STATES
    raise ValueError(f"unsupported number of preparation states: {ell}")


def enumerate_configurations(partition: Partition, prep_states: Sequence[str]) -> list[Configuration]:
    """All fragment configurations, ordered by fragment, then measure slots, then prepare slots."""
    order = {s: k for k, s in enumerate(PREP_STATES)}
    states = sorted(prep_states, key=order.__getitem__)
    out = []
    for fid, frag in enumerate(partition.fragments):
        for bases in itertools.product(BASES, repeat=len(frag.meas_slots)):
            for st in itertools.product(states, repeat=len(frag.prep_slots)):
                out.append(Configuration(fid, bases, st, len(out)))
    return out


def configuration_circuit(fragment: Fragment, config: Configuration) -> QuantumCircuit:
    """The fragment with state preparation prepended and basis rotations appended."""
    gates: list[GateOp] = []
    for (line, _), state in zip(fragment.prep_slots, config.states):
        gates.extend(GateOp(name, (line,)) for name in PREP_GATES[state])
    gates.extend(fragment.circuit.gates)
    for (line, _), basis in zip(fragment.meas_slots, config.bases):
        gates.extend(GateOp(name, (line,)) for name in MEAS_GATES[basis])
    return QuantumCircuit(fragment.width, tuple(gates))
