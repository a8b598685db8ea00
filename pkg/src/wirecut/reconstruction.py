"""Recombination of fragment statistics and first-order variance propagation.

Every fragment is condensed into a tensor ``W_f`` with one binary axis per
output line and one axis per cut it touches, running over the prepared
states of the scheme. For a measured cut the axis carries the table row
already contracted against the measured outcome frequencies. The full
output distribution is the contraction of all ``W_f`` over the cut axes,
which costs ``ell**K`` products per outcome.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import BASES, PREP_STATES, Configuration, Fragment, Partition, enumerate_configurations
from .decomposition import CoefficientTable
from .errors import ReconstructionError
from .simulator import ConfigurationDistribution, ConfigurationEstimate

_LETTERS = string.ascii_letters

ProbSource = Mapping[tuple, "np.ndarray | ConfigurationEstimate | ConfigurationDistribution"]


def _as_probs(value) -> np.ndarray | None:
    if isinstance(value, (ConfigurationEstimate, ConfigurationDistribution)):
        return value.probs
    return None if value is None else np.asarray(value, dtype=float)


def _line_tensor(probs: np.ndarray, width: int) -> np.ndarray:
    """Reshape a little-endian distribution so that axis l is local line l."""
    if probs.shape != (2**width,):
        raise ReconstructionError(f"expected {2**width} outcome probabilities, got {probs.shape}")
    return probs.reshape([2] * width).transpose(list(range(width))[::-1])


@dataclass
class _FragmentLayout:
    fragment: Fragment
    cut_ids: list[int]
    meas_cut: dict[int, int]  # cut -> local line
    prep_cut: dict[int, int]  # cut -> local line
    out_lines: list[int]
    meas_lines: list[int]

    @classmethod
    def of(cls, frag: Fragment) -> _FragmentLayout:
        meas = {c: l for l, c in frag.meas_slots}
        return cls(
            frag,
            frag.cut_ids,
            meas,
            {c: l for l, c in frag.prep_slots},
            frag.output_lines,
            [l for l, _ in frag.meas_slots],
        )


@dataclass
class Reconstructor:
    """Shared machinery for reconstruction and variance coefficients of one partition."""

    partition: Partition
    tables: Sequence[CoefficientTable]
    prep_states: Sequence[str]
    layouts: list[_FragmentLayout] = field(init=False)
    configs: list[Configuration] = field(init=False)

    def __post_init__(self) -> None:
        if len(self.tables) != self.partition.K:
            raise ReconstructionError(
                f"{len(self.tables)} coefficient tables for a partition with {self.partition.K} cuts"
            )
        if self.partition.n + self.partition.K > len(_LETTERS):
            raise ReconstructionError("too many qubits plus cuts for dense contraction")
        order = {s: k for k, s in enumerate(PREP_STATES)}
        self.prep_states = tuple(sorted(self.prep_states, key=order.__getitem__))
        rows = [order[s] for s in self.prep_states]
        self._state_index = {s: k for k, s in enumerate(self.prep_states)}
        for c, t in enumerate(self.tables):
            stray = set(t.active_rows) - set(rows)
            if stray:
                names = ", ".join(PREP_STATES[i] for i in sorted(stray))
                raise ReconstructionError(f"cut {c}: table uses states ({names}) that are not prepared")
        # per cut: (ell, 6) block of the table restricted to prepared states
        self._rows = [np.asarray(t.r[rows]) for t in self.tables]
        self.layouts = [_FragmentLayout.of(f) for f in self.partition.fragments]
        self.configs = enumerate_configurations(self.partition, self.prep_states)
        n = self.partition.n
        self._qletter = {q: _LETTERS[q] for q in range(n)}
        self._cletter = {c: _LETTERS[n + c] for c in range(self.partition.K)}

    @property
    def ell(self) -> int:
        return len(self.prep_states)

    def _basis_block(self, cut: int, basis: str) -> np.ndarray:
        k = BASES.index(basis)
        return self._rows[cut][:, 2 * k : 2 * k + 2]

    def _probs_for(self, P: ProbSource, config: Configuration) -> np.ndarray:
        try:
            probs = _as_probs(P[config.key])
        except KeyError:
            raise ReconstructionError(f"no estimate for configuration {config.label()}") from None
        if probs is None:
            raise ReconstructionError(f"configuration {config.label()} has no shots and no fallback value")
        return probs

    def fragment_tensor(self, fid: int, P: ProbSource) -> np.ndarray:
        lay = self.layouts[fid]
        frag = lay.fragment
        m = frag.width
        ell = self.ell
        W = np.zeros([2] * len(lay.out_lines) + [ell] * len(lay.cut_ids))
        line_letters = _LETTERS[:m]
        for config in self.configs:
            if config.fragment != fid:
                continue
            T = _line_tensor(self._probs_for(P, config), m)
            prep_index = {c: self._state_index[s] for (_, c), s in zip(frag.prep_slots, config.states)}
            operands, subs = [T], [line_letters]
            out_sub = "".join(line_letters[l] for l in lay.out_lines)
            for (line, c), basis in zip(frag.meas_slots, config.bases):
                block = self._basis_block(c, basis)
                if c in prep_index:
                    operands.append(block[prep_index[c]])
                    subs.append(line_letters[line])
                else:
                    row = _LETTERS[m + c]
                    operands.append(block)
                    subs.append(row + line_letters[line])
                    out_sub += row
            contrib = np.einsum(",".join(subs) + "->" + out_sub, *operands)
            index = [slice(None)] * len(lay.out_lines)
            for c in lay.cut_ids:
                index.append(prep_index[c] if c in prep_index else slice(None))
            W[tuple(index)] += contrib
        return W

    def fragment_tensors(self, P: ProbSource) -> list[np.ndarray]:
        return [self.fragment_tensor(f, P) for f in range(len(self.layouts))]

    def _subscript(self, fid: int) -> str:
        lay = self.layouts[fid]
        qubits = "".join(self._qletter[lay.fragment.output_map[l]] for l in lay.out_lines)
        return qubits + "".join(self._cletter[c] for c in lay.cut_ids)

    def contract(self, tensors: Sequence[np.ndarray]) -> np.ndarray:
        n = self.partition.n
        out = "".join(self._qletter[q] for q in reversed(range(n)))
        subs = ",".join(self._subscript(f) for f in range(len(tensors)))
        return np.einsum(subs + "->" + out, *tensors, optimize="greedy").reshape(-1)

    def reconstruct(self, P: ProbSource, outcomes: Sequence[int] | None = None) -> np.ndarray:
        p = self.contract(self.fragment_tensors(P))
        if outcomes is None:
            return p
        return p[np.asarray(outcomes, dtype=int)]

    def environment(self, fid: int, tensors: Sequence[np.ndarray]) -> tuple[np.ndarray, list[int], list[int]]:
        """Derivative of the full distribution with respect to ``W_fid``.

        Returns (env, rest_qubits, cut_ids) where env has one binary axis per
        qubit not produced by this fragment (descending qubit order) followed
        by one axis per cut of the fragment.
        """
        lay = self.layouts[fid]
        mine = set(lay.fragment.output_map.values())
        rest = [q for q in reversed(range(self.partition.n)) if q not in mine]
        others = [f for f in range(len(tensors)) if f != fid]
        present = set()
        for f in others:
            present.update(self.layouts[f].cut_ids)
        shared = [c for c in lay.cut_ids if c in present]
        out = "".join(self._qletter[q] for q in rest) + "".join(self._cletter[c] for c in shared)
        if others:
            subs = ",".join(self._subscript(f) for f in others)
            env = np.einsum(subs + "->" + out, *[tensors[f] for f in others], optimize="greedy")
        else:
            env = np.ones(())
        # cuts with both ends inside this fragment do not reach the environment
        shape = list(env.shape)
        full_shape = shape[: len(rest)]
        pos = len(rest)
        for c in lay.cut_ids:
            if c in present:
                full_shape.append(shape[pos])
                pos += 1
            else:
                full_shape.append(1)
        env = env.reshape(full_shape)
        env = np.broadcast_to(env, full_shape[: len(rest)] + [self.ell] * len(lay.cut_ids))
        return env, rest, lay.cut_ids

    def config_sensitivity(self, config: Configuration, env: np.ndarray) -> np.ndarray:
        """H[rest outcome, measured bits]: d p / d q for one configuration.

        The derivative of p(Y) with respect to the frequency of local outcome o
        is H[Y_rest, o_meas] when Y agrees with o on the fragment's output lines
        and zero otherwise.
        """
        lay = self.layouts[config.fragment]
        frag = lay.fragment
        nrest = env.ndim - len(lay.cut_ids)
        m = frag.width
        prep_index = {c: self._state_index[s] for (_, c), s in zip(frag.prep_slots, config.states)}
        index = [slice(None)] * nrest
        for c in lay.cut_ids:
            index.append(prep_index[c] if c in prep_index else slice(None))
        E = env[tuple(index)]
        rest_sub = _LETTERS[m + self.partition.K : m + self.partition.K + nrest]
        sub = rest_sub + "".join(_LETTERS[m + c] for c in lay.cut_ids if c not in prep_index)
        operands, subs = [E], [sub]
        out = rest_sub
        for (line, c), basis in zip(frag.meas_slots, config.bases):
            block = self._basis_block(c, basis)
            if c in prep_index:
                operands.append(block[prep_index[c]])
                subs.append(_LETTERS[line])
            else:
                operands.append(block)
                subs.append(_LETTERS[m + c] + _LETTERS[line])
            out += _LETTERS[line]
        H = np.einsum(",".join(subs) + "->" + out, *operands)
        return H.reshape(2**nrest, 2 ** len(lay.meas_lines))

    def _split_probs(self, config: Configuration, probs: np.ndarray) -> np.ndarray:
        """Frequencies as a (output bits, measured bits) matrix."""
        lay = self.layouts[config.fragment]
        T = _line_tensor(probs, lay.fragment.width)
        # descending output qubit order matches the environment's rest-axis convention
        outs = sorted(lay.out_lines, key=lambda l: -lay.fragment.output_map[l])
        T = T.transpose(outs + lay.meas_lines)
        return T.reshape(2 ** len(outs), 2 ** len(lay.meas_lines))

    def variance_coefficients(self, P: ProbSource, exact: set | None = None) -> np.ndarray:
        """f_e for every configuration, in enumeration order."""
        tensors = self.fragment_tensors(P)
        f = np.zeros(len(self.configs))
        envs = {}
        for config in self.configs:
            if exact and config.key in exact:
                continue
            fid = config.fragment
            if fid not in envs:
                envs[fid] = self.environment(fid, tensors)[0]
            H = self.config_sensitivity(config, envs[fid])
            Q = self._split_probs(config, self._probs_for(P, config))
            first = float(np.sum((H * H) @ Q.sum(axis=0)))
            M = H @ Q.T
            f[config.ordinal] = max(first - float(np.sum(M * M)), 0.0)
        return f

    def outcome_gradient(self, P: ProbSource, config: Configuration) -> np.ndarray:
        """Dense d p(Y) / d q_config(o) as a (2**n, 2**width) array. Intended for checks on small circuits."""
        tensors = self.fragment_tensors(P)
        env, rest, _ = self.environment(config.fragment, tensors)
        H = self.config_sensitivity(config, env)
        lay = self.layouts[config.fragment]
        frag = lay.fragment
        n = self.partition.n
        G = np.zeros((2**n, 2**frag.width))
        for Y in range(2**n):
            r = 0
            for q in rest:
                r = (r << 1) | ((Y >> q) & 1)
            base = 0
            for l in lay.out_lines:
                base |= ((Y >> frag.output_map[l]) & 1) << l
            for mb in range(2 ** len(lay.meas_lines)):
                o = base
                # meas bit order in H: first listed meas line is the most significant
                for k, l in enumerate(lay.meas_lines):
                    bit = (mb >> (len(lay.meas_lines) - 1 - k)) & 1
                    o |= bit << l
                G[Y, o] = H[r, mb]
        return G


@dataclass
class VarianceModel:
    configs: list[Configuration]
    f: np.ndarray

    def predicted_err(self, shots: Sequence[int] | np.ndarray) -> float:
        return predicted_err(self.f, shots)

    def to_dict(self) -> dict:
        return {"f": self.f.tolist()}


def reconstruct(
    partition: Partition,
    tables: Sequence[CoefficientTable],
    P: ProbSource,
    prep_states: Sequence[str],
    outcomes: Sequence[int] | None = None,
) -> np.ndarray:
    """Output distribution of the uncut circuit (little-endian vector, or the queried entries)."""
    return Reconstructor(partition, tables, prep_states).reconstruct(P, outcomes)


def variance_coefficients(
    partition: Partition,
    tables: Sequence[CoefficientTable],
    P: ProbSource,
    prep_states: Sequence[str],
    exact: set | None = None,
) -> VarianceModel:
    rec = Reconstructor(partition, tables, prep_states)
    return VarianceModel(rec.configs, rec.variance_coefficients(P, exact))


def predicted_err(f: Sequence[float] | np.ndarray, shots: Sequence[int] | np.ndarray) -> float:
    """sum_e f_e / N_e; configurations with f_e == 0 may have N_e == 0."""
    f = np.asarray(f, dtype=float)
    N = np.asarray(shots, dtype=float)
    if f.shape != N.shape:
        raise ValueError("f and shot plan have different lengths")
    live = f > 0
    if np.any(N[live] <= 0):
        bad = int(np.flatnonzero(live & (N <= 0))[0])
        raise ValueError(f"configuration {bad} has f_e > 0 but no shots")
    return float(np.sum(f[live] / N[live]))
