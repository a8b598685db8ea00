"""Quasiprobability coefficient tables for single-wire cuts.

A table ``r`` (6x6, rows = prepared states, columns = measurement outcomes)
is valid when ``sum_ij r[i, j] Tr[A O_j] rho_i == A`` for every 2x2 matrix A.
Rows follow ``|0>, |1>, |+>, |->, |+i>, |-i>`` and columns follow
``X+, X-, Y+, Y-, Z+, Z-``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .circuit import PREP_STATES
from .errors import TableError

MEAS_OUTCOMES = ("X+", "X-", "Y+", "Y-", "Z+", "Z-")
DEFAULT_TOL = 1e-12

_S = 1 / np.sqrt(2)
_KETS = np.array(
    [[1, 0], [0, 1], [_S, _S], [_S, -_S], [_S, 1j * _S], [_S, -1j * _S]],
    dtype=complex,
)
# rank-1 projectors, indexed like PREP_STATES
STATE_PROJECTORS = np.einsum("ka,kb->kab", _KETS, _KETS.conj())
# O_j in column order X+, X-, Y+, Y-, Z+, Z-
OUTCOME_PROJECTORS = STATE_PROJECTORS[[2, 3, 4, 5, 0, 1]]


class Scheme(str, Enum):
    L8_PRESET = "L8_PRESET"
    L4_PRESET = "L4_PRESET"
    PARAM_L6 = "PARAM_L6"
    PARAM_L4 = "PARAM_L4"

    @property
    def ell(self) -> int:
        return 4 if self in (Scheme.L4_PRESET, Scheme.PARAM_L4) else 6

    @property
    def parameterized(self) -> bool:
        return self in (Scheme.PARAM_L4, Scheme.PARAM_L6)


# Rows dropped by the four-state schemes: |-> and |-i>.
L4_ZERO_ROWS = (3, 5)

# Expansion A = (Tr[A] I + Tr[AX] X + Tr[AY] Y + Tr[AZ] Z) / 2 written on Pauli projectors.
_L8 = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        [0.5, -0.5, 0.0, 0.0, 0.0, 0.0],
        [-0.5, 0.5, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.5, -0.5, 0.0, 0.0],
        [0.0, 0.0, -0.5, 0.5, 0.0, 0.0],
    ]
)
# Four-state scheme: |0><0| and |1><1| absorb the identity parts of the X and Y terms.
_L4 = np.array(
    [
        [-0.5, 0.5, -0.5, 0.5, 1.0, 0.0],
        [-0.5, 0.5, -0.5, 0.5, 0.0, 1.0],
        [1.0, -1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class CutParameters:
    """The 24 free shifts of one cut's table: a, b act on rows, c, d on columns."""

    a: tuple[float, ...] = (0.0,) * 6
    b: tuple[float, ...] = (0.0,) * 6
    c: tuple[float, ...] = (0.0,) * 6
    d: tuple[float, ...] = (0.0,) * 6

    def __post_init__(self) -> None:
        for name in "abcd":
            v = getattr(self, name)
            if len(v) != 6:
                raise TableError(f"parameter block {name} needs 6 entries, got {len(v)}")
            object.__setattr__(self, name, tuple(float(x) for x in v))

    @classmethod
    def zeros(cls) -> CutParameters:
        return cls()

    @classmethod
    def from_vector(cls, v) -> CutParameters:
        v = np.asarray(v, dtype=float).ravel()
        if v.shape != (24,):
            raise TableError(f"expected 24 cut parameters, got {v.shape[0]}")
        return cls(tuple(v[0:6]), tuple(v[6:12]), tuple(v[12:18]), tuple(v[18:24]))

    def to_vector(self) -> np.ndarray:
        return np.array(self.a + self.b + self.c + self.d, dtype=float)


@lru_cache(maxsize=None)
def _shift_operator() -> np.ndarray:
    """Linear map theta (24) -> table shift (36, row-major)."""
    L = np.zeros((6, 6, 24))
    for i in range(6):
        a, b = i, 6 + i
        L[i, 0:2, a] -= 1
        L[i, 2:4, b] -= 1
        L[i, 4:6, a] += 1
        L[i, 4:6, b] += 1
    for j in range(6):
        c, d = 12 + j, 18 + j
        L[0:2, j, c] -= 1
        L[2:4, j, d] -= 1
        L[4:6, j, c] += 1
        L[4:6, j, d] += 1
    L.setflags(write=False)
    return L.reshape(36, 24)


def shift_operator() -> np.ndarray:
    return _shift_operator()


@dataclass(frozen=True)
class CoefficientTable:
    r: np.ndarray
    scheme: Scheme
    theta: CutParameters | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        r = np.array(self.r, dtype=float)
        if r.shape != (6, 6):
            raise TableError(f"coefficient table must be 6x6, got {r.shape}")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def active_rows(self) -> tuple[int, ...]:
        return tuple(i for i in range(6) if np.any(self.r[i] != 0.0))

    @property
    def active_states(self) -> tuple[str, ...]:
        return tuple(PREP_STATES[i] for i in self.active_rows)

    def to_dict(self) -> dict:
        out = {"scheme": self.scheme.value, "r": self.r.tolist()}
        if self.theta is not None:
            out["theta"] = self.theta.to_vector().tolist()
        return out


def _table_from_vector(theta_vec: np.ndarray) -> np.ndarray:
    return _L8 + (shift_operator() @ theta_vec).reshape(6, 6)


def build_table(theta: CutParameters, mode: Scheme | str = Scheme.PARAM_L6, project: bool = True) -> CoefficientTable:
    """Table generated by `theta` around the eight-term expansion.

    In PARAM_L4 mode `theta` must lie in the subspace that zeroes rows |-> and
    |-i>; with ``project=True`` it is moved there first.
    """
    mode = Scheme(mode)
    if not mode.parameterized:
        raise TableError(f"build_table needs a parameterized mode, got {mode.value}")
    vec = theta.to_vector()
    if not np.all(np.isfinite(vec)):
        raise TableError("cut parameters must be finite")
    if mode is Scheme.PARAM_L4:
        residual = l4_violation(vec)
        if residual > 1e-9:
            if not project:
                raise TableError(f"parameters are outside the four-state subspace (violation {residual:.3g})")
            theta = l4_subspace_project(theta)
            vec = theta.to_vector()
    r = _table_from_vector(vec)
    if mode is Scheme.PARAM_L4:
        r[list(L4_ZERO_ROWS)] = 0.0
    return CoefficientTable(r, mode, theta)


def preset_table(name: Scheme | str) -> CoefficientTable:
    name = Scheme(name)
    if name is Scheme.L8_PRESET:
        return CoefficientTable(_L8.copy(), name)
    if name is Scheme.L4_PRESET:
        return CoefficientTable(_L4.copy(), name)
    raise TableError(f"{name.value} is not a preset")


def reconstruct_matrix(r: np.ndarray, A: np.ndarray) -> np.ndarray:
    """sum_ij r[i, j] Tr[A O_j] rho_i."""
    traces = np.einsum("ab,jba->j", A, OUTCOME_PROJECTORS)
    return np.einsum("ij,j,iab->ab", r, traces, STATE_PROJECTORS)


def validate_table(table: CoefficientTable | np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """Largest elementwise residual over the four basis matrices |a><b|."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = table.r if isinstance(table, CoefficientTable) else np.asarray(table, dtype=float)
    worst = 0.0
    for a in range(2):
        for b in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[a, b] = 1.0
            worst = max(worst, float(np.max(np.abs(reconstruct_matrix(r, E) - E))))
    return worst


def is_valid(table: CoefficientTable, tol: float = DEFAULT_TOL) -> bool:
    return validate_table(table, tol) <= tol


@lru_cache(maxsize=None)
def _l4_system() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    L = shift_operator().reshape(6, 6, 24)
    A = L[list(L4_ZERO_ROWS)].reshape(12, 24)
    rhs = -_L8[list(L4_ZERO_ROWS)].reshape(12)
    return A, rhs, np.linalg.pinv(A)


def l4_violation(theta_vec: np.ndarray) -> float:
    A, rhs, _ = _l4_system()
    return float(np.max(np.abs(A @ theta_vec - rhs)))


def l4_subspace_project(theta: CutParameters) -> CutParameters:
    """Nearest parameters (Euclidean) whose table has zero |-> and |-i> rows."""
    A, rhs, pinv = _l4_system()
    v = theta.to_vector()
    return CutParameters.from_vector(v - pinv @ (A @ v - rhs))


def l4_subspace_basis() -> np.ndarray:
    """Orthonormal columns spanning the directions that keep rows |-> and |-i> zero."""
    A, _, _ = _l4_system()
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10))
    return vt[rank:].T


def l4_subspace_dimension() -> int:
    return l4_subspace_basis().shape[1]


def effective_dimension(mode: Scheme | str) -> int:
    """Distinct tables reachable by the mode's parameters (an affine dimension)."""
    mode = Scheme(mode)
    L = shift_operator()
    if mode is Scheme.PARAM_L6:
        return int(np.linalg.matrix_rank(L))
    if mode is Scheme.PARAM_L4:
        return int(np.linalg.matrix_rank(L @ l4_subspace_basis()))
    return 0


def tables_for(scheme: Scheme | str, thetas: list[CutParameters] | None, num_cuts: int) -> list[CoefficientTable]:
    """One table per cut for `scheme`; parameterized schemes default to zero parameters."""
    scheme = Scheme(scheme)
    if not scheme.parameterized:
        return [preset_table(scheme)] * num_cuts
    if thetas is None:
        thetas = [CutParameters.zeros()] * num_cuts
    if len(thetas) != num_cuts:
        raise TableError(f"got {len(thetas)} parameter sets for {num_cuts} cuts")
    return [build_table(t, scheme) for t in thetas]
