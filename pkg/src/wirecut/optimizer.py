"""Shot allocation and cut-parameter optimization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuit import Partition, prep_states_for
from .decomposition import (
    CutParameters,
    Scheme,
    build_table,
    l4_subspace_basis,
    l4_subspace_project,
)
from .errors import OptimizationError
from .reconstruction import ProbSource, Reconstructor

logger = logging.getLogger(__name__)

METHODS = ("gradient_descent", "adam_like", "simulated_annealing")


@dataclass
class ShotPlan:
    allocation: np.ndarray  # shots per configuration, enumeration order
    total: int

    def __post_init__(self) -> None:
        self.allocation = np.asarray(self.allocation, dtype=np.int64)
        if int(self.allocation.sum()) != self.total:
            raise ValueError("shot plan does not sum to its total")

    def to_dict(self) -> dict:
        return {"total": self.total, "allocation": self.allocation.tolist()}


def _largest_remainder(targets: np.ndarray, total: int, floor: np.ndarray | None = None) -> np.ndarray:
    """Integers close to `targets` summing to `total`; ties go to the lower index."""
    base = np.floor(targets).astype(np.int64)
    if floor is not None:
        base = np.maximum(base, floor)
    deficit = total - int(base.sum())
    frac = targets - base
    idx = np.arange(len(targets))
    if deficit > 0:
        order = sorted(idx, key=lambda i: (-frac[i], i))
        for i in order[:deficit]:
            base[i] += 1
    while deficit < 0:
        lower = floor if floor is not None else np.zeros_like(base)
        cand = [i for i in idx if base[i] > lower[i]]
        i = min(cand, key=lambda i: (frac[i], -i))
        base[i] -= 1
        frac[i] += 1
        deficit += 1
    return base


def even_allocation(N: int, E: int) -> ShotPlan:
    if E < 1:
        raise ValueError("need at least one configuration")
    return ShotPlan(_largest_remainder(np.full(E, N / E), N), N)


def allocate(f: Sequence[float] | np.ndarray, N: int) -> ShotPlan:
    """Shots proportional to sqrt(f_e), rounded to integers that sum to N.

    Every configuration with f_e > 0 keeps at least one shot whenever the
    budget allows it, so the predicted error stays finite.
    """
    f = np.asarray(f, dtype=float)
    if N < 0:
        raise ValueError("N must be non-negative")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise ValueError("variance coefficients must be finite and non-negative")
    root = np.sqrt(f)
    if root.sum() == 0:
        raise ValueError("all variance coefficients are zero; fall back to even allocation")
    targets = N * root / root.sum()
    live = f > 0
    floor = live.astype(np.int64) if N >= int(live.sum()) else None
    return ShotPlan(_largest_remainder(targets, N, floor), N)


def improvement_ratio(f: Sequence[float] | np.ndarray) -> float:
    """E * sum(f) / (sum sqrt f)^2, the even-to-optimal shot ratio."""
    f = np.asarray(f, dtype=float)
    if f.size == 0:
        raise ValueError("empty coefficient list")
    if np.any(f < 0):
        raise ValueError("coefficients must be non-negative")
    s = np.sqrt(f).sum()
    if s == 0:
        raise ValueError("all coefficients are zero")
    return float(f.size * f.sum() / s**2)


def segment_schedule(N_total: int, prior_ratio: float, segments: int) -> list[int]:
    """Stage budgets: the prior stage first, then `segments` near-equal posterior stages."""
    if not 0.0 <= prior_ratio <= 1.0:
        raise ValueError("prior_ratio must lie in [0, 1]")
    if segments < 1:
        raise ValueError("segments must be >= 1")
    if N_total < segments:
        raise ValueError("budget smaller than the number of segments")
    prior = int(round(prior_ratio * N_total))
    post = N_total - prior
    if post == 0:
        return [prior]
    return [prior] + _largest_remainder(np.full(segments, post / segments), post).tolist()


@dataclass
class OptimizerConfig:
    method: str = "adam_like"
    iterations: int = 100
    step_size: float = 0.05
    epsilon_floor: float = 1e-12
    seed: int = 0
    fd_step: float = 1e-4
    decay: float = 0.01

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown optimizer method {self.method!r}; choose from {METHODS}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.epsilon_floor < 0:
            raise ValueError("epsilon_floor must be >= 0")


@dataclass
class OptimizeResult:
    thetas: list[CutParameters]
    loss: float
    initial_loss: float
    trace: list[float]
    best_trace: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "loss": self.loss,
            "initial_loss": self.initial_loss,
            "trace": self.trace,
            "best_trace": self.best_trace,
        }


class CutObjective:
    """Loss over the cut parameters of every cut."""

    def __init__(
        self,
        partition: Partition,
        P: ProbSource,
        scheme: Scheme | str,
        epsilon_floor: float = 1e-12,
        shots: np.ndarray | None = None,
    ):
        self.scheme = Scheme(scheme)
        if not self.scheme.parameterized:
            raise OptimizationError(f"{self.scheme.value} has no free parameters")
        self.partition = partition
        self.P = P
        self.epsilon_floor = epsilon_floor
        self.shots = None if shots is None else np.asarray(shots, dtype=float)
        self.prep_states = prep_states_for(self.scheme.ell)

    def tables(self, thetas: Sequence[CutParameters]):
        return [build_table(t, self.scheme) for t in thetas]

    def coefficients(self, thetas: Sequence[CutParameters]) -> np.ndarray:
        rec = Reconstructor(self.partition, self.tables(thetas), self.prep_states)
        return rec.variance_coefficients(self.P)

    def __call__(self, thetas: Sequence[CutParameters]) -> float:
        f = self.coefficients(thetas)
        if self.shots is None:
            return float(np.sum(np.sqrt(f + self.epsilon_floor)))
        live = f > 0
        return float(np.sum(f[live] / self.shots[live]))


def loss(
    thetas: Sequence[CutParameters],
    partition: Partition,
    P: ProbSource,
    scheme: Scheme | str,
    epsilon_floor: float = 1e-12,
) -> float:
    """sum_e sqrt(f_e + epsilon_floor) for the tables generated by `thetas`."""
    return CutObjective(partition, P, scheme, epsilon_floor)(thetas)


class _Coordinates:
    """Map between a flat optimization vector and per-cut parameters."""

    def __init__(self, initial: Sequence[CutParameters], scheme: Scheme):
        self.K = len(initial)
        if scheme is Scheme.PARAM_L4:
            self.anchor = [l4_subspace_project(t).to_vector() for t in initial]
            self.basis = l4_subspace_basis()
        else:
            self.anchor = [t.to_vector() for t in initial]
            self.basis = None
        self.per_cut = 24 if self.basis is None else self.basis.shape[1]

    @property
    def size(self) -> int:
        return self.K * self.per_cut

    def thetas(self, z: np.ndarray) -> list[CutParameters]:
        out = []
        for c in range(self.K):
            zc = z[c * self.per_cut : (c + 1) * self.per_cut]
            v = self.anchor[c] + (zc if self.basis is None else self.basis @ zc)
            out.append(CutParameters.from_vector(v))
        return out


def finite_difference_gradient(fun: Callable[[np.ndarray], float], z: np.ndarray, step: float) -> np.ndarray:
    g = np.zeros_like(z)
    for k in range(z.size):
        e = np.zeros_like(z)
        e[k] = step
        g[k] = (fun(z + e) - fun(z - e)) / (2 * step)
    return g


def optimize_parameters(
    initial: Sequence[CutParameters],
    partition: Partition,
    P: ProbSource,
    scheme: Scheme | str,
    config: OptimizerConfig | None = None,
    shots: np.ndarray | None = None,
) -> OptimizeResult:
    """Minimize the cut loss over all cut parameters, returning the best point seen.

    With `shots` given the objective is the predicted error sum_e f_e / N_e
    for that fixed plan instead of sum_e sqrt(f_e).
    """
    config = config or OptimizerConfig()
    scheme = Scheme(scheme)
    if len(initial) != partition.K:
        raise OptimizationError(f"{len(initial)} parameter sets for {partition.K} cuts")
    objective = CutObjective(partition, P, scheme, config.epsilon_floor, shots)
    coords = _Coordinates(initial, scheme)

    def fun(z: np.ndarray) -> float:
        thetas = coords.thetas(z)
        value = objective(thetas)
        if not np.isfinite(value):
            raise OptimizationError(f"non-finite loss at cut parameters {[t.to_vector().tolist() for t in thetas]}")
        return value

    z = np.zeros(coords.size)
    current = fun(z)
    best_z, best = z.copy(), current
    trace, best_trace = [current], [best]
    initial_loss = current
    rng = np.random.default_rng(config.seed)

    if config.method == "adam_like":
        m = np.zeros_like(z)
        v = np.zeros_like(z)
        b1, b2 = 0.9, 0.999
    temperature = 0.1 * max(current, 1e-12)

    for it in range(1, config.iterations + 1):
        lr = config.step_size / (1.0 + config.decay * (it - 1))
        if config.method == "simulated_annealing":
            proposal = z + rng.normal(scale=lr, size=z.shape)
            value = fun(proposal)
            if value <= current or rng.random() < np.exp(-(value - current) / temperature):
                z, current = proposal, value
            temperature *= 0.95
        else:
            g = finite_difference_gradient(fun, z, config.fd_step)
            if config.method == "adam_like":
                m = b1 * m + (1 - b1) * g
                v = b2 * v + (1 - b2) * g * g
                mhat = m / (1 - b1**it)
                vhat = v / (1 - b2**it)
                z = z - lr * mhat / (np.sqrt(vhat) + 1e-12)
            else:
                z = z - lr * g
            current = fun(z)
        if current < best:
            best, best_z = current, z.copy()
        trace.append(current)
        best_trace.append(best)
        logger.debug("iteration %d loss %.6g best %.6g", it, current, best)

    return OptimizeResult(coords.thetas(best_z), best, initial_loss, trace, best_trace)
