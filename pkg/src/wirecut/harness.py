"""End-to-end workflow: prior shots, optional cut optimization, allocated posterior shots, recombination."""

from __future__ import annotations

import json
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .circuit import (
    Configuration,
    CutPoint,
    Partition,
    QuantumCircuit,
    apply_cuts,
    enumerate_configurations,
    parse_document,
    prep_states_for,
    stitch,
)
from .decomposition import CutParameters, Scheme, tables_for, validate_table
from .errors import InputError, WirecutError
from .optimizer import (
    OptimizerConfig,
    ShotPlan,
    allocate,
    even_allocation,
    improvement_ratio,
    optimize_parameters,
    segment_schedule,
)
from .reconstruction import Reconstructor, predicted_err
from .simulator import (
    DEFAULT_MAX_QUBITS,
    ConfigurationDistribution,
    ConfigurationEstimate,
    ShotRecord,
    derive_seed,
    estimate,
    probabilities,
    sample,
    simulate_fragment,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SPARSE_ABOVE = 2**16
PRESETS = ("baseline", "A", "B", "C", "D", "E", "F", "custom")

# strategy: "even" spends all shots in one even stage; "posterior" runs prior + allocated stages
PRESET_TABLE: dict[str, dict[str, Any]] = {
    "baseline": dict(scheme="L4_PRESET", strategy="even", optimize=False),
    "A": dict(scheme="PARAM_L4", strategy="posterior", prior_ratio=0.2, segments=1, optimize=False),
    "B": dict(scheme="PARAM_L4", strategy="posterior", prior_ratio=0.2, segments=5, optimize=False),
    "C": dict(scheme="PARAM_L4", strategy="posterior", prior_ratio=0.2, segments=1, optimize=True),
    "D": dict(scheme="PARAM_L6", strategy="posterior", prior_ratio=0.2, segments=1, optimize=True),
    "E": dict(scheme="PARAM_L4", strategy="even", optimize=True),
    "F": dict(scheme="PARAM_L6", strategy="even", optimize=True),
}


@dataclass
class RunConfig:
    circuit: QuantumCircuit | None = None
    cuts: list[CutPoint] = field(default_factory=list)
    circuit_path: str | None = None
    preset: str = "A"
    total_shots: int | None = None  # default 1000 * E
    prior_ratio: float = 0.2
    segments: int = 1
    scheme: str = "PARAM_L4"
    strategy: str = "posterior"
    optimize: bool = False
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    out: str | None = None
    repetitions: int = 0
    exact: bool = False
    workers: int = 1
    max_qubits: int = DEFAULT_MAX_QUBITS
    include_counts: bool = False
    verify: bool = True

    def __post_init__(self) -> None:
        if self.preset not in PRESETS:
            raise InputError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        try:
            Scheme(self.scheme)
        except ValueError:
            raise InputError(f"unknown scheme {self.scheme!r}") from None
        if self.strategy not in ("even", "posterior"):
            raise InputError(f"unknown strategy {self.strategy!r}")
        if not 0.0 <= self.prior_ratio <= 1.0:
            raise InputError("prior ratio must lie in [0, 1]")
        if self.segments < 1:
            raise InputError("segments must be >= 1")
        if self.total_shots is not None and self.total_shots < 1:
            raise InputError("total shots must be positive")

    @classmethod
    def from_preset(cls, preset: str, **overrides) -> RunConfig:
        """Expand a named preset; explicit overrides win for `custom` only."""
        if preset not in PRESETS:
            raise InputError(f"unknown preset {preset!r}; choose from {PRESETS}")
        fields = dict(PRESET_TABLE.get(preset, {}))
        if preset == "custom":
            fields.update({k: v for k, v in overrides.items() if v is not None})
        else:
            fixed = set(fields)
            fields.update({k: v for k, v in overrides.items() if v is not None and k not in fixed})
        return cls(preset=preset, **fields)

    def load_circuit(self) -> tuple[QuantumCircuit, list[CutPoint]]:
        if self.circuit is not None:
            return self.circuit, list(self.cuts)
        if self.circuit_path is None:
            raise InputError("no circuit given")
        try:
            text = Path(self.circuit_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read circuit file: {exc}") from exc
        circuit, cuts = parse_document(text)
        return circuit, cuts or list(self.cuts)

    def echo(self) -> dict[str, Any]:
        return {
            "circuit_path": self.circuit_path,
            "preset": self.preset,
            "total_shots": self.total_shots,
            "prior_ratio": self.prior_ratio,
            "segments": self.segments,
            "scheme": self.scheme,
            "strategy": self.strategy,
            "optimize": self.optimize,
            "optimizer": asdict(self.optimizer),
            "seed": self.seed,
            "exact": self.exact,
        }


@dataclass
class RunResult:
    """In-memory outcome of one pipeline run; `report()` renders the JSON document."""

    config: RunConfig
    partition: Partition
    configs: list[Configuration]
    stages: list[dict[str, Any]]
    thetas: list[CutParameters] | None
    tables: list
    estimates: dict[tuple, ConfigurationEstimate]
    distribution: np.ndarray
    f: np.ndarray
    shots: np.ndarray
    predicted_err: float
    optimization: dict[str, Any] | None
    reference: np.ndarray | None
    records: list[ShotRecord]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def total_shots(self) -> int:
        return int(self.shots.sum())

    def report(self, timings: bool = False) -> dict[str, Any]:
        raw = self.distribution
        clamped = np.clip(raw, 0.0, 1.0)
        s = clamped.sum()
        if s > 0:
            clamped = clamped / s
        out: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.echo(),
            "partition": {**self.partition.summary(), "num_configurations": len(self.configs)},
            "configurations": [c.label() for c in self.configs],
            "stages": self.stages,
            "shots_per_configuration": self.shots.tolist(),
            "total_shots": self.total_shots,
            "thetas": None if self.thetas is None else [t.to_vector().tolist() for t in self.thetas],
            "tables": [t.r.tolist() for t in self.tables],
            "distribution": {
                "raw": _emit(raw),
                "clamped": _emit(clamped),
                "clamping_applied": bool(np.any(raw < 0) or np.any(raw > 1)),
            },
            "variance_coefficients": self.f.tolist(),
            "predicted_err": self.predicted_err,
            "improvement_ratio_bound": _safe_ratio(self.f),
        }
        if self.optimization is not None:
            out["optimization"] = self.optimization
        if self.reference is not None:
            diff = raw - self.reference
            out["verification"] = {
                "max_abs_error": float(np.max(np.abs(diff))),
                "total_variation_distance": float(0.5 * np.sum(np.abs(diff))),
                "squared_error": float(np.sum(diff * diff)),
            }
        if self.config.include_counts:
            out["records"] = [r.to_dict() for r in self.records]
        if timings:
            out["timings"] = self.timings
        return out


def _safe_ratio(f: np.ndarray) -> float | None:
    try:
        return improvement_ratio(f)
    except ValueError:
        return None


def _emit(p: np.ndarray) -> list[float] | dict[str, float]:
    if p.size <= SPARSE_ABOVE:
        return p.tolist()
    nz = np.flatnonzero(p)
    return {str(int(i)): float(p[i]) for i in nz}


class Experiment:
    """A parsed, partitioned circuit with cached exact configuration distributions.

    Repeated runs (different seeds) reuse the cached simulations.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        circuit, cuts = config.load_circuit()
        if not cuts:
            raise InputError("the circuit has no cuts; add a 'cuts' list or pick suggested cuts")
        self.circuit = circuit
        self.partition = apply_cuts(circuit, cuts, max_width=config.max_qubits)
        self.scheme = Scheme(config.scheme)
        self.prep_states = prep_states_for(self.scheme.ell)
        self.configs = enumerate_configurations(self.partition, self.prep_states)
        self._pool_size = max(1, int(config.workers))
        by_fragment = [[c for c in self.configs if c.fragment == fid] for fid in range(len(self.partition.fragments))]
        batches = self._map(
            lambda cs: simulate_fragment(self.partition.fragments[cs[0].fragment], cs, config.max_qubits) if cs else [],
            by_fragment,
        )
        self.exact = [None] * self.E
        for batch in batches:
            for dist in batch:
                self.exact[dist.config.ordinal] = dist.probs
        self.reference = probabilities(circuit, None) if config.verify and circuit.num_qubits <= config.max_qubits else None

    @property
    def E(self) -> int:
        return len(self.configs)

    def _map(self, fn, items=None) -> list:
        items = self.configs if items is None else items
        if self._pool_size == 1:
            return [fn(c) for c in items]
        with ThreadPoolExecutor(self._pool_size) as pool:
            return list(pool.map(fn, items))

    def exact_source(self) -> dict[tuple, np.ndarray]:
        return {c.key: self.exact[c.ordinal] for c in self.configs}

    def _sample_stage(self, plan: np.ndarray, seed: int, stage: int) -> list[ShotRecord]:
        def draw(c: Configuration) -> ShotRecord:
            n = int(plan[c.ordinal])
            if self.config.exact:
                # expected counts stand in for sampled ones; exact mode never samples
                return ShotRecord(c, {}, n)
            return sample(ConfigurationDistribution(c, self.exact[c.ordinal]), n, derive_seed(seed, c.ordinal, stage))

        return self._map(draw)

    def _estimates(self, records: dict[int, list[ShotRecord]]) -> dict[tuple, ConfigurationEstimate]:
        out = {}
        for c in self.configs:
            size = 2 ** self.partition.fragments[c.fragment].width
            recs = records[c.ordinal]
            n = sum(r.n_shots for r in recs)
            if self.config.exact:
                probs = self.exact[c.ordinal] if n > 0 else None
                out[c.key] = ConfigurationEstimate(c, probs, n)
            else:
                out[c.key] = estimate(recs, size) if recs else ConfigurationEstimate(c, None, 0)
        return out

    def _with_fallback(self, est: dict[tuple, ConfigurationEstimate]) -> dict[tuple, np.ndarray]:
        """Estimates for modelling; configurations without shots fall back to a uniform distribution."""
        out = {}
        for c in self.configs:
            e = est[c.key]
            if e.absent:
                size = 2 ** self.partition.fragments[c.fragment].width
                out[c.key] = np.full(size, 1.0 / size)
            else:
                out[c.key] = e.probs
        return out

    def run(self, seed: int | None = None) -> RunResult:
        cfg = self.config
        seed = cfg.seed if seed is None else seed
        t_start = time.perf_counter()
        N = cfg.total_shots if cfg.total_shots is not None else 1000 * self.E
        records: dict[int, list[ShotRecord]] = {c.ordinal: [] for c in self.configs}
        flat_records: list[ShotRecord] = []
        shots = np.zeros(self.E, dtype=np.int64)
        stages: list[dict[str, Any]] = []
        thetas = [CutParameters.zeros() for _ in range(self.partition.K)] if self.scheme.parameterized else None
        optimization = None
        timings: dict[str, float] = {}

        def run_stage(kind: str, plan: ShotPlan) -> None:
            idx = len(stages)
            recs = self._sample_stage(plan.allocation, seed, idx)
            for r in recs:
                if r.n_shots:
                    records[r.config.ordinal].append(r)
                    flat_records.append(r)
            shots[:] += plan.allocation
            stages.append({"stage": idx, "kind": kind, "budget": plan.total, "allocation": plan.allocation.tolist()})

        def model(est, thetas_now):
            rec = Reconstructor(self.partition, tables_for(self.scheme, thetas_now, self.partition.K), self.prep_states)
            return rec.variance_coefficients(self._with_fallback(est))

        if cfg.strategy == "even":
            run_stage("even", even_allocation(N, self.E))
        else:
            budgets = segment_schedule(N, cfg.prior_ratio, cfg.segments)
            if budgets[0] < self.E:
                warnings.warn(
                    f"prior budget {budgets[0]} leaves some of the {self.E} configurations without prior shots",
                    RuntimeWarning,
                    stacklevel=2,
                )
            run_stage("prior", even_allocation(budgets[0], self.E))
            if cfg.optimize and thetas is not None:
                t0 = time.perf_counter()
                res = optimize_parameters(
                    thetas, self.partition, self._with_fallback(self._estimates(records)), self.scheme, cfg.optimizer
                )
                thetas = res.thetas
                optimization = {"objective": "loss", **res.to_dict()}
                timings["optimize"] = time.perf_counter() - t0
            for budget in budgets[1:]:
                f = model(self._estimates(records), thetas)
                try:
                    plan = allocate(f, budget)
                except ValueError:
                    plan = even_allocation(budget, self.E)
                run_stage("posterior", plan)

        estimates = self._estimates(records)
        if cfg.strategy == "even" and cfg.optimize and thetas is not None:
            t0 = time.perf_counter()
            res = optimize_parameters(
                thetas, self.partition, self._with_fallback(estimates), self.scheme, cfg.optimizer, shots=shots
            )
            thetas = res.thetas
            optimization = {"objective": "predicted_err", **res.to_dict()}
            timings["optimize"] = time.perf_counter() - t0

        tables = tables_for(self.scheme, thetas, self.partition.K)
        rec = Reconstructor(self.partition, tables, self.prep_states)
        missing = [c.label() for c in self.configs if estimates[c.key].absent]
        if missing:
            raise WirecutError(f"configurations without any shots: {', '.join(missing[:5])}")
        distribution = rec.reconstruct(estimates)
        f = rec.variance_coefficients(estimates)
        try:
            err = predicted_err(f, shots)
        except ValueError:
            err = float("inf")
        timings["total"] = time.perf_counter() - t_start
        return RunResult(
            config=cfg,
            partition=self.partition,
            configs=self.configs,
            stages=stages,
            thetas=thetas,
            tables=tables,
            estimates=estimates,
            distribution=distribution,
            f=f,
            shots=shots,
            predicted_err=err,
            optimization=optimization,
            reference=self.reference,
            records=flat_records,
            timings=timings,
        )


def run_pipeline(config: RunConfig) -> dict[str, Any]:
    """Run the configured workflow once and return the report document."""
    return Experiment(config).run().report()


def repetition_seed(master: int, rep: int) -> int:
    return int(derive_seed(master, 0xE7A1, rep).generate_state(1, np.uint64)[0])


@dataclass
class VarianceEvaluation:
    preset: str
    repetitions: int
    empirical_err: float
    mean_predicted_err: float
    distributions: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {
            "preset": self.preset,
            "repetitions": self.repetitions,
            "empirical_err": self.empirical_err,
            "mean_predicted_err": self.mean_predicted_err,
        }


def measure_variance(config: RunConfig, repetitions: int, experiment: Experiment | None = None) -> VarianceEvaluation:
    """Empirical Err: per-outcome sample variance across repeated runs, summed over outcomes."""
    if repetitions < 2:
        raise InputError("need at least 2 repetitions")
    exp = experiment or Experiment(config)
    dists, preds = [], []
    for rep in range(repetitions):
        res = exp.run(repetition_seed(config.seed, rep))
        dists.append(res.distribution)
        preds.append(res.predicted_err)
    D = np.array(dists)
    err = float(np.sum(np.var(D, axis=0, ddof=1)))
    return VarianceEvaluation(config.preset, repetitions, err, float(np.mean(preds)), D)


def evaluate_variance(
    config: RunConfig, repetitions: int, compare: str | None = None
) -> dict[str, Any]:
    """Empirical error of `config`, optionally against another preset on the same circuit and budget."""
    main = measure_variance(config, repetitions)
    out: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "config": config.echo(), "evaluation": main.to_dict()}
    if compare is not None:
        other_cfg = RunConfig.from_preset(
            compare,
            circuit=config.circuit,
            cuts=config.cuts,
            circuit_path=config.circuit_path,
            total_shots=config.total_shots,
            seed=config.seed,
            exact=config.exact,
            workers=config.workers,
            max_qubits=config.max_qubits,
            optimizer=config.optimizer,
        )
        other = measure_variance(other_cfg, repetitions)
        ratio = other.empirical_err / main.empirical_err if main.empirical_err > 0 else None
        out["comparison"] = {**other.to_dict(), "ratio": ratio}
    return out


def write_report(report: dict[str, Any], path: str | None) -> str:
    text = json.dumps(report, indent=2)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def validate_document(config: RunConfig) -> dict[str, Any]:
    """Partition and coefficient-table checks without sampling."""
    circuit, cuts = config.load_circuit()
    partition = apply_cuts(circuit, cuts, max_width=config.max_qubits)
    scheme = Scheme(config.scheme)
    configs = enumerate_configurations(partition, prep_states_for(scheme.ell))
    tables = tables_for(scheme, None, partition.K)

    return {
        "schema_version": SCHEMA_VERSION,
        "partition": partition.summary(),
        "num_configurations": len(configs),
        "round_trip": stitch(partition) == circuit,
        "table_residuals": [validate_table(t) for t in tables],
    }
