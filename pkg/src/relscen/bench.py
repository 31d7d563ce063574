"""Lower-bound and CCG experiments over instance corpora, with CSV reporting.

Every (instance, method, k, repetition) cell draws its own random stream from
the root seed and a counter key, so adding a method or a repetition leaves
the other cells untouched.
"""

from __future__ import annotations

import csv
import io
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ProblemKind, TwoStageInstance, load_instance
from .forest import ForestModel
from .pipeline.selection import Method, select_scenarios
from .robust import brute_force_robust, ccg, solve_master

RAW_COLUMNS = ("instance", "size", "method", "k", "rep", "lb", "status", "seconds", "selection_seconds")
FULL_K_VALUES = (1, 3, 5, 7, 9, 11, 13, 15)
CCG_START_SIZE = 5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Preset:
    tsp_sizes: tuple[int, ...]
    sp_sizes: tuple[int, ...]
    m: int
    bounds_deadline: float
    ccg_deadline: float
    bounds_repetitions: int = 10
    ccg_repetitions: int = 5


PRESETS = {
    "full": Preset((6, 7, 8, 9), (5, 6, 7, 8), 500, 60.0, 600.0),
    "desk": Preset((5, 6), (2, 3), 50, 5.0, 30.0),
}


@dataclass
class ExperimentConfig:
    experiment: str  # "bounds" or "ccg"
    instance_paths: list[str] = field(default_factory=list)
    methods: tuple[str, ...] = ("DDH", "Random", "Maxsum")
    k_values: tuple[int, ...] = FULL_K_VALUES
    repetitions: int = 10
    deadline: float = 60.0
    model_path: Optional[str] = None
    seed: int = 0
    output: Optional[str] = None
    backend: Optional[str] = "auto"
    workers: int = 1
    check_bounds: bool = False  # assert every LB against the brute-force optimum

    @classmethod
    def from_preset(cls, experiment: str, preset: str = "desk", **overrides) -> "ExperimentConfig":
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        p = PRESETS[preset]
        if experiment == "bounds":
            base = cls("bounds", k_values=FULL_K_VALUES, repetitions=p.bounds_repetitions, deadline=p.bounds_deadline)
        elif experiment == "ccg":
            base = cls("ccg", k_values=(CCG_START_SIZE,), repetitions=p.ccg_repetitions, deadline=p.ccg_deadline)
        else:
            raise ConfigError(f"unknown experiment {experiment!r}")
        return replace(base, **overrides)

    def validate(self, instances: Sequence[TwoStageInstance], model: Optional[ForestModel]) -> list[Method]:
        """Check the configuration against the loaded inputs; returns the parsed methods."""
        if self.experiment not in ("bounds", "ccg"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.k_values or min(self.k_values) < 1:
            raise ConfigError("k values must be positive")
        if not instances:
            raise ConfigError("no instances given")
        try:
            methods = [Method.parse(m) for m in self.methods]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not methods:
            raise ConfigError("no methods given")
        if Method.DDH in methods and model is None:
            raise ConfigError("DDH needs a trained model (model_path)")
        for inst in instances:
            if max(self.k_values) > inst.m:
                raise ConfigError(f"k={max(self.k_values)} exceeds m={inst.m} of instance {inst.id!r}")
        return methods


@dataclass(frozen=True)
class Cell:
    instance: int
    method: Method
    k: int
    rep: int


@dataclass
class BenchResult:
    experiment: str
    rows: list[dict]
    # Random k=1 cells run only to normalize when the configuration lacks them
    reference: list[dict] = field(default_factory=list)

    def raw_csv(self) -> str:
        return _csv(RAW_COLUMNS, ([r[c] for c in RAW_COLUMNS] for r in self.rows))

    def summary(self) -> list[dict]:
        """First quartile, mean, and third quartile of the LB per (size, method, k)."""
        groups: dict[tuple, list[float]] = {}
        for r in self.rows:
            groups.setdefault((r["size"], r["method"], r["k"]), []).append(r["lb"])
        out = []
        for (size, method, k), vals in sorted(groups.items()):
            q1, q3 = np.percentile(vals, [25, 75])
            out.append({"size": size, "method": method, "k": k, "q1": q1, "avg": float(np.mean(vals)), "q3": q3, "n": len(vals)})
        return out

    def summary_csv(self) -> str:
        cols = ("size", "method", "k", "q1", "avg", "q3", "n")
        return _csv(cols, ([r[c] for c in cols] for r in self.summary()))

    def normalized_values(self) -> dict[tuple, list[float]]:
        """Per-cell LB divided by its instance's mean Random k=1 bound, grouped by (size, method, k)."""
        ref: dict[str, list[float]] = {}
        for r in self.rows + self.reference:
            if r["method"] == Method.RANDOM.value and r["k"] == 1:
                ref.setdefault(r["instance"], []).append(r["lb"])
        if not ref:
            raise ConfigError("normalization needs Random k=1 rows")
        denom = {i: float(np.mean(v)) for i, v in ref.items()}
        groups: dict[tuple, list[float]] = {}
        for r in self.rows:
            d = denom.get(r["instance"])
            if d is None or d == 0 or not math.isfinite(d):
                continue
            groups.setdefault((r["size"], r["method"], r["k"]), []).append(r["lb"] / d)
        return groups

    def normalized(self) -> list[dict]:
        out = []
        for (size, method, k), vals in sorted(self.normalized_values().items()):
            q1, q3 = np.percentile(vals, [25, 75])
            out.append({"size": size, "method": method, "k": k, "mean": float(np.mean(vals)), "q1": q1, "q3": q3, "n": len(vals)})
        return out

    def normalized_csv(self) -> str:
        cols = ("size", "method", "k", "mean", "q1", "q3", "n")
        return _csv(cols, ([r[c] for c in cols] for r in self.normalized()))

    def write(self, directory) -> list[Path]:
        """Write raw, summary, and (bounds only) normalized CSVs into ``directory``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        files = {f"{self.experiment}_raw.csv": self.raw_csv(), f"{self.experiment}_summary.csv": self.summary_csv()}
        if self.experiment == "bounds":
            files["bounds_normalized.csv"] = self.normalized_csv()
        paths = []
        for name, text in files.items():
            (d / name).write_text(text)
            paths.append(d / name)
        return paths


def _csv(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def instance_size(instance: TwoStageInstance) -> int:
    """Node count for TSP, layer count for SP."""
    g = instance.graph
    if instance.problem_kind is ProblemKind.SP and g.layer_count is not None:
        return int(g.layer_count)
    return int(g.node_count)


def method_key(method: Method) -> int:
    """Stable integer for a method name (the built-in hash is salted per process)."""
    return zlib.crc32(method.value.encode())


def cell_rng(seed: int, cell: Cell) -> np.random.Generator:
    seq = np.random.SeedSequence(seed, spawn_key=(cell.instance, method_key(cell.method), cell.k, cell.rep))
    return np.random.default_rng(seq)


def plan_cells(config: ExperimentConfig, methods: Sequence[Method], n_instances: int) -> tuple[list[Cell], list[Cell]]:
    """Configured cells, plus the Random k=1 cells a bounds run needs for normalization if they are missing."""
    cells, reference = [], []
    for i in range(n_instances):
        for method in methods:
            for k in config.k_values:
                cells.extend(Cell(i, method, k, r) for r in range(config.repetitions))
        if config.experiment == "bounds" and not (Method.RANDOM in methods and 1 in config.k_values):
            reference.extend(Cell(i, Method.RANDOM, 1, r) for r in range(config.repetitions))
    return cells, reference


def _run_cell(config: ExperimentConfig, instance: TwoStageInstance, model, cell: Cell) -> dict:
    rng = cell_rng(config.seed, cell)
    sel = select_scenarios(cell.method, instance, cell.k, model=model, rng=rng)
    t0 = time.monotonic()
    if config.experiment == "bounds":
        res = solve_master(instance, sel.indices, deadline=config.deadline, backend=config.backend)
        lb, status = float(res.lower_bound), res.status.value
    else:
        run = ccg(instance, sel.indices, deadline=config.deadline, backend=config.backend)
        lb = float(run.lower_bound)
        status = "converged" if run.converged else run.status.value
    return {
        "instance": instance.id,
        "size": instance_size(instance),
        "method": cell.method.value,
        "k": cell.k,
        "rep": cell.rep,
        "lb": lb,
        "status": status,
        "seconds": time.monotonic() - t0,
        "selection_seconds": sel.seconds,
    }


_worker_state: dict = {}


def _init_worker(config, instances, model) -> None:
    _worker_state.update(config=config, instances=instances, model=model)


def _worker_cell(cell: Cell) -> dict:
    s = _worker_state
    return _run_cell(s["config"], s["instances"][cell.instance], s["model"], cell)


def run_experiment(
    config: ExperimentConfig,
    instances: Optional[Sequence[TwoStageInstance]] = None,
    model: Optional[ForestModel] = None,
) -> BenchResult:
    """Run every cell of ``config``; inputs are loaded from the configured paths when not given."""
    if instances is None:
        instances = [load_instance(p) for p in config.instance_paths]
    if model is None and config.model_path is not None:
        model = ForestModel.load(config.model_path)
    methods = config.validate(instances, model)
    cells, reference = plan_cells(config, methods, len(instances))
    everything = cells + reference
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers, initializer=_init_worker, initargs=(config, list(instances), model)) as pool:
            chunk = max(1, len(everything) // (4 * config.workers))
            rows = list(pool.map(_worker_cell, everything, chunksize=chunk))
    else:
        rows = [_run_cell(config, instances[c.instance], model, c) for c in everything]
    if config.check_bounds:
        _check_against_optimum(instances, rows)
    result = BenchResult(config.experiment, rows[: len(cells)], rows[len(cells) :])
    if config.output is not None:
        result.write(config.output)
    return result


def _check_against_optimum(instances: Sequence[TwoStageInstance], rows: list[dict]) -> None:
    optimum = {inst.id: brute_force_robust(inst)[0] for inst in instances}
    for r in rows:
        opt = optimum[r["instance"]]
        if r["lb"] > opt + 1e-6 * max(1.0, abs(opt)):
            raise AssertionError(f"lower bound {r['lb']} exceeds robust optimum {opt} on {r['instance']}")


def run_bounds_experiment(config: ExperimentConfig, instances=None, model=None) -> BenchResult:
    if config.experiment != "bounds":
        config = replace(config, experiment="bounds")
    return run_experiment(config, instances, model)


def run_ccg_experiment(config: ExperimentConfig, instances=None, model=None) -> BenchResult:
    if config.experiment != "ccg":
        config = replace(config, experiment="ccg")
    return run_experiment(config, instances, model)
