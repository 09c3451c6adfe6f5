"""Coreset-vs-random experiment sweeps, aggregation and CSV persistence.

Each run is keyed by (size, trial, selection) and owns its models; runs can
go through a process pool and are merged back in key order, so results do
not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bounds, coreset, data, qkernel, qnn, relabel, wsvm
from .coreset import Coreset
from .data import LabeledDataset, StatePairDataset

TASKS = ("synthetic", "correlation", "compile")
MODELS = ("qnn", "qkernel-svm")
SELECTIONS = ("coreset", "random")
RESULT_COLUMNS = (
    "task", "selection", "size", "zeta", "trial", "seed", "accuracy",
    "sel_ms", "kernel_ms", "train_ms", "coreset_error", "bound_sum",
)
SUMMARY_COLUMNS = (
    "task", "selection", "size", "zeta", "n", "mean_accuracy", "min_accuracy", "max_accuracy",
    "mean_sel_ms", "mean_kernel_ms", "mean_train_ms",
)

# Per task: keys that must be given explicitly, and optional keys with defaults.
REQUIRED = {
    ("synthetic", "qkernel-svm"): ("n_qubits", "C"),
    ("synthetic", "qnn"): ("n_qubits", "layers", "learning_rate"),
    ("correlation", "qnn"): ("n_qubits", "layers", "learning_rate"),
    ("compile", "qnn"): ("n_qubits", "layers", "learning_rate"),
}
OPTIONAL = {
    "synthetic": {
        "repetitions": 2, "variant": "eq22", "raw_dim": 8, "n_components": 8, "spread": 3.0,
        "svm_tol": 1e-6, "max_epochs": 20, "init": "uniform", "full_batch": False, "tol": 1e-9,
        "weight_mode": "normalized",
    },
    "correlation": {"max_epochs": 20, "init": "uniform", "full_batch": False, "tol": 1e-9, "weight_mode": "normalized"},
    "compile": {"n_gates": 20, "max_epochs": 500, "init": "uniform", "full_batch": False, "tol": 1e-15, "weight_mode": "normalized"},
}
TOP_KEYS = {"task", "model", "sizes", "trials", "seeds", "n_train", "test_size", "selections", "data_seed", "record_timings", "params"}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    model: str
    sizes: tuple
    trials: int
    n_train: int
    test_size: int
    params: dict
    seeds: tuple = ()
    selections: tuple = SELECTIONS
    data_seed: int = 0
    record_timings: bool = True

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}")
        if (self.task, self.model) not in REQUIRED:
            raise ConfigError(f"model {self.model!r} is not available for task {self.task!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.n_train < 2 or self.test_size < 1:
            raise ConfigError("need n_train >= 2 and test_size >= 1")
        if not self.sizes:
            raise ConfigError("sizes must be nonempty")
        for s in self.sizes:
            if not 0 < self.train_size(s) <= self.n_train:
                raise ConfigError(f"size {s} is outside (0, n_train]")
        if self.seeds and len(self.seeds) != self.trials:
            raise ConfigError("seeds must list one seed per trial")
        if not self.selections or any(s not in SELECTIONS for s in self.selections):
            raise ConfigError(f"selections must be drawn from {SELECTIONS}")
        missing = [k for k in REQUIRED[(self.task, self.model)] if k not in self.params]
        if missing:
            raise ConfigError(f"missing required parameter(s): {', '.join(missing)}")
        allowed = set(REQUIRED[(self.task, self.model)]) | set(OPTIONAL[self.task])
        unknown = sorted(set(self.params) - allowed)
        if unknown:
            raise ConfigError(f"unknown parameter(s): {', '.join(unknown)}")
        for key in ("n_qubits", "layers"):
            v = self.params.get(key, 1)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{key} must be a positive integer")
        for key in ("C", "learning_rate"):
            v = self.params.get(key, 1.0)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"{key} must be a positive number")
        if self.task == "correlation" and self.params["n_qubits"] != 2:
            raise ConfigError("the correlation task lives on 2 qubits")

    def train_size(self, s) -> int:
        """Entries <= 1 are prune rates; larger entries are absolute sizes."""
        return int(round(s * self.n_train)) if s <= 1 else int(s)

    def trial_seed(self, trial: int) -> int:
        return int(self.seeds[trial]) if self.seeds else 1000 + trial

    def param(self, key):
        return self.params.get(key, OPTIONAL[self.task].get(key))

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        unknown = sorted(set(d) - TOP_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        for key in ("task", "model", "sizes", "trials", "n_train", "test_size", "params"):
            if key not in d:
                raise ConfigError(f"missing config key {key!r}")
        return cls(
            task=d["task"], model=d["model"], sizes=tuple(d["sizes"]), trials=int(d["trials"]),
            n_train=int(d["n_train"]), test_size=int(d["test_size"]), params=dict(d["params"]),
            seeds=tuple(d.get("seeds", ())), selections=tuple(d.get("selections", SELECTIONS)),
            data_seed=int(d.get("data_seed", 0)), record_timings=bool(d.get("record_timings", True)),
        )

    def to_dict(self) -> dict:
        return {
            "task": self.task, "model": self.model, "sizes": list(self.sizes), "trials": self.trials,
            "seeds": [self.trial_seed(t) for t in range(self.trials)], "n_train": self.n_train,
            "test_size": self.test_size, "selections": list(self.selections), "data_seed": self.data_seed,
            "record_timings": self.record_timings, "params": dict(self.params),
        }


@dataclass
class RunResult:
    task: str
    selection: str
    size: int
    zeta: float
    trial: int
    seed: int
    accuracy: float
    sel_ms: float = 0.0
    kernel_ms: float = 0.0
    train_ms: float = 0.0
    coreset_error: float = 0.0
    bound: dict | None = field(default=None, repr=False)

    @property
    def bound_sum(self) -> float:
        return float(self.bound["sum"]) if self.bound else float("nan")

    def row(self) -> list[str]:
        return [
            self.task, self.selection, str(self.size), f"{self.zeta:.6g}", str(self.trial), str(self.seed),
            f"{self.accuracy:.6f}", f"{self.sel_ms:.3f}", f"{self.kernel_ms:.3f}", f"{self.train_ms:.3f}",
            f"{self.coreset_error:.10g}", f"{self.bound_sum:.10g}",
        ]


# --------------------------------------------------------------------------
# data preparation


@dataclass
class Prepared:
    cfg: ExperimentConfig
    train: LabeledDataset
    test: LabeledDataset | None = None
    train_pairs: StatePairDataset | None = None
    test_pairs: StatePairDataset | None = None


def synthetic_dataset(cfg: ExperimentConfig) -> tuple[LabeledDataset, LabeledDataset]:
    """Gaussian mixture -> PCA to n_qubits -> scale to [0, pi] -> relabel -> stratified split."""
    n_q = cfg.param("n_qubits")
    n = cfg.n_train + cfg.test_size
    raw = data.gaussian_mixture(n, cfg.param("raw_dim"), cfg.param("n_components"), cfg.data_seed, cfg.param("spread"))
    _, reduced = data.pca_fit_transform(raw, n_q)
    _, scaled = data.scale_features(reduced)
    fmap = _feature_map(cfg)
    kq = qkernel.kernel_matrix(fmap, scaled).entries
    kc = qkernel.rbf_matrix(scaled).entries
    labeled = relabel.relabel_dataset(scaled, kq, kc)
    return data.split(labeled, cfg.test_size / n, cfg.data_seed)


def prepare(cfg: ExperimentConfig) -> Prepared:
    if cfg.task == "synthetic":
        train, test = synthetic_dataset(cfg)
        return Prepared(cfg, train, test)
    if cfg.task == "correlation":
        samples = data.gen_correlation_dataset(cfg.n_train + cfg.test_size, cfg.data_seed)
        full = data.correlation_to_dataset(samples, cfg.data_seed)
        if full.n_c < 2:
            raise ConfigError("generated correlation data has a single class")
        train, test = data.split(full, cfg.test_size / full.n, cfg.data_seed)
        return Prepared(cfg, train, test)
    n_q = cfg.param("n_qubits")
    target = data.random_target_unitary(n_q, cfg.param("n_gates"), cfg.data_seed)
    tr = data.gen_compiling_dataset(target, cfg.n_train, cfg.data_seed, n_q)
    te = data.gen_compiling_dataset(target, cfg.test_size, cfg.data_seed + 1, n_q)
    return Prepared(cfg, tr.as_labeled(), None, tr, te)


def _feature_map(cfg: ExperimentConfig) -> qkernel.FeatureMapConfig:
    return qkernel.FeatureMapConfig(cfg.param("n_qubits"), cfg.param("repetitions"), True, cfg.param("variant"))


def _train_config(cfg: ExperimentConfig, seed: int) -> qnn.TrainConfig:
    return qnn.TrainConfig(
        learning_rate=cfg.param("learning_rate"), max_epochs=cfg.param("max_epochs"), seed=seed,
        weight_mode=cfg.param("weight_mode"), init=cfg.param("init"), full_batch=cfg.param("full_batch"),
        tol=cfg.param("tol"),
    )


# --------------------------------------------------------------------------
# selection


def select(train: LabeledDataset, size: int, selection: str, seed: int, metric: str) -> tuple[Coreset, np.ndarray]:
    """Pick ``size`` rows; returns a Coreset record and the training weights.

    Random subsets train with unit weights; their Coreset record still carries
    the covering radius so bounds can be evaluated for both arms.
    """
    if selection == "coreset":
        cs = coreset.greedy_k_center(train, size, metric, seed)
        weights = cs.weights
    else:
        idx = coreset.random_subset(train, size, seed)
        radii = {c: coreset.covering_radius(train, idx, metric, c) for c in range(train.n_c)}
        cs = Coreset(
            center_indices=idx, weights=coreset.compute_weights(train, idx, radii, metric), class_radii=radii,
            radius=max(radii.values()), prune_rate=size / train.n, seed=seed, metric=metric,
        )
        weights = np.ones(size)
    # a fixed row order makes equal training sets train identically
    order = np.argsort(cs.center_indices, kind="stable")
    cs = Coreset(cs.center_indices[order], cs.weights[order], cs.class_radii, cs.radius, cs.prune_rate, cs.seed, cs.metric)
    return cs, np.asarray(weights, dtype=float)[order]


# --------------------------------------------------------------------------
# single runs


def _hinge(f: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - y * f)


def _run_svm(p: Prepared, cs: Coreset, weights: np.ndarray, res: RunResult) -> None:
    cfg, train, test = p.cfg, p.train, p.test
    fmap = _feature_map(cfg)
    idx = cs.center_indices
    km = qkernel.kernel_matrix(fmap, train.features[idx])
    res.kernel_ms = km.params["entries_ms"]
    t0 = time.perf_counter()
    ovr = wsvm.OneVsRest(cfg.param("C"), cfg.param("svm_tol")).fit(km.entries, train.labels[idx], train.n_c, weights)
    res.train_ms = 1e3 * (time.perf_counter() - t0)
    res.accuracy = float(np.mean(ovr.predict(qkernel.kernel_rows(fmap, test.features, train.features[idx])) == test.labels))
    # coreset error of the first machine's hinge loss
    m0 = ovr.models[0]
    f_full = wsvm.decision_function(m0, qkernel.kernel_rows(fmap, train.features, train.features[idx]))
    y_full = np.where(train.labels == 1, 1.0, -1.0) if train.n_c == 2 else np.where(train.labels == 0, 1.0, -1.0)
    res.coreset_error = coreset.coreset_error(_hinge(f_full, y_full), _hinge(f_full[idx], y_full[idx]), weights)
    inputs = bounds.measure_bound_inputs(cs, train, svm_models=ovr.models, gram=km.entries, n_qubits=cfg.param("n_qubits"))
    res.bound = bounds.qkernel_coreset_bound(inputs).to_json()


def _run_qnn(p: Prepared, cs: Coreset, weights: np.ndarray, res: RunResult) -> None:
    cfg, train, test = p.cfg, p.train, p.test
    model = qnn.one_vs_rest_config(cfg.param("n_qubits"), cfg.param("layers"), train.n_c)
    tc = _train_config(cfg, res.seed)
    idx = cs.center_indices
    t0 = time.perf_counter()
    rep = qnn.train_qnn(model, _rows(train, idx), weights, tc)
    res.train_ms = 1e3 * (time.perf_counter() - t0)
    res.accuracy = qnn.qnn_accuracy(model, rep.params, test)
    targets = qnn.label_targets(train.labels, len(model.heads))
    full = qnn.sample_losses(model, rep.params, train.features, targets)
    res.coreset_error = coreset.coreset_error(full, full[idx], weights, tc.weight_mode)
    inputs = bounds.measure_bound_inputs(cs, train, qnn_config=model)
    res.bound = bounds.qnn_coreset_bound(inputs).to_json()


def _rows(ds: LabeledDataset, idx: np.ndarray) -> LabeledDataset:
    # keep the parent's class numbering (subset() would compact missing classes)
    return LabeledDataset(ds.features[idx], ds.labels[idx], ds.n_c, ds.provenance)


def _run_compile(p: Prepared, cs: Coreset, weights: np.ndarray, res: RunResult) -> None:
    cfg = p.cfg
    ansatz = qnn.compile_ansatz(cfg.param("n_qubits"), cfg.param("layers"))
    tc = _train_config(cfg, res.seed)
    idx = cs.center_indices
    t0 = time.perf_counter()
    rep = qnn.train_compiler(p.train_pairs.subset(idx), ansatz, tc, weights, test=p.test_pairs)
    res.train_ms = 1e3 * (time.perf_counter() - t0)
    res.accuracy = rep.extra["test_success_fraction"]
    full = 1.0 - qnn.compile_fidelities(ansatz, rep.params, p.train_pairs)
    res.coreset_error = coreset.coreset_error(full, full[idx], weights, tc.weight_mode)
    inputs = bounds.measure_bound_inputs(cs, p.train, qnn_config=ansatz)
    res.bound = bounds.qnn_coreset_bound(inputs).to_json()


def run_one(p: Prepared, size: int, trial: int, selection: str) -> RunResult:
    cfg = p.cfg
    seed = cfg.trial_seed(trial)
    metric = coreset.default_metric(p.train) if cfg.task != "compile" else "infidelity"
    res = RunResult(cfg.task, selection, size, size / cfg.n_train, trial, seed, 0.0)
    t0 = time.perf_counter()
    cs, weights = select(p.train, size, selection, seed, metric)
    res.sel_ms = 1e3 * (time.perf_counter() - t0)
    if cfg.task == "compile":
        _run_compile(p, cs, weights, res)
    elif cfg.model == "qkernel-svm":
        _run_svm(p, cs, weights, res)
    else:
        _run_qnn(p, cs, weights, res)
    if not cfg.record_timings:
        res.sel_ms = res.kernel_ms = res.train_ms = 0.0
    return res


def _run_key(args):
    p, size, trial, selection = args
    return run_one(p, size, trial, selection)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, prepared: Prepared | None = None) -> list[RunResult]:
    """All (size, trial, selection) runs, sorted by that key."""
    p = prepared or prepare(cfg)
    if p.train.n != cfg.n_train:
        # stratified rounding can shift a row or two between train and test
        cfg_sizes = [min(cfg.train_size(s), p.train.n) for s in cfg.sizes]
    else:
        cfg_sizes = [cfg.train_size(s) for s in cfg.sizes]
    keys = [(size, trial, sel) for size in cfg_sizes for trial in range(cfg.trials) for sel in cfg.selections]
    if jobs > 1 and len(keys) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_key, [(p, *k) for k in keys]))
    else:
        results = [run_one(p, *k) for k in keys]
    return sorted(results, key=lambda r: (r.task, r.size, r.trial, r.selection))


def run_synthetic(cfg: ExperimentConfig, jobs: int = 1) -> list[RunResult]:
    if cfg.task != "synthetic":
        raise ConfigError("not a synthetic config")
    return run_experiment(cfg, jobs)


def run_correlation(cfg: ExperimentConfig, jobs: int = 1) -> list[RunResult]:
    if cfg.task != "correlation":
        raise ConfigError("not a correlation config")
    return run_experiment(cfg, jobs)


def run_compile(cfg: ExperimentConfig, jobs: int = 1) -> list[RunResult]:
    if cfg.task != "compile":
        raise ConfigError("not a compile config")
    return run_experiment(cfg, jobs)


# --------------------------------------------------------------------------
# aggregation and statistics


def aggregate(results: Sequence[RunResult]) -> list[dict]:
    """One row per (task, selection, size) with accuracy spread and mean timings."""
    if not results:
        raise ValueError("no results to aggregate")
    cells: dict[tuple, list[RunResult]] = {}
    for r in results:
        cells.setdefault((r.task, r.selection, r.size), []).append(r)
    rows = []
    for (task, sel, size), rs in sorted(cells.items()):
        acc = np.array([r.accuracy for r in rs])
        rows.append({
            "task": task, "selection": sel, "size": size, "zeta": rs[0].zeta, "n": len(rs),
            "mean_accuracy": float(acc.mean()), "min_accuracy": float(acc.min()), "max_accuracy": float(acc.max()),
            "mean_sel_ms": float(np.mean([r.sel_ms for r in rs])),
            "mean_kernel_ms": float(np.mean([r.kernel_ms for r in rs])),
            "mean_train_ms": float(np.mean([r.train_ms for r in rs])),
        })
    return rows


def sign_test(a: Sequence[float], b: Sequence[float], margin: float = 0.0) -> dict:
    """One-sided paired sign test of ``a >= b - margin``; ties are dropped."""
    diff = np.asarray(a, dtype=float) - (np.asarray(b, dtype=float) - margin)
    if diff.shape != (len(b),):
        raise ValueError("sign test needs paired samples")
    wins = int(np.count_nonzero(diff > 0))
    losses = int(np.count_nonzero(diff < 0))
    n = wins + losses
    # P(at least `wins` successes out of n fair coin flips)
    p = sum(math.comb(n, k) for k in range(wins, n + 1)) / 2**n if n else 1.0
    return {"wins": wins, "losses": losses, "ties": len(diff) - n, "p_value": p}


def results_csv(results: Sequence[RunResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in results:
        w.writerow(r.row())
    return buf.getvalue()


def summary_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([row[c] if isinstance(row[c], (str, int)) else f"{row[c]:.6f}" for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def write_outputs(results: Sequence[RunResult], out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv", "summary": out / "summary.csv", "bounds": out / "bounds.json"}
    paths["results"].write_text(results_csv(results))
    paths["summary"].write_text(summary_csv(aggregate(results)))
    paths["bounds"].write_text(json.dumps(
        [{"selection": r.selection, "size": r.size, "trial": r.trial, **(r.bound or {})} for r in results], indent=1,
    ))
    return paths
