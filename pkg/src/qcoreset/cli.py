"""Command-line front end: ``qcoreset <subcommand> [--config F] [--set k=v] ...``.

Exit codes: 0 success, 1 invalid invocation, configuration or input data
(``ValueError``), 2 runtime failure.  Every run writes a manifest.json with
the resolved config, its hash, the seed and library versions.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _backend, bench, bounds, coreset, data, qkernel, qnn, relabel, wsvm
from .qsim import state_to_json

REQUIRED = object()

# Per-subcommand config schema: key -> default (REQUIRED = must be supplied).
SCHEMAS: dict[str, dict] = {
    "gen": {
        "kind": REQUIRED, "n": 1000, "seed": 0, "n_qubits": 4, "raw_dim": 8, "n_components": 8,
        "spread": 3.0, "n_gates": 20, "csv": None, "label_column": -1, "pca": None, "scale": True,
    },
    "coreset": {"dataset": REQUIRED, "k": None, "zeta": None, "metric": None, "seed": 0, "first": None},
    "train-qnn": {
        "dataset": REQUIRED, "coreset": None, "n_qubits": REQUIRED, "layers": REQUIRED, "learning_rate": REQUIRED,
        "max_epochs": 50, "seed": 0, "weight_mode": "normalized", "gradient_mode": "parameter-shift",
        "init": "uniform", "full_batch": False, "tol": 1e-9, "encoding_axis": "Y", "entangler": "ring",
        "trainable_encoding": False,
    },
    "train-kernel-svm": {
        "dataset": REQUIRED, "coreset": None, "kernel": "quantum", "n_qubits": None, "repetitions": 2,
        "variant": "eq22", "sigma": None, "C": REQUIRED, "tol": 1e-6, "seed": 0,
    },
    "relabel": {"dataset": REQUIRED, "repetitions": 2, "variant": "eq22", "sigma": None, "lambda_rel": 1e-10, "seed": 0},
    "compile": {
        "n_qubits": REQUIRED, "n_gates": 20, "n_train": 20, "n_test": 100, "layers": REQUIRED,
        "learning_rate": REQUIRED, "max_epochs": 500, "seed": 0, "tol": 1e-15, "init": "uniform", "full_batch": False,
    },
    "bounds": {"kind": REQUIRED, "inputs": REQUIRED},
}
COMMANDS = ("gen", "coreset", "train-qnn", "train-kernel-svm", "relabel", "compile", "bench", "bounds")


class UsageError(Exception):
    """Bad invocation or configuration (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qcoreset", description="Coreset selection and training for quantum learning models.")
    sub = p.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}", parser_class=_Parser)
    sub.required = True
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON config file")
        sp.add_argument("--out", type=Path, help="output directory (default: $QCORESET_OUT or ./out)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a (dotted) config key; repeatable")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    cfg = json.loads(json.dumps(cfg))
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not KEY=VALUE")
        key, value = item.split("=", 1)
        parts = key.split(".")
        node = cfg
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise UsageError(f"cannot set {key!r}: {part!r} is not a section")
        node[parts[-1]] = _parse_value(value)
    return cfg


def resolve_config(command: str, raw: dict) -> dict:
    """Strict schema check: unknown keys fail, required keys must be present."""
    if command == "bench":
        return raw
    schema = SCHEMAS[command]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise UsageError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    out = {}
    for key, default in schema.items():
        if key in raw:
            out[key] = raw[key]
        elif default is REQUIRED:
            raise UsageError(f"missing required config key {key!r} for {command}")
        else:
            out[key] = default
    return out


def _load_input(path) -> data.LabeledDataset:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"input file not found: {path}")
    return data.load_dataset(path)


def _load_coreset(path):
    path = Path(path)
    if not path.exists():
        raise UsageError(f"input file not found: {path}")
    return coreset.Coreset.load(path)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2))


# --------------------------------------------------------------------------
# subcommands; each returns a dict of written artifact names


def _preprocess(ds, pca, scale):
    if pca:
        _, ds = data.pca_fit_transform(ds, int(pca))
    if scale:
        _, ds = data.scale_features(ds)
    return ds


def cmd_gen(cfg: dict, out: Path, jobs: int) -> dict:
    kind = cfg["kind"]
    if kind == "csv":
        if not cfg["csv"]:
            raise UsageError("kind 'csv' needs a csv path")
        if not Path(cfg["csv"]).exists():
            raise UsageError(f"input file not found: {cfg['csv']}")
        ds = _preprocess(data.load_csv(cfg["csv"], cfg["label_column"]), cfg["pca"], cfg["scale"])
    elif kind == "mixture":
        ds = data.gaussian_mixture(cfg["n"], cfg["raw_dim"], cfg["n_components"], cfg["seed"], cfg["spread"])
        # circuit-ready by default: one feature per qubit, scaled to [0, pi]
        ds = _preprocess(ds, cfg["pca"] or min(cfg["n_qubits"], cfg["raw_dim"]), cfg["scale"])
    elif kind == "correlation":
        ds = data.correlation_to_dataset(data.gen_correlation_dataset(cfg["n"], cfg["seed"]), cfg["seed"])
    elif kind == "compile":
        target = data.random_target_unitary(cfg["n_qubits"], cfg["n_gates"], cfg["seed"])
        pairs = data.gen_compiling_dataset(target, cfg["n"], cfg["seed"], cfg["n_qubits"])
        _write_json(out / "pairs.json", {
            "n_qubits": pairs.n_qubits,
            "target": [g.to_json() for g in target],
            "inputs": [state_to_json(v) for v in pairs.inputs],
            "targets": [state_to_json(v) for v in pairs.targets],
        })
        return {"pairs": "pairs.json"}
    else:
        raise UsageError(f"unknown gen kind {kind!r} (csv, mixture, correlation, compile)")
    data.save_dataset(ds, out / "dataset.json")
    return {"dataset": "dataset.json"}


def cmd_coreset(cfg: dict, out: Path, jobs: int) -> dict:
    ds = _load_input(cfg["dataset"])
    if (cfg["k"] is None) == (cfg["zeta"] is None):
        raise UsageError("give exactly one of k or zeta")
    k = int(cfg["k"]) if cfg["k"] is not None else int(round(cfg["zeta"] * ds.n))
    first = {int(c): int(i) for c, i in cfg["first"].items()} if cfg["first"] else None
    cs = coreset.greedy_k_center(ds, k, cfg["metric"], cfg["seed"], first)
    cs.save(out / "coreset.json")
    return {"coreset": "coreset.json"}


def _training_rows(ds, cfg):
    if cfg["coreset"] is None:
        return ds, None, None
    cs = _load_coreset(cfg["coreset"])
    idx = cs.center_indices
    if idx.max(initial=-1) >= ds.n:
        raise UsageError("coreset indices exceed the dataset size")
    sub = data.LabeledDataset(ds.features[idx], ds.labels[idx], ds.n_c, ds.provenance)
    return sub, cs.weights, cs


def cmd_train_qnn(cfg: dict, out: Path, jobs: int) -> dict:
    ds = _load_input(cfg["dataset"])
    train, weights, cs = _training_rows(ds, cfg)
    model = qnn.one_vs_rest_config(
        cfg["n_qubits"], cfg["layers"], ds.n_c, encoding_axis=cfg["encoding_axis"],
        entangler=cfg["entangler"], trainable_encoding=cfg["trainable_encoding"],
    )
    tc = qnn.TrainConfig(
        learning_rate=cfg["learning_rate"], max_epochs=cfg["max_epochs"], seed=cfg["seed"],
        weight_mode=cfg["weight_mode"], gradient_mode=cfg["gradient_mode"], init=cfg["init"],
        full_batch=cfg["full_batch"], tol=cfg["tol"],
    )
    rep = qnn.train_qnn(model, train, weights, tc)
    qnn.save_checkpoint(out / "checkpoint.json", model, rep)
    rep.write_epoch_csv(out / "epochs.csv")
    report = {
        "initial_loss": rep.initial_loss, "final_loss": rep.loss_trace[-1], "epochs": len(rep.loss_trace),
        "wall_time": rep.wall_time, "grad_evals": rep.grad_evals, "m": model.n_params,
        "train_accuracy": qnn.qnn_accuracy(model, rep.params, train),
    }
    written = {"checkpoint": "checkpoint.json", "epochs": "epochs.csv", "report": "report.json"}
    if cs is not None:
        b = bounds.qnn_coreset_bound(bounds.measure_bound_inputs(cs, ds, qnn_config=model))
        b.save(out / "bounds.json")
        written["bounds"] = "bounds.json"
    _write_json(out / "report.json", report)
    return written


def cmd_train_kernel_svm(cfg: dict, out: Path, jobs: int) -> dict:
    ds = _load_input(cfg["dataset"])
    train, weights, cs = _training_rows(ds, cfg)
    if cfg["kernel"] == "quantum":
        fmap = qkernel.FeatureMapConfig(cfg["n_qubits"] or ds.d_x, cfg["repetitions"], True, cfg["variant"])
        km = qkernel.kernel_matrix(fmap, train)
    elif cfg["kernel"] == "rbf":
        km = qkernel.rbf_matrix(train, cfg["sigma"])
    else:
        raise UsageError("kernel must be 'quantum' or 'rbf'")
    ovr = wsvm.OneVsRest(cfg["C"], cfg["tol"]).fit(km.entries, train.labels, ds.n_c, weights)
    km.save(out / "kernel.bin")
    ref = km.params.get("hash", "rbf")
    models = []
    for m in ovr.models:
        m.kernel_ref = ref
        models.append(m.to_json())
    _write_json(out / "model.json", {"kernel": cfg["kernel"], "machines": models})
    acc = float(np.mean(ovr.predict(km.entries) == train.labels))
    _write_json(out / "report.json", {
        "train_accuracy": acc, "n_support": [int(len(m.support)) for m in ovr.models],
        "converged": [bool(m.converged) for m in ovr.models], "gap": [m.gap for m in ovr.models],
    })
    written = {"model": "model.json", "kernel": "kernel.bin", "report": "report.json"}
    if cs is not None and cfg["kernel"] == "quantum":
        b = bounds.qkernel_coreset_bound(bounds.measure_bound_inputs(
            cs, ds, svm_models=ovr.models, gram=km.entries, n_qubits=fmap.n_qubits))
        b.save(out / "bounds.json")
        written["bounds"] = "bounds.json"
    return written


def cmd_relabel(cfg: dict, out: Path, jobs: int) -> dict:
    ds = _load_input(cfg["dataset"])
    fmap = qkernel.FeatureMapConfig(ds.d_x, cfg["repetitions"], True, cfg["variant"])
    kq = qkernel.kernel_matrix(fmap, ds).entries
    kc = qkernel.rbf_matrix(ds, cfg["sigma"]).entries
    new = relabel.relabel_dataset(ds, kq, kc, cfg["lambda_rel"])
    data.save_dataset(new, out / "dataset.json")
    y = np.where(new.labels == 1, 1.0, -1.0)
    _write_json(out / "report.json", {
        "geometric_objective": relabel.geometric_objective(kq, kc, y, cfg["lambda_rel"]),
        "geometric_difference": relabel.geometric_difference(kq, kc, y, cfg["lambda_rel"]),
    })
    return {"dataset": "dataset.json", "report": "report.json"}


def cmd_compile(cfg: dict, out: Path, jobs: int) -> dict:
    seed = cfg["seed"]
    target = data.random_target_unitary(cfg["n_qubits"], cfg["n_gates"], seed)
    train = data.gen_compiling_dataset(target, cfg["n_train"], seed, cfg["n_qubits"])
    test = data.gen_compiling_dataset(target, cfg["n_test"], seed + 1, cfg["n_qubits"])
    ansatz = qnn.compile_ansatz(cfg["n_qubits"], cfg["layers"])
    tc = qnn.TrainConfig(
        learning_rate=cfg["learning_rate"], max_epochs=cfg["max_epochs"], seed=seed, init=cfg["init"],
        full_batch=cfg["full_batch"], tol=cfg["tol"],
    )
    rep = qnn.train_compiler(train, ansatz, tc, test=test)
    qnn.save_checkpoint(out / "checkpoint.json", ansatz, rep)
    rep.write_epoch_csv(out / "epochs.csv")
    _write_json(out / "report.json", {
        "initial_loss": rep.initial_loss, "final_loss": rep.loss_trace[-1], "epochs": len(rep.loss_trace),
        "wall_time": rep.wall_time, **rep.extra,
    })
    return {"checkpoint": "checkpoint.json", "epochs": "epochs.csv", "report": "report.json"}


def cmd_bench(cfg: dict, out: Path, jobs: int) -> dict:
    try:
        exp = bench.ExperimentConfig.from_dict(cfg)
    except (bench.ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    results = bench.run_experiment(exp, jobs)
    bench.write_outputs(results, out)
    return {"results": "results.csv", "summary": "summary.csv", "bounds": "bounds.json"}


def cmd_bounds(cfg: dict, out: Path, jobs: int) -> dict:
    try:
        inputs = bounds.BoundInputs(**cfg["inputs"])
    except TypeError as exc:
        raise UsageError(f"bad bound inputs: {exc}") from exc
    if cfg["kind"] == "qnn":
        rep = bounds.qnn_coreset_bound(inputs)
    elif cfg["kind"] == "qkernel":
        rep = bounds.qkernel_coreset_bound(inputs)
    else:
        raise UsageError("bounds kind must be 'qnn' or 'qkernel'")
    rep.save(out / "bounds.json")
    return {"bounds": "bounds.json"}


HANDLERS = {
    "gen": cmd_gen, "coreset": cmd_coreset, "train-qnn": cmd_train_qnn, "train-kernel-svm": cmd_train_kernel_svm,
    "relabel": cmd_relabel, "compile": cmd_compile, "bench": cmd_bench, "bounds": cmd_bounds,
}


def _manifest(command: str, cfg: dict, seed, artifacts: dict, argv: list[str], elapsed: float) -> dict:
    blob = json.dumps(cfg, sort_keys=True).encode()
    return {
        "command": command,
        "argv": argv,
        "config": cfg,
        "config_hash": hashlib.sha256(blob).hexdigest(),
        "seed": seed,
        "artifacts": artifacts,
        "elapsed_s": elapsed,
        "versions": {
            "qcoreset": __version__, "numpy": np.__version__, "python": platform.python_version(),
            "backend": _backend.BACKEND,
        },
    }


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        raw = {}
        if args.config is not None:
            if not args.config.exists():
                raise UsageError(f"config file not found: {args.config}")
            try:
                raw = json.loads(args.config.read_text())
            except json.JSONDecodeError as exc:
                raise UsageError(f"config is not valid JSON: {exc}") from exc
            if not isinstance(raw, dict):
                raise UsageError("config must be a JSON object")
        raw = apply_overrides(raw, args.overrides)
        if args.seed is not None:
            raw["data_seed" if args.command == "bench" else "seed"] = args.seed
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        cfg = resolve_config(args.command, raw)
        out = args.out or Path(os.environ.get("QCORESET_OUT", "out"))
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create output directory {out}: {exc}") from exc
        if not os.access(out, os.W_OK):
            raise UsageError(f"output directory {out} is not writable")
    except UsageError as exc:
        print(f"qcoreset {args.command}: {exc}", file=sys.stderr)
        return 1
    start = time.perf_counter()
    try:
        artifacts = HANDLERS[args.command](cfg, out, args.jobs)
    except (UsageError, ValueError) as exc:
        print(f"qcoreset {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"qcoreset {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    seed = cfg.get("data_seed", cfg.get("seed"))
    _write_json(out / "manifest.json", _manifest(args.command, cfg, seed, artifacts, argv, time.perf_counter() - start))
    if args.verbose:
        print(json.dumps(artifacts))
    return 0


if __name__ == "__main__":
    sys.exit(main())
