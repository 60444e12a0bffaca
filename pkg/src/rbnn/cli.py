"""Experiment harness: train/compare/params/predict subcommands.

Configs are JSON; outputs are a losscurve.csv (plot-ready), results.json
(table-ready) and model.json per run, all written atomically. Identical
config + seed reproduce byte-identical outputs except wall time.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bnn, data, ffnn, restricted
from .cem import CemConfig
from .network import (
    Activation,
    LossKind,
    Topology,
    WeightSet,
    forward,
    forward_batch,
    param_count,
    targets_for,
)
from .report import TrainReport

LOSSCURVE_HEADER = (
    "iteration,model,population_mean_error,elite_mean_error,"
    "best_error,train_accuracy,test_accuracy"
)
MODEL_KINDS = ("rbnn", "ffnn", "bnn")


class ConfigError(ValueError):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config field `{key}` is required")
    return cfg[key]


def build_topology(cfg: dict) -> Topology:
    sizes = _require(cfg, "topology")
    acts = _require(cfg, "activations")
    try:
        return Topology(tuple(sizes), tuple(Activation(a) for a in acts),
                        bool(cfg.get("use_bias", False)))
    except ValueError as e:
        raise ConfigError(f"config field `topology`/`activations`: {e}")


def build_rbnn_config(block: dict, seed: int) -> restricted.RbnnConfig:
    cem_cfg = CemConfig(
        population_size=int(block.get("population_size", 100)),
        elite_fraction=float(block.get("elite_fraction", 0.1)),
        smoothing=float(block.get("smoothing", 0.7)),
        iterations=int(block.get("iterations", 100)),
        sigma0=float(block.get("sigma0", 0.5)),
        sigma_decay=float(block.get("sigma_decay", 1.0)),
        seed=seed,
        weighting=block.get("weighting", "uniform"),
        n_jobs=int(block.get("n_jobs", 1)),
    )
    return restricted.RbnnConfig(
        cem=cem_cfg,
        loss_kind=LossKind(block.get("loss_kind", "mse")),
        inference_mode=block.get("inference_mode", "best_candidate"),
        ensemble_samples=int(block.get("ensemble_samples", 10)),
    )


def build_ffnn_config(block: dict, seed: int) -> ffnn.FfnnConfig:
    return ffnn.FfnnConfig(
        learning_rate=float(block.get("learning_rate", 0.1)),
        epochs=int(block.get("epochs", 100)),
        epsilon=float(block.get("epsilon", 0.0)),
        loss_kind=LossKind(block.get("loss_kind", "mse")),
        init_scale=float(block.get("init_scale", 0.5)),
        seed=seed,
    )


def build_bnn_config(block: dict, seed: int) -> bnn.BnnConfig:
    return bnn.BnnConfig(
        learning_rate=float(block.get("learning_rate", 0.05)),
        epochs=int(block.get("epochs", 100)),
        minibatch_size=int(block.get("minibatch_size", 16)),
        kl_weight=block.get("kl_weight"),
        mc_samples=int(block.get("mc_samples", 1)),
        mc_eval=int(block.get("mc_eval", 10)),
        seed=seed,
    )


def prepare_data(cfg: dict, seed: int):
    """Load + preprocess + split, fitting normalization on the training split."""
    schema_block = cfg.get("schema", {})
    if isinstance(schema_block, str):
        with open(schema_block) as fh:
            schema_block = json.load(fh)
    schema = data.DataSchema.from_dict(schema_block)

    if cfg.get("data") == "iris":
        raw = data.load_iris(schema)
        if "label_column" not in schema_block:
            schema = data.DataSchema.from_dict({**schema_block, "label_column": "species"})
    else:
        path = _require(cfg, "data_path")
        if not os.path.exists(path):
            raise ConfigError(f"config field `data_path`: file not found: {path}")
        raw = data.load_csv(path, schema)

    want_zscore = schema.normalize == "zscore"
    base = data.preprocess(
        raw, data.DataSchema.from_dict({**schema_block,
                                        "label_column": schema.label_column,
                                        "normalize": "none"})
    )
    test_fraction = float(cfg.get("test_fraction", 0.2))
    train_idx, test_idx = data.split_indices(base.n_rows, test_fraction, seed)
    train_ds, test_ds = base.take(train_idx), base.take(test_idx)
    if want_zscore:
        train_ds, test_ds = data.normalize_train_test(train_ds, test_ds)
    checksum = hashlib.sha256(np.sort(test_idx).astype(np.int64).tobytes()).hexdigest()[:16]
    return train_ds, test_ds, checksum


def train_one(model: str, cfg: dict, topo: Topology, train_ds, test_ds, seed: int) -> TrainReport:
    block = cfg.get(model, {})
    if model == "rbnn":
        return restricted.train(build_rbnn_config(block, seed), topo, train_ds, test_ds)
    if model == "ffnn":
        return ffnn.train_ffnn(build_ffnn_config(block, seed), topo, train_ds, test_ds)
    if model == "bnn":
        return bnn.train_bnn(build_bnn_config(block, seed), topo, train_ds, test_ds)
    raise ConfigError(f"config field `model`: unknown model {model!r}, expected one of {MODEL_KINDS}")


def losscurve_rows(report: TrainReport) -> list[str]:
    rows = []
    for r in report.records:
        rows.append(
            f"{r.iteration},{report.model},{_fmt(r.population_mean_error)},"
            f"{_fmt(r.elite_mean_error)},{_fmt(r.best_error)},"
            f"{_fmt(r.train_accuracy)},{_fmt(r.test_accuracy)}"
        )
    return rows


def final_test_predictions(report: TrainReport, cfg: dict, topo: Topology, test_ds) -> np.ndarray:
    """Deterministic test-set probabilities from the trained state."""
    if report.model == "rbnn":
        block = cfg.get("rbnn", {})
        mode = block.get("inference_mode", "best_candidate")
        if mode == "best_candidate":
            return forward_batch(report.best_weights, topo, test_ds.X)
        if mode == "mean_weights":
            return forward_batch(restricted.mean_weightset(report.final_state), topo, test_ds.X)
        rng = np.random.default_rng(report.seed)
        samples = int(block.get("ensemble_samples", 10))
        return np.mean(
            [forward_batch(restricted.sample_weightset(report.final_state, rng), topo, test_ds.X)
             for _ in range(samples)],
            axis=0,
        )
    if report.model == "ffnn":
        return forward_batch(report.final_state, topo, test_ds.X)
    mc_eval = int(cfg.get("bnn", {}).get("mc_eval", 10))
    return bnn.predict_batch(report.final_state, test_ds.X, mc_eval, np.random.default_rng(report.seed))


def per_class_recall(Y: np.ndarray, P: np.ndarray) -> list:
    """Recall per class; None for classes absent from the labels."""
    if P.shape[1] == 1:
        P = np.hstack([1.0 - P, P])
    if Y.shape[1] == 1:
        Y = np.hstack([1.0 - Y, Y])
    true = np.argmax(Y, axis=1)
    pred = np.argmax(P, axis=1)
    out = []
    for c in range(Y.shape[1]):
        mask = true == c
        out.append(float(np.mean(pred[mask] == c)) if np.any(mask) else None)
    return out


def results_record(report: TrainReport, cfg: dict, topo: Topology, checksum: str,
                   test_ds=None) -> dict:
    last = report.final_record
    recall = None
    if test_ds is not None and test_ds.X.shape[0] > 0:
        P = final_test_predictions(report, cfg, topo, test_ds)
        recall = per_class_recall(targets_for(topo, test_ds.Y), P)
    return {
        "model": report.model,
        "topology": list(topo.layer_sizes),
        "activations": [a.value for a in topo.activations],
        "params_stored": report.params_stored,
        "iterations": len(report.records),
        "final_train_accuracy": last.train_accuracy,
        "final_test_accuracy": last.test_accuracy,
        "final_total_error": last.best_error,
        "wall_time_seconds": report.wall_time_seconds,
        "seed": report.seed,
        "split_checksum": checksum,
        "test_recall_per_class": recall,
        "config": cfg.get(report.model, {}),
    }


def model_document(report: TrainReport, cfg: dict, topo: Topology) -> dict:
    if report.model == "rbnn":
        state: restricted.ColumnGaussians = report.final_state
        block = cfg.get("rbnn", {})
        mode = block.get("inference_mode", "best_candidate")
        doc = {
            "topology": list(topo.layer_sizes),
            "activations": [a.value for a in topo.activations],
            "use_bias": topo.use_bias,
            "means": [m.tolist() for m in state.means],
            "sigma": state.sigma,
            "inference_mode": mode,
            "seed": report.seed,
        }
        if mode == "ensemble":
            doc["inference_mode"] = f"ensemble:{int(block.get('ensemble_samples', 10))}"
        if mode == "best_candidate":
            doc["best_weights"] = [m.tolist() for m in report.best_weights.matrices]
        return doc
    if report.model == "ffnn":
        ws: WeightSet = report.final_state
        return {
            "kind": "ffnn",
            "topology": list(topo.layer_sizes),
            "activations": [a.value for a in topo.activations],
            "use_bias": topo.use_bias,
            "weights": [m.tolist() for m in ws.matrices],
            "seed": report.seed,
        }
    vp: bnn.VariationalParams = report.final_state
    return {
        "kind": "bnn",
        "topology": list(topo.layer_sizes),
        "activations": [a.value for a in topo.activations],
        "use_bias": topo.use_bias,
        "mu": [m.tolist() for m in vp.mu],
        "rho": [r.tolist() for r in vp.rho],
        "mc_eval": int(cfg.get("bnn", {}).get("mc_eval", 10)),
        "seed": report.seed,
    }


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_train(cfg: dict, out_dir: Path) -> int:
    model = _require(cfg, "model")
    if model not in MODEL_KINDS:
        raise ConfigError(f"config field `model`: unknown model {model!r}, expected one of {MODEL_KINDS}")
    seed = int(cfg.get("seed", 0))
    topo = build_topology(cfg)
    train_ds, test_ds, checksum = prepare_data(cfg, seed)
    if topo.input_dim != train_ds.X.shape[1]:
        raise ConfigError(
            f"config field `topology`: input width {topo.input_dim} does not match "
            f"{train_ds.X.shape[1]} preprocessed features"
        )
    report = train_one(model, cfg, topo, train_ds, test_ds, seed)

    atomic_write(out_dir / "losscurve.csv",
                 "\n".join([LOSSCURVE_HEADER] + losscurve_rows(report)) + "\n")
    atomic_write(out_dir / "results.json",
                 _dump_json(results_record(report, cfg, topo, checksum, test_ds)))
    atomic_write(out_dir / "model.json", _dump_json(model_document(report, cfg, topo)))
    last = report.final_record
    print(f"{model}: {len(report.records)} iterations, "
          f"final error {last.best_error:.6g}, "
          f"test accuracy {last.test_accuracy}, outputs in {out_dir}")
    return 0


def run_compare(cfg: dict, out_dir: Path) -> int:
    models = _require(cfg, "models")
    if not isinstance(models, list) or len(models) < 2:
        raise ConfigError("config field `models`: compare needs a list of >= 2 models")
    for m in models:
        if m not in MODEL_KINDS:
            raise ConfigError(f"config field `models`: unknown model {m!r}")
    seed = int(cfg.get("seed", 0))
    topo = build_topology(cfg)
    train_ds, test_ds, checksum = prepare_data(cfg, seed)
    if topo.input_dim != train_ds.X.shape[1]:
        raise ConfigError(
            f"config field `topology`: input width {topo.input_dim} does not match "
            f"{train_ds.X.shape[1]} preprocessed features"
        )

    rows, results, failures = [], [], []
    for m in models:
        try:
            report = train_one(m, cfg, topo, train_ds, test_ds, seed)
        except Exception as e:  # keep going; report failures at the end
            print(f"{m}: FAILED: {e}", file=sys.stderr)
            failures.append(m)
            continue
        rows.extend(losscurve_rows(report))
        results.append(results_record(report, cfg, topo, checksum, test_ds))
        atomic_write(out_dir / f"model_{m}.json", _dump_json(model_document(report, cfg, topo)))
        print(f"{m}: final test accuracy {report.final_record.test_accuracy}, "
              f"params stored {report.params_stored}")

    atomic_write(out_dir / "losscurve.csv",
                 "\n".join([LOSSCURVE_HEADER] + rows) + "\n")
    atomic_write(out_dir / "results.json", _dump_json(results))
    return 1 if failures else 0


def parse_topology_string(s: str) -> Topology:
    try:
        sizes = tuple(int(p) for p in s.split(","))
    except ValueError:
        raise ConfigError(f"malformed topology string {s!r}, expected d,n1,...,nL")
    if len(sizes) < 2:
        raise ConfigError("topology needs at least an input width and one layer")
    acts = (Activation.SIGMOID,) * (len(sizes) - 1)
    return Topology(sizes, acts)


def run_params(model: str, topology: str) -> int:
    if model not in MODEL_KINDS:
        raise ConfigError(f"unknown model {model!r}, expected one of {MODEL_KINDS}")
    topo = parse_topology_string(topology)
    count = param_count(model, topo)
    braces = ",".join(str(n) for n in topo.layer_sizes[1:])
    print(f"{count} parameters({{{braces}}})")
    return 0


def load_model(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if "means" not in doc and doc.get("kind") not in ("ffnn", "bnn"):
        raise ConfigError(f"{path}: not a recognized model document")
    return doc


def predict_vector(doc: dict, x: np.ndarray) -> np.ndarray:
    topo = Topology(tuple(doc["topology"]),
                    tuple(Activation(a) for a in doc["activations"]),
                    bool(doc.get("use_bias", False)))
    if x.shape != (topo.input_dim,):
        raise ConfigError(f"input width {x.shape[0]} does not match model input {topo.input_dim}")
    if "means" in doc:
        mode = doc["inference_mode"]
        samples = 10
        if mode.startswith("ensemble"):
            mode, _, s = mode.partition(":")
            samples = int(s) if s else 10
        params = restricted.ColumnGaussians(
            topo, tuple(np.asarray(m) for m in doc["means"]), float(doc["sigma"])
        )
        best = None
        if "best_weights" in doc:
            best = WeightSet(tuple(np.asarray(m) for m in doc["best_weights"]))
        rng = np.random.default_rng(int(doc["seed"]))
        return restricted.predict(params, x, mode, best, samples, rng)
    if doc["kind"] == "ffnn":
        ws = WeightSet(tuple(np.asarray(m) for m in doc["weights"]))
        return forward(ws, topo, x)
    vp = bnn.VariationalParams(
        topo, tuple(np.asarray(m) for m in doc["mu"]), tuple(np.asarray(r) for r in doc["rho"])
    )
    rng = np.random.default_rng(int(doc["seed"]))
    return bnn.predict_batch(vp, x[None, :], int(doc.get("mc_eval", 10)), rng)[0]


def run_predict(model_path: str, input_spec: str) -> int:
    doc = load_model(model_path)
    if os.path.exists(input_spec):
        table = data.load_csv(input_spec)
        rows = [np.array([c for c in r], dtype=np.float64) for r in table.rows]
    else:
        try:
            rows = [np.array([float(p) for p in input_spec.split(",")])]
        except ValueError:
            raise ConfigError(f"input {input_spec!r} is neither a file nor an inline vector")
    for x in rows:
        p = predict_vector(doc, x)
        probs = " ".join(f"{v:.6f}" for v in p)
        print(f"probabilities: [{probs}]  class: {int(np.argmax(p))}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rbnn", description="Train and compare gradient-free and baseline networks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one model from a JSON config")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--out", default=None)

    p_cmp = sub.add_parser("compare", help="train several models on one shared split")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", default=None)

    p_par = sub.add_parser("params", help="print the stored-parameter count")
    p_par.add_argument("--model", required=True)
    p_par.add_argument("--topology", required=True, help="comma list d,n1,...,nL")

    p_pred = sub.add_parser("predict", help="predict with a persisted model")
    p_pred.add_argument("--model", required=True, help="path to model.json")
    p_pred.add_argument("--input", required=True, help="inline vector or CSV path")

    args = parser.parse_args(argv)
    try:
        if args.command in ("train", "compare"):
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg["seed"] = args.seed
            out = Path(args.out or cfg.get("output_dir", "out"))
            if args.command == "train":
                return run_train(cfg, out)
            return run_compare(cfg, out)
        if args.command == "params":
            return run_params(args.model, args.topology)
        return run_predict(args.model, args.input)
    except (ConfigError, data.DataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ArithmeticError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
