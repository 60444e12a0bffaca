"""Train all three models on the bundled iris data with one shared split.

Writes losscurve.csv, results.json and one model_*.json per model under
--out (default results/iris). The configuration mirrors the settings used
in the acceptance suite, so the column-Gaussian model should land around
0.97 test accuracy and both baselines at or near 1.0.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from rbnn import cli  # noqa: E402

CONFIG = {
    "models": ["rbnn", "ffnn", "bnn"],
    "data": "iris",
    "schema": {"label_column": "species"},
    "topology": [4, 8, 3],
    "activations": ["tanh", "softmax"],
    "use_bias": True,
    "test_fraction": 0.2,
    "seed": 2,
    "rbnn": {
        "population_size": 100,
        "iterations": 200,
        "sigma0": 1.0,
        "sigma_decay": 0.97,
        "loss_kind": "cross_entropy",
    },
    "ffnn": {"learning_rate": 0.01, "epochs": 500, "loss_kind": "cross_entropy"},
    "bnn": {"learning_rate": 0.05, "epochs": 300, "minibatch_size": 16},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/iris")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    cfg = dict(CONFIG)
    if args.seed is not None:
        cfg["seed"] = args.seed
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(cfg, fh)
        cfg_path = fh.name
    return cli.main(["compare", "--config", cfg_path, "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
