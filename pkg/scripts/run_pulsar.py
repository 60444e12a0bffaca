"""Train the column-Gaussian model on the HTRU2 pulsar data.

The HTRU2 CSV is not bundled (17k rows); download it separately and pass
--data. The file must have a header row, eight numeric feature columns and
a final 0/1 label column.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from rbnn import cli  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default="data/HTRU_2.csv")
    ap.add_argument("--out", default="results/pulsar")
    ap.add_argument("--seed", type=int, default=2)
    args = ap.parse_args()

    cfg = {
        "model": "rbnn",
        "data_path": args.data,
        "schema": {"label_column": -1, "missing_policy": "drop_rows"},
        "topology": [8, 8, 2],
        "activations": ["tanh", "softmax"],
        "use_bias": True,
        "test_fraction": 0.2,
        "seed": args.seed,
        "rbnn": {
            "population_size": 100,
            "iterations": 100,
            "sigma0": 1.0,
            "sigma_decay": 0.96,
            "loss_kind": "cross_entropy",
        },
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(cfg, fh)
        cfg_path = fh.name
    return cli.main(["train", "--config", cfg_path, "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
