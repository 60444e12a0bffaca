"""Print the stored-parameter comparison table for a few topologies.

Shows why the column-Gaussian model is so compact: it stores one scalar
per non-input neuron (plus the shared sigma) while the baselines store
one (ffnn) or two (bnn) scalars per edge.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from rbnn.cli import parse_topology_string  # noqa: E402
from rbnn.network import param_count  # noqa: E402

TOPOLOGIES = ["2,2,2,2", "4,2,2,2", "8,2,2,2", "4,8,3", "8,8,2"]


def main():
    print(f"{'topology':>12} {'rbnn':>6} {'ffnn':>6} {'bnn':>6}")
    for s in TOPOLOGIES:
        topo = parse_topology_string(s)
        counts = [param_count(m, topo) for m in ("rbnn", "ffnn", "bnn")]
        print(f"{s:>12} {counts[0]:>6} {counts[1]:>6} {counts[2]:>6}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
