"""Independent numeric oracles shared across test modules."""

import numpy as np

from rbnn.network import WeightSet, forward, loss


def finite_difference_grads(ws, topo, x, y, kind, h=1e-5):
    """Central-difference oracle for the per-example loss gradient."""
    grads = []
    for l, W in enumerate(ws.matrices):
        G = np.zeros_like(W)
        for idx in np.ndindex(W.shape):
            def perturbed(delta):
                mats = [m.copy() for m in ws.matrices]
                mats[l][idx] += delta
                out = forward(WeightSet(tuple(mats)), topo, x)
                return loss(kind, y, out)

            G[idx] = (perturbed(h) - perturbed(-h)) / (2 * h)
        grads.append(G)
    return grads


def max_rel_error(analytic, numeric):
    worst = 0.0
    for A, N in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(A), np.abs(N)), 1e-8)
        worst = max(worst, float(np.max(np.abs(A - N) / denom)))
    return worst
