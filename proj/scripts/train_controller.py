#!/usr/bin/env python3
"""Generate controller weight files for the example configs.

  double-integrator  2-10-5-1 ReLU net fitted to a saturated LQR law
  random             Gaussian ReLU net with the given widths

Both write {"layers": [{"W": [[...]], "b": [...]}, ...]}.
"""

import argparse
import json

import numpy as np
from scipy.linalg import solve_discrete_are


def lqr_gain(A, B, Q, R):
    P = solve_discrete_are(A, B, Q, R)
    return np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


def init_layers(widths, rng, bias_scale=0.1):
    layers = []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        W = rng.standard_normal((n_out, n_in)) / np.sqrt(n_in)
        b = bias_scale * rng.standard_normal(n_out)
        layers.append([W, b])
    return layers


def forward(layers, X):
    acts = [X]
    h = X
    for i, (W, b) in enumerate(layers):
        z = h @ W.T + b
        h = np.maximum(z, 0.0) if i + 1 < len(layers) else z
        acts.append(h)
    return acts


def fit(layers, X, Y, steps, lr, seed):
    """Full-batch Adam on mean squared error."""
    rng = np.random.default_rng(seed)
    m = [[np.zeros_like(W), np.zeros_like(b)] for W, b in layers]
    v = [[np.zeros_like(W), np.zeros_like(b)] for W, b in layers]
    b1, b2, eps = 0.9, 0.999, 1e-8
    for t in range(1, steps + 1):
        idx = rng.choice(len(X), size=min(512, len(X)), replace=False)
        acts = forward(layers, X[idx])
        grad = 2.0 * (acts[-1] - Y[idx]) / len(idx)
        for i in reversed(range(len(layers))):
            W, _ = layers[i]
            gW = grad.T @ acts[i]
            gb = grad.sum(axis=0)
            grad = grad @ W
            if i > 0:
                grad = grad * (acts[i] > 0.0)
            for j, g in enumerate((gW, gb)):
                m[i][j] = b1 * m[i][j] + (1 - b1) * g
                v[i][j] = b2 * v[i][j] + (1 - b2) * g * g
                mh = m[i][j] / (1 - b1**t)
                vh = v[i][j] / (1 - b2**t)
                layers[i][j] = layers[i][j] - lr * mh / (np.sqrt(vh) + eps)
    return layers


def save(layers, path):
    doc = {"layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in layers]}
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def double_integrator(args):
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = np.array([[0.5], [1.0]])
    K = lqr_gain(A, B, np.eye(2), np.eye(1))
    rng = np.random.default_rng(args.seed)
    X = rng.uniform([-4.0, -3.0], [4.0, 3.0], size=(8192, 2))
    Y = np.clip(-X @ K.T, -1.0, 1.0)
    layers = fit(init_layers([2, 10, 5, 1], rng), X, Y, args.steps, 3e-3, args.seed)
    err = np.abs(forward(layers, X)[-1] - Y).max()
    print(f"K = {K.ravel()}, max fit error {err:.3e}")
    save(layers, args.out)


def random_net(args):
    widths = [int(w) for w in args.widths.split("-")]
    rng = np.random.default_rng(args.seed)
    layers = init_layers(widths, rng)
    layers[-1][0] *= args.output_scale
    layers[-1][1] *= args.output_scale
    save(layers, args.out)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    sub = p.add_subparsers(dest="cmd", required=True)
    di = sub.add_parser("double-integrator")
    di.add_argument("--out", required=True)
    di.add_argument("--seed", type=int, default=0)
    di.add_argument("--steps", type=int, default=4000)
    di.set_defaults(run=double_integrator)
    rn = sub.add_parser("random")
    rn.add_argument("--widths", required=True, help="e.g. 6-32-32-3")
    rn.add_argument("--out", required=True)
    rn.add_argument("--seed", type=int, default=0)
    rn.add_argument("--output-scale", type=float, default=1.0)
    rn.set_defaults(run=random_net)
    args = p.parse_args()
    args.run(args)


if __name__ == "__main__":
    main()
