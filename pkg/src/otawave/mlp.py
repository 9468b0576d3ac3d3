"""Small fully connected ReLU network with hand-written backprop and Adam."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MLPParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def init(cls, sizes, rng) -> MLPParams:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
        ws, bs = [], []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            lim = 1.0 / np.sqrt(n_in)
            ws.append(rng.uniform(-lim, lim, (n_in, n_out)))
            bs.append(np.zeros(n_out))
        return cls(ws, bs)

    @classmethod
    def zeros_like(cls, other: MLPParams) -> MLPParams:
        return cls([np.zeros_like(w) for w in other.weights], [np.zeros_like(b) for b in other.biases])

    def copy(self) -> MLPParams:
        return MLPParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def arrays(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def save(self, path) -> None:
        np.savez(path, **{f"w{i}": w for i, w in enumerate(self.weights)},
                 **{f"b{i}": b for i, b in enumerate(self.biases)})

    @classmethod
    def load(cls, path) -> MLPParams:
        with np.load(path) as f:
            n = sum(1 for k in f.files if k.startswith("w"))
            return cls([f[f"w{i}"] for i in range(n)], [f[f"b{i}"] for i in range(n)])


def forward(params: MLPParams, u: np.ndarray, return_cache: bool = False):
    """ReLU hidden layers, linear output.  ``u`` is (B, n_in) or (n_in,)."""
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    x = u[None, :] if single else u
    if x.shape[1] != params.sizes[0]:
        raise ValueError(f"input width {x.shape[1]} != network input {params.sizes[0]}")
    acts = [x]
    n_layers = len(params.weights)
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        x = x @ w + b
        if i < n_layers - 1:
            x = np.maximum(x, 0.0)
        acts.append(x)
    out = x[0] if single else x
    return (out, acts) if return_cache else out


def backward(params: MLPParams, acts: list[np.ndarray], d_out: np.ndarray) -> MLPParams:
    grads = MLPParams.zeros_like(params)
    g = d_out
    for i in range(len(params.weights) - 1, -1, -1):
        grads.weights[i] = acts[i].T @ g
        grads.biases[i] = g.sum(axis=0)
        if i > 0:
            g = (g @ params.weights[i].T) * (acts[i] > 0)
    return grads


class Adam:
    def __init__(self, params: MLPParams, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params.arrays()]
        self.v = [np.zeros_like(p) for p in params.arrays()]
        self.t = 0

    def step(self, params: MLPParams, grads: MLPParams) -> None:
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for p, g, m, v in zip(params.arrays(), grads.arrays(), self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
