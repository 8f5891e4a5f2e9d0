"""Minimal differentiable kit for the small networks used in this project.

Only two architectures exist: the per-token gate network (two affine maps
feeding a sigmoid, no hidden nonlinearity) and a pair classifier (affine,
tanh, affine, sigmoid) used for the summary discriminator, the discourse
classifier, and the supervised link head. Forward and backward passes are
written out by hand against numpy so that training is bitwise deterministic
and every gradient can be checked against finite differences. Optimization
is plain SGD.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .corpus import FormatError

PROB_CLAMP = 1e-7

Grads = dict[str, np.ndarray]


def sigmoid(x):
    """Numerically stable logistic function; scalars in, float out."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out[0]) if scalar else out


def softmax(v: np.ndarray) -> np.ndarray:
    """Probability vector over the entries of ``v``, max-shifted for stability."""
    v = np.asarray(v, dtype=float)
    shifted = v - v.max()
    ex = np.exp(shifted)
    return ex / ex.sum()


def clamp_probability(p: float) -> float:
    return float(min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP))


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 100
    seed: int = 0
    alpha: float = 1.0        # distinctiveness: weight on summary-summary similarity
    beta: float = 1.0         # distinctiveness: weight on residual-residual similarity
    loss_mix_alpha: float = 1.0  # weight on the info-retention loss in the combined loss
    loss_mix_beta: float = 1.0   # weight on the distinctiveness loss in the combined loss
    hidden_dim: int = 64

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")


class GateNetwork:
    """Per-token relevance gate: sigmoid(w1 . (W2 e + b2) + b1) in (0, 1)."""

    def __init__(self, w2: np.ndarray, b2: np.ndarray, w1: np.ndarray, b1: np.ndarray):
        self.w2 = np.asarray(w2, dtype=float)
        self.b2 = np.asarray(b2, dtype=float)
        self.w1 = np.asarray(w1, dtype=float)
        self.b1 = np.asarray(b1, dtype=float).reshape(())
        h, d = self.w2.shape
        if self.b2.shape != (h,) or self.w1.shape != (h,):
            raise ValueError("inconsistent gate parameter shapes")

    @classmethod
    def create(cls, dim: int, hidden_dim: int, rng: np.random.Generator) -> "GateNetwork":
        w2 = rng.standard_normal((hidden_dim, dim)) / math.sqrt(dim)
        w1 = rng.standard_normal(hidden_dim) / math.sqrt(hidden_dim)
        return cls(w2, np.zeros(hidden_dim), w1, np.zeros(()))

    @property
    def dim(self) -> int:
        return self.w2.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w2.shape[0]

    def gate(self, e: np.ndarray) -> float:
        e = np.asarray(e, dtype=float)
        if e.shape != (self.dim,):
            raise ValueError(f"expected embedding of dim {self.dim}, got shape {e.shape}")
        return float(sigmoid(self.w1 @ (self.w2 @ e + self.b2) + self.b1))

    def gates(self, embeddings: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gate values for an ``(n, d)`` token matrix.

        Returns ``(g, hidden)`` where ``hidden`` is the pre-sigmoid hidden
        activation matrix kept for the backward pass.
        """
        if embeddings.ndim != 2 or embeddings.shape[1] != self.dim:
            raise ValueError(f"expected (n, {self.dim}) embeddings, got {embeddings.shape}")
        hidden = embeddings @ self.w2.T + self.b2          # (n, h)
        g = sigmoid(hidden @ self.w1 + self.b1)            # (n,)
        return np.atleast_1d(g), hidden

    def backward(self, embeddings: np.ndarray, hidden: np.ndarray,
                 g: np.ndarray, dg: np.ndarray) -> Grads:
        """Parameter gradients given dLoss/dgate for each token."""
        dz = dg * g * (1.0 - g)                            # (n,)
        dhidden = np.outer(dz, self.w1)                    # (n, h)
        return {
            "w1": hidden.T @ dz,
            "b1": np.asarray(dz.sum()),
            "w2": dhidden.T @ embeddings,
            "b2": dhidden.sum(axis=0),
        }

    def params(self) -> Grads:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


def gate_forward(net: GateNetwork, e: np.ndarray) -> float:
    """Gate value for a single token embedding; strictly inside (0, 1)."""
    return net.gate(e)


class PairClassifier:
    """Two dense layers over a concatenated pair representation.

    ``p = sigmoid(u . tanh(V x + c) + b)``; the tanh hidden layer keeps the
    map smooth everywhere, which finite-difference gradient checks rely on.
    """

    def __init__(self, v: np.ndarray, c: np.ndarray, u: np.ndarray, b: np.ndarray):
        self.v = np.asarray(v, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.b = np.asarray(b, dtype=float).reshape(())
        h, _ = self.v.shape
        if self.c.shape != (h,) or self.u.shape != (h,):
            raise ValueError("inconsistent classifier parameter shapes")

    @classmethod
    def create(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "PairClassifier":
        v = rng.standard_normal((hidden_dim, input_dim)) / math.sqrt(input_dim)
        u = rng.standard_normal(hidden_dim) / math.sqrt(hidden_dim)
        return cls(v, np.zeros(hidden_dim), u, np.zeros(()))

    @property
    def input_dim(self) -> int:
        return self.v.shape[1]

    def forward(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"expected input of dim {self.input_dim}, got shape {x.shape}")
        t = np.tanh(self.v @ x + self.c)
        p = float(sigmoid(self.u @ t + self.b))
        return p, t

    def probability(self, x: np.ndarray) -> float:
        return self.forward(x)[0]

    def backward(self, x: np.ndarray, t: np.ndarray, p: float,
                 dp: float) -> tuple[Grads, np.ndarray]:
        """Parameter gradients and dLoss/dx given dLoss/dp."""
        dz = dp * p * (1.0 - p)
        dt = dz * self.u
        dpre = dt * (1.0 - t * t)
        grads = {
            "u": dz * t,
            "b": np.asarray(dz),
            "v": np.outer(dpre, x),
            "c": dpre,
        }
        return grads, self.v.T @ dpre

    def params(self) -> Grads:
        return {"u": self.u, "b": self.b, "v": self.v, "c": self.c}


# ---------------------------------------------------------------------------
# optimization


def sgd_step(params: Grads, grads: Grads, learning_rate: float) -> None:
    """In-place plain gradient-descent update."""
    for name, value in params.items():
        value -= learning_rate * grads[name]


def accumulate(into: Grads, grads: Grads) -> Grads:
    for name, g in grads.items():
        if name in into:
            into[name] = into[name] + g
        else:
            into[name] = np.array(g, dtype=float)
    return into


def scale_grads(grads: Grads, factor: float) -> Grads:
    return {name: factor * g for name, g in grads.items()}


def check_finite(value: float, term: str) -> float:
    if not math.isfinite(value):
        raise ValueError(f"non-finite {term} loss: {value!r}")
    return value


# ---------------------------------------------------------------------------
# gradient checking


def numeric_gradients(
    loss_fn: Callable[[], float],
    params: Mapping[str, np.ndarray],
    h: float = 1e-5,
) -> Grads:
    """Central finite differences of ``loss_fn`` w.r.t. every entry of ``params``.

    Parameters are perturbed in place and restored, so ``loss_fn`` must read
    them live (e.g. close over the owning network).
    """
    out: Grads = {}
    for name, value in params.items():
        grad = np.zeros_like(value)
        flat_v = value.reshape(-1)
        flat_g = grad.reshape(-1)
        for i in range(flat_v.size):
            original = flat_v[i]
            flat_v[i] = original + h
            plus = loss_fn()
            flat_v[i] = original - h
            minus = loss_fn()
            flat_v[i] = original
            flat_g[i] = (plus - minus) / (2.0 * h)
        out[name] = grad
    return out


# ---------------------------------------------------------------------------
# checkpoint files: one JSON manifest line, then raw little-endian float64


_CKPT_MAGIC = b"TUTOREC-CKPT 1\n"


def save_checkpoint(path: str | Path, kind: str, arrays: Mapping[str, np.ndarray],
                    meta: Mapping | None = None) -> None:
    manifest = {
        "kind": kind,
        "meta": dict(meta or {}),
        "arrays": [[name, list(arr.shape)] for name, arr in arrays.items()],
    }
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(json.dumps(manifest, sort_keys=True).encode("utf-8") + b"\n")
        for _, arr in arrays.items():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[str, dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != _CKPT_MAGIC:
            raise FormatError(f"{path}: not a checkpoint file")
        try:
            manifest = json.loads(fh.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise FormatError(f"{path}: corrupt checkpoint manifest") from None
        arrays: dict[str, np.ndarray] = {}
        for name, shape in manifest["arrays"]:
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise FormatError(f"{path}: truncated checkpoint array {name!r}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").astype(float).reshape(shape)
    return manifest["kind"], arrays, manifest.get("meta", {})
