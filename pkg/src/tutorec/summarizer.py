"""Unsupervised extractive transcript summarizer.

A per-token gate scores how much each token belongs in the summary. Training
needs no labels: it pairs each transcript with a random other one and
minimizes two terms jointly. The distinctiveness term pushes gated summary
representations of different transcripts apart while pulling their residual
(non-summary) representations together, on the premise that chitchat looks
alike everywhere. The info-retention term trains a discriminator to tell a
document paired with its own summary from one paired with a foreign summary,
forcing summaries to keep what identifies their document. Inference keeps
tokens whose gate value clears a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Transcript
from .nn import (
    Grads,
    GateNetwork,
    PairClassifier,
    TrainConfig,
    accumulate,
    check_finite,
    clamp_probability,
    load_checkpoint,
    save_checkpoint,
    sgd_step,
    softmax,
)

PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class DocRepresentations:
    """Max-pooled document views: raw, summary-gated, and complement-gated."""

    full: np.ndarray
    summary: np.ndarray
    residual: np.ndarray


@dataclass(frozen=True)
class Summary:
    indices: tuple[int, ...]
    tokens: tuple[str, ...]


@dataclass
class SummarizerModel:
    gate: GateNetwork
    discriminator: PairClassifier
    backend: object  # anything with .dim and .token_vectors(transcript)
    select_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.select_threshold < 1.0:
            raise ValueError("select_threshold must lie in (0, 1)")


def doc_representations(embeddings: np.ndarray, gate: GateNetwork) -> DocRepresentations:
    """Pool a token matrix into the three document views."""
    g = gate.gates(embeddings)[0]
    return DocRepresentations(
        full=embeddings.max(axis=0),
        summary=(embeddings * g[:, None]).max(axis=0),
        residual=(embeddings * (1.0 - g)[:, None]).max(axis=0),
    )


def distinctiveness_loss(rep_i: DocRepresentations, rep_j: DocRepresentations,
                         alpha: float, beta: float) -> float:
    """Summary-overlap minus residual-overlap between two documents.

    Overlap is the inner product of softmax-normalized representations, so
    minimizing the loss separates summaries and aligns residuals.
    """
    s_i, s_j = softmax(rep_i.summary), softmax(rep_j.summary)
    r_i, r_j = softmax(rep_i.residual), softmax(rep_j.residual)
    return float(alpha * (s_i @ s_j) - beta * (r_i @ r_j))


def info_retention_loss(full_i: np.ndarray, summary_i: np.ndarray,
                        summary_j: np.ndarray, discriminator: PairClassifier) -> float:
    """Contrastive loss: own summary should look real, a foreign one fake."""
    p_pos = clamp_probability(discriminator.probability(np.concatenate([full_i, summary_i])))
    p_neg = clamp_probability(discriminator.probability(np.concatenate([full_i, summary_j])))
    return -(math.log(p_pos) + math.log(1.0 - p_neg))


# ---------------------------------------------------------------------------
# fused forward/backward for one transcript pair


def _softmax_inner_grad(s_self: np.ndarray, s_other: np.ndarray) -> np.ndarray:
    # d(s_self . s_other)/d(pre-softmax self) via the softmax Jacobian
    return s_self * (s_other - float(s_self @ s_other))


class _PooledDoc:
    """Forward caches for one document: gates, pools, and argmax routes."""

    def __init__(self, embeddings: np.ndarray, gate: GateNetwork):
        self.e = embeddings
        self.g, self.hidden = gate.gates(embeddings)
        summary_mat = embeddings * self.g[:, None]
        residual_mat = embeddings * (1.0 - self.g)[:, None]
        self.summary_arg = summary_mat.argmax(axis=0)
        self.residual_arg = residual_mat.argmax(axis=0)
        dims = np.arange(embeddings.shape[1])
        self.full = embeddings.max(axis=0)
        self.summary = summary_mat[self.summary_arg, dims]
        self.residual = residual_mat[self.residual_arg, dims]

    def gate_grads(self, gate: GateNetwork, d_summary: np.ndarray,
                   d_residual: np.ndarray) -> Grads:
        """Route pooled gradients through the argmax winners to the gate."""
        dims = np.arange(self.e.shape[1])
        dg = np.zeros(self.e.shape[0])
        np.add.at(dg, self.summary_arg, d_summary * self.e[self.summary_arg, dims])
        np.add.at(dg, self.residual_arg, -d_residual * self.e[self.residual_arg, dims])
        return gate.backward(self.e, self.hidden, self.g, dg)


def pair_loss_and_grads(
    gate: GateNetwork,
    discriminator: PairClassifier,
    emb_i: np.ndarray,
    emb_j: np.ndarray,
    config: TrainConfig,
) -> tuple[float, Grads, Grads]:
    """Combined loss for one transcript pair plus exact parameter gradients."""
    doc_i = _PooledDoc(emb_i, gate)
    doc_j = _PooledDoc(emb_j, gate)

    s_i, s_j = softmax(doc_i.summary), softmax(doc_j.summary)
    r_i, r_j = softmax(doc_i.residual), softmax(doc_j.residual)
    dist = config.alpha * float(s_i @ s_j) - config.beta * float(r_i @ r_j)

    x_pos = np.concatenate([doc_i.full, doc_i.summary])
    x_neg = np.concatenate([doc_i.full, doc_j.summary])
    p_pos, t_pos = discriminator.forward(x_pos)
    p_neg, t_neg = discriminator.forward(x_neg)
    cp_pos = clamp_probability(p_pos)
    cp_neg = clamp_probability(p_neg)
    retention = -(math.log(cp_pos) + math.log(1.0 - cp_neg))

    check_finite(dist, "distinctiveness")
    check_finite(retention, "info-retention")
    loss = config.loss_mix_alpha * retention + config.loss_mix_beta * dist

    # discriminator backward; the clamp zeroes the gradient when saturated
    dp_pos = -config.loss_mix_alpha / cp_pos if PROB_CLAMP < p_pos < 1.0 - PROB_CLAMP else 0.0
    dp_neg = config.loss_mix_alpha / (1.0 - cp_neg) if PROB_CLAMP < p_neg < 1.0 - PROB_CLAMP else 0.0
    disc_grads_pos, dx_pos = discriminator.backward(x_pos, t_pos, p_pos, dp_pos)
    disc_grads_neg, dx_neg = discriminator.backward(x_neg, t_neg, p_neg, dp_neg)
    disc_grads = accumulate(disc_grads_pos, disc_grads_neg)

    # pooled-representation gradients; the raw full-document pool has no
    # trainable parameters, so its share of dx is dropped
    d = emb_i.shape[1]
    ma, mb = config.loss_mix_alpha, config.loss_mix_beta
    d_summary_i = mb * config.alpha * _softmax_inner_grad(s_i, s_j) + dx_pos[d:]
    d_summary_j = mb * config.alpha * _softmax_inner_grad(s_j, s_i) + dx_neg[d:]
    d_residual_i = -mb * config.beta * _softmax_inner_grad(r_i, r_j)
    d_residual_j = -mb * config.beta * _softmax_inner_grad(r_j, r_i)

    gate_grads = doc_i.gate_grads(gate, d_summary_i, d_residual_i)
    gate_grads = accumulate(gate_grads, doc_j.gate_grads(gate, d_summary_j, d_residual_j))
    return loss, gate_grads, disc_grads


# ---------------------------------------------------------------------------
# training and inference


def train_summarizer(
    transcripts: Sequence[Transcript],
    backend,
    config: TrainConfig,
    select_threshold: float = 0.5,
) -> tuple[SummarizerModel, list[float]]:
    """Train gate and discriminator jointly; returns the model and the
    per-epoch mean loss history.

    Each epoch shuffles the transcripts and pairs every transcript with a
    random partner, namely its successor in the shuffled order, so each
    transcript also serves exactly once as a partner and the per-epoch pair
    mix stays balanced. The same sampled partner feeds both loss terms.
    Bitwise deterministic for a fixed config.
    """
    if len(transcripts) < 2:
        raise ValueError("summarizer training needs at least two transcripts")
    rng = np.random.default_rng(config.seed)
    dim = backend.dim
    gate = GateNetwork.create(dim, config.hidden_dim, rng)
    discriminator = PairClassifier.create(2 * dim, config.hidden_dim, rng)
    embeddings = [backend.token_vectors(t) for t in transcripts]

    history: list[float] = []
    n = len(transcripts)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for pos, i in enumerate(order):
            j = int(order[(pos + 1) % n])
            loss, gate_grads, disc_grads = pair_loss_and_grads(
                gate, discriminator, embeddings[int(i)], embeddings[j], config
            )
            sgd_step(gate.params(), gate_grads, config.learning_rate)
            sgd_step(discriminator.params(), disc_grads, config.learning_rate)
            total += loss
        history.append(total / n)

    model = SummarizerModel(gate, discriminator, backend, select_threshold)
    return model, history


def summarize(transcript: Transcript, model: SummarizerModel) -> Summary:
    """Tokens whose gate value clears the threshold, in original order.

    If thresholding keeps nothing or everything, fall back to the top half
    (ceil(n/2)) of tokens by gate value, so the summary is always a proper
    shortening for n >= 2. A single-token transcript summarizes to itself.
    """
    tokens = transcript.tokens
    n = len(tokens)
    embeddings = model.backend.token_vectors(transcript)
    g = model.gate.gates(embeddings)[0]
    indices = [i for i in range(n) if g[i] > model.select_threshold]
    if n == 1:
        indices = [0]
    elif not indices or len(indices) == n:
        keep = (n + 1) // 2
        by_gate = sorted(range(n), key=lambda i: (-g[i], i))[:keep]
        indices = sorted(by_gate)
    return Summary(
        indices=tuple(indices),
        tokens=tuple(tokens[i] for i in indices),
    )


def summary_record(transcript_id: str, summary: Summary) -> dict:
    return {"transcript_id": transcript_id, "kept_token_indices": list(summary.indices)}


# ---------------------------------------------------------------------------
# checkpointing


def save_summarizer(path: str | Path, model: SummarizerModel) -> None:
    arrays = {f"gate.{k}": v for k, v in model.gate.params().items()}
    arrays.update({f"disc.{k}": v for k, v in model.discriminator.params().items()})
    save_checkpoint(path, "summarizer", arrays, {"select_threshold": model.select_threshold})


def load_summarizer(path: str | Path, backend) -> SummarizerModel:
    kind, arrays, meta = load_checkpoint(path)
    if kind != "summarizer":
        raise ValueError(f"{path}: expected a summarizer checkpoint, found {kind!r}")
    gate = GateNetwork(arrays["gate.w2"], arrays["gate.b2"], arrays["gate.w1"], arrays["gate.b1"])
    disc = PairClassifier(arrays["disc.v"], arrays["disc.c"], arrays["disc.u"], arrays["disc.b"])
    return SummarizerModel(gate, disc, backend, float(meta["select_threshold"]))
