"""Answer path: encode the question, pool it with the feature grid, attend,
and classify over the answer vocabulary.

All spatial tensors are (L, dim) with location l = row * cols + col. The
question encoding multiplies the grid both after the channel embedding and
against the raw attended feature, which is why its dimension equals the
channel count (see params.ModelConfig).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import AttentionMap
from .errors import InputError
from .params import ModelConfig, ModelParams
from .tensor import (
    Tensor,
    dropout,
    gather_rows,
    l2_normalize,
    lstm_step,
    matmul,
    relu,
    signed_sqrt,
    softmax,
    transpose,
)
from .data.vocab import UNK_ID


@dataclass
class RunMode:
    """Forward-pass switches: dropout only fires in training mode."""

    training: bool = False
    dropout: float = 0.0
    rng: np.random.Generator | None = None


EVAL = RunMode()


@dataclass
class QuestionEncoding:
    vector: Tensor  # (1, q_dim)
    mode: str  # "question" | "ones"


@dataclass
class PooledGrid:
    """Joint feature grid before and after normalization.

    ``joint`` is the raw embedded-times-question product that the
    justification attention consumes; ``normalized`` adds signed square
    root, per-location L2 normalization and dropout for the answer head.
    """

    joint: Tensor  # (L, q_dim)
    normalized: Tensor  # (L, q_dim)


@dataclass
class AnswerDistribution:
    probs: np.ndarray  # (|Y|,)
    top_index: int
    tensor: Tensor = field(repr=False, compare=False, default=None)

    @classmethod
    def from_tensor(cls, t: Tensor) -> "AnswerDistribution":
        probs = t.data.reshape(-1).copy()
        return cls(probs=probs, top_index=int(np.argmax(probs)), tensor=t)


def encode_question(token_ids, params: ModelParams, cfg: ModelConfig) -> QuestionEncoding:
    """Final hidden state of the 2-layer recurrent encoder over embedded tokens.

    In "ones" mode (activity recognition) the tokens are ignored and the
    encoding is the all-ones vector. Out-of-vocabulary ids fall back to UNK.
    """
    if cfg.question_mode == "ones":
        return QuestionEncoding(Tensor(np.ones((1, cfg.q_dim))), mode="ones")
    ids = [t if 0 <= t < cfg.token_vocab_size else UNK_ID for t in token_ids]
    if not ids:
        raise InputError("cannot encode an empty question in question mode")
    h1 = c1 = h2 = c2 = Tensor(np.zeros((1, cfg.q_dim)))
    enc1, enc2 = params.encoder1, params.encoder2
    for tok in ids:
        x = gather_rows(params["answer/word_embed"], [tok])
        h1, c1 = lstm_step(x, h1, c1, enc1)
        h2, c2 = lstm_step(h1, h2, c2, enc2)
    return QuestionEncoding(h2, mode="question")


def pool_multimodal(
    feats: Tensor,
    q: QuestionEncoding,
    params: ModelParams,
    mode: RunMode = EVAL,
) -> PooledGrid:
    """Per-location channel embedding times the question encoding, then
    signed sqrt, L2 normalization over each location's vector, and dropout."""
    joint = (matmul(feats, params["answer/w1"]) + params["answer/b1"]) * q.vector
    normalized = dropout(
        l2_normalize(signed_sqrt(joint), axis=1), mode.dropout, mode.training, mode.rng
    )
    return PooledGrid(joint=joint, normalized=normalized)


def _attention_from_logits(logits: Tensor, cfg: ModelConfig) -> AttentionMap:
    flat = softmax(logits, axis=0)
    return AttentionMap(flat.data.reshape(cfg.grid_n, cfg.grid_m).copy(), tensor=flat)


def compute_answer_attention(pooled: PooledGrid, params: ModelParams, cfg: ModelConfig) -> AttentionMap:
    """Two per-location affine layers with a ReLU between, softmax over all
    N*M locations."""
    hidden = relu(matmul(pooled.normalized, params["answer/w2"]) + params["answer/b2"])
    logits = matmul(hidden, params["answer/w3"]) + params["answer/b3"]
    return _attention_from_logits(logits, cfg)


def predict_answer(
    feats: Tensor,
    q: QuestionEncoding,
    att: AttentionMap,
    params: ModelParams,
) -> AnswerDistribution:
    """Attention-weighted sum of raw features times the question encoding,
    mapped affinely to answer logits; ties in the argmax break low."""
    attended = matmul(transpose(att.tensor), feats)  # (1, C)
    fused = attended * q.vector
    logits = matmul(fused, params["answer/w4"]) + params["answer/b4"]
    return AnswerDistribution.from_tensor(softmax(logits, axis=1))
