"""Justification path: answer embedding, second attention head, triple-product
fusion, and the recurrent word decoder.

The two attention heads read from the same joint grid but own disjoint
parameters, so perturbing anything under ``explain/`` cannot change the
answer distribution. When ``cfg.answer_conditioning`` is off the answer
embedding is replaced by a constant all-ones vector, which ablates the
decision signal while keeping the architecture (and parameter shapes)
identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import AttentionMap
from .answer import (
    EVAL,
    AnswerDistribution,
    PooledGrid,
    QuestionEncoding,
    RunMode,
    compute_answer_attention,
    encode_question,
    pool_multimodal,
    predict_answer,
    _attention_from_logits,
)
from .data.vocab import BOS_ID, EOS_ID
from .errors import ContractError, ParameterError
from .params import ModelConfig, ModelParams
from .tensor import (
    Tensor,
    concat,
    dropout,
    gather_rows,
    l2_normalize,
    lstm_step,
    matmul,
    no_grad,
    relu,
    signed_sqrt,
    softmax,
    tanh,
    transpose,
)


@dataclass
class ExplanationOutput:
    tokens: list[int]  # generated ids, BOS/EOS excluded
    step_logprobs: list[float]  # log-prob of each emitted token, EOS included
    attention: AttentionMap | None = field(default=None, compare=False)

    @property
    def logprob(self) -> float:
        return float(sum(self.step_logprobs))


def one_hot_answer(index: int, cfg: ModelConfig) -> Tensor:
    vec = np.zeros((1, cfg.answer_vocab_size))
    vec[0, index] = 1.0
    return Tensor(vec)


def embed_answer(answer: Tensor, params: ModelParams) -> Tensor:
    """Two affine maps around a tanh; input must be a one-hot row vector."""
    data = answer.data
    nonzero = np.flatnonzero(data)
    if nonzero.size == 0:
        raise ContractError("answer one-hot is all zero")
    if nonzero.size != 1 or data.reshape(-1)[nonzero[0]] != 1.0:
        raise ContractError("answer vector must be one-hot with a single 1")
    hidden = tanh(matmul(answer, params["explain/w5"]) + params["explain/b5"])
    return matmul(hidden, params["explain/w6"]) + params["explain/b6"]


def answer_embedding(answer_index: int, params: ModelParams, cfg: ModelConfig) -> Tensor:
    """Answer embedding, or the constant ones vector in the un-conditioned ablation."""
    if not cfg.answer_conditioning:
        return Tensor(np.ones((1, cfg.answer_embed_dim)))
    return embed_answer(one_hot_answer(answer_index, cfg), params)


def compute_explanation_attention(
    pooled: PooledGrid,
    answer_emb: Tensor,
    params: ModelParams,
    cfg: ModelConfig,
    mode: RunMode = EVAL,
) -> AttentionMap:
    """Project the joint grid, gate it by the answer embedding, normalize,
    then score each location and softmax over the grid."""
    gated = (matmul(pooled.joint, params["explain/w7"]) + params["explain/b7"]) * answer_emb
    feat = dropout(l2_normalize(signed_sqrt(gated), axis=1), mode.dropout, mode.training, mode.rng)
    hidden = relu(matmul(feat, params["explain/w8"]) + params["explain/b8"])
    logits = matmul(hidden, params["explain/w9"]) + params["explain/b9"]
    return _attention_from_logits(logits, cfg)


def fuse_features(
    feats: Tensor,
    att: AttentionMap,
    q: QuestionEncoding,
    answer_emb: Tensor,
    params: ModelParams,
) -> Tensor:
    """Element-wise triple product of the projected attended visual feature,
    the projected question encoding, and the answer embedding."""
    visual = matmul(transpose(att.tensor), feats)  # (1, C)
    return (
        (matmul(visual, params["explain/w10"]) + params["explain/b10"])
        * (matmul(q.vector, params["explain/w11"]) + params["explain/b11"])
        * answer_emb
    )


def _decoder_step(fused: Tensor, word_id: int, h: Tensor, c: Tensor, params: ModelParams):
    emb = gather_rows(params["explain/word_embed"], [word_id])
    x = concat([fused, emb], axis=1)
    h, c = lstm_step(x, h, c, params.decoder)
    probs = softmax(matmul(h, params["explain/w_pred"]) + params["explain/b_pred"], axis=1)
    return probs, h, c


def teacher_forced_probs(fused: Tensor, gold_ids: list[int], params: ModelParams, cfg: ModelConfig) -> list[Tensor]:
    """Per-step word distributions with the gold previous word fed back.

    ``gold_ids`` is the reference including the terminal EOS; step t sees
    BOS + gold[:t] as history and should predict gold[t].
    """
    dh = cfg.decoder_hidden
    h = c = Tensor(np.zeros((1, dh)))
    prev = BOS_ID
    out = []
    for gold in gold_ids:
        probs, h, c = _decoder_step(fused, prev, h, c, params)
        out.append(probs)
        prev = gold
    return out


def decode_explanation(
    fused: Tensor,
    params: ModelParams,
    cfg: ModelConfig,
    mode: str = "greedy",
    beam_width: int = 1,
    max_len: int | None = None,
) -> ExplanationOutput:
    """Free-running decode from BOS until EOS or ``max_len``.

    Greedy takes the argmax each step (ties to the lowest id). Beam keeps
    ``beam_width`` prefixes ranked by raw summed log-probability; finished
    prefixes stay in the pool and compete unchanged.
    """
    if max_len is None:
        max_len = cfg.max_len
    if max_len < 1:
        raise ParameterError(f"max_len must be >= 1, got {max_len}")
    if mode == "greedy":
        beam_width = 1
    elif mode != "beam":
        raise ParameterError(f"unknown decode mode {mode!r}")
    if beam_width < 1:
        raise ParameterError(f"beam width must be >= 1, got {beam_width}")

    with no_grad():
        return _beam_decode(fused, params, cfg, beam_width, max_len)


def _beam_decode(fused, params, cfg, k, max_len) -> ExplanationOutput:
    dh = cfg.decoder_hidden
    zero = Tensor(np.zeros((1, dh)))
    # hypothesis: (tokens, step logps, h, c, finished)
    beams = [([], [], zero, zero, False)]
    for _ in range(max_len):
        if all(b[4] for b in beams):
            break
        candidates = []
        for tokens, logps, h, c, finished in beams:
            if finished:
                candidates.append((tokens, logps, h, c, True))
                continue
            prev = tokens[-1] if tokens else BOS_ID
            probs, h2, c2 = _decoder_step(fused, prev, h, c, params)
            logp = np.log(np.maximum(probs.data.reshape(-1), 1e-300))
            top = np.argsort(-logp, kind="stable")[:k]
            for tok in top:
                tok = int(tok)
                candidates.append(
                    (tokens + [tok], logps + [float(logp[tok])], h2, c2, tok == EOS_ID)
                )
        candidates.sort(key=lambda b: (-sum(b[1]), tuple(b[0])))
        beams = candidates[:k]
    tokens, logps, _, _, _ = beams[0]
    if tokens and tokens[-1] == EOS_ID:
        tokens = tokens[:-1]
    return ExplanationOutput(tokens=tokens, step_logprobs=logps)


@dataclass
class FullOutput:
    answer: AnswerDistribution
    explanation: ExplanationOutput
    att_answer: AttentionMap
    att_explanation: AttentionMap


def explain(
    feats: Tensor,
    token_ids: list[int],
    params: ModelParams,
    cfg: ModelConfig,
    beam_width: int = 1,
) -> FullOutput:
    """Full pipeline: answer the question, then justify the predicted answer.

    Returns the answer distribution, the generated justification, and both
    attention maps so they can be compared.
    """
    with no_grad():
        q = encode_question(token_ids, params, cfg)
        pooled = pool_multimodal(feats, q, params)
        att_a = compute_answer_attention(pooled, params, cfg)
        dist = predict_answer(feats, q, att_a, params)
        emb = answer_embedding(dist.top_index, params, cfg)
        att_x = compute_explanation_attention(pooled, emb, params, cfg)
        fused = fuse_features(feats, att_x, q, emb, params)
        mode = "beam" if beam_width > 1 else "greedy"
        out = decode_explanation(fused, params, cfg, mode=mode, beam_width=beam_width)
    out.attention = att_x
    return FullOutput(answer=dist, explanation=out, att_answer=att_a, att_explanation=att_x)
