"""Model configuration and the named-parameter registry.

Parameter names are namespaced ``answer/...`` or ``explain/...``; the two
attention heads share no weights, so the freeze-answer training regime and
the head-disjointness guarantees reduce to prefix filtering.

The question encoding is multiplied element-wise against both the embedded
feature grid and the raw attended feature vector, so its dimension must
equal the channel count; the encoder hidden size is therefore tied to
``channels`` rather than configured separately.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ContractError
from .tensor import LSTMParams, Tensor


@dataclass
class ModelConfig:
    grid_n: int = 4
    grid_m: int = 4
    channels: int = 32
    token_vocab_size: int = 32
    answer_vocab_size: int = 12
    word_embed_dim: int = 64
    att_hidden: int = 64
    answer_embed_dim: int = 32
    decoder_hidden: int = 64
    max_len: int = 20
    question_mode: str = "question"  # "question" | "ones"
    answer_conditioning: bool = True  # False: justification head ignores the answer

    def __post_init__(self):
        for name in ("grid_n", "grid_m", "channels", "token_vocab_size", "answer_vocab_size",
                     "word_embed_dim", "att_hidden", "answer_embed_dim", "decoder_hidden", "max_len"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.question_mode not in ("question", "ones"):
            raise ContractError(f"question_mode must be 'question' or 'ones', got {self.question_mode!r}")
        if self.token_vocab_size < 4:
            raise ContractError("token vocabulary must include the 4 reserved ids")

    @property
    def q_dim(self) -> int:
        """Dimension of the question encoding; tied to the channel count."""
        return self.channels

    @property
    def locations(self) -> int:
        return self.grid_n * self.grid_m

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


class ModelParams:
    """Named parameter tensors with deterministic seeded initialization."""

    def __init__(self, cfg: ModelConfig, tensors: dict[str, Tensor]):
        self.cfg = cfg
        self._tensors = tensors

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def names(self) -> list[str]:
        return sorted(self._tensors)

    def items(self):
        return [(n, self._tensors[n]) for n in self.names()]

    def trainable(self, regime: str = "joint") -> list[tuple[str, Tensor]]:
        if regime == "freeze-answer":
            return [(n, t) for n, t in self.items() if n.startswith("explain/")]
        return self.items()

    def zero_grad(self):
        for _, t in self.items():
            t.zero_grad()

    # recurrent cell views
    @property
    def encoder1(self) -> LSTMParams:
        return LSTMParams(self["answer/enc1_lstm_wx"], self["answer/enc1_lstm_wh"], self["answer/enc1_lstm_b"])

    @property
    def encoder2(self) -> LSTMParams:
        return LSTMParams(self["answer/enc2_lstm_wx"], self["answer/enc2_lstm_wh"], self["answer/enc2_lstm_b"])

    @property
    def decoder(self) -> LSTMParams:
        return LSTMParams(self["explain/dec_lstm_wx"], self["explain/dec_lstm_wh"], self["explain/dec_lstm_b"])

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {n: t.data.copy() for n, t in self.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        missing = set(self._tensors) - set(arrays)
        extra = set(arrays) - set(self._tensors)
        if missing or extra:
            raise ContractError(f"parameter names differ: missing={sorted(missing)}, extra={sorted(extra)}")
        for name, t in self.items():
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ContractError(f"{name}: shape {arr.shape} does not match {t.data.shape}")
            t.data = arr.copy()

    def answer_path_bytes(self) -> bytes:
        """Serialized answer-path weights, for freeze-regime comparisons."""
        return b"".join(t.data.tobytes() for n, t in self.items() if n.startswith("answer/"))


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Fresh parameters: recurrent weights and embeddings uniform in
    [-0.08, 0.08], affine maps fan-in-scaled normal with zero biases."""

    def uniform(*shape):
        return Tensor(rng.uniform(-0.08, 0.08, size=shape), requires_grad=True)

    def affine_w(fan_in, fan_out):
        return Tensor(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)), requires_grad=True)

    def zeros(*shape):
        return Tensor(np.zeros(shape), requires_grad=True)

    c = cfg.channels
    h = cfg.q_dim
    e = cfg.word_embed_dim
    a = cfg.att_hidden
    d = cfg.answer_embed_dim
    dh = cfg.decoder_hidden
    v = cfg.token_vocab_size
    y = cfg.answer_vocab_size

    t: dict[str, Tensor] = {}
    # question path: embeddings, 2-layer recurrent encoder
    t["answer/word_embed"] = uniform(v, e)
    t["answer/enc1_lstm_wx"] = uniform(e, 4 * h)
    t["answer/enc1_lstm_wh"] = uniform(h, 4 * h)
    t["answer/enc1_lstm_b"] = uniform(4 * h)
    t["answer/enc2_lstm_wx"] = uniform(h, 4 * h)
    t["answer/enc2_lstm_wh"] = uniform(h, 4 * h)
    t["answer/enc2_lstm_b"] = uniform(4 * h)
    # pooling, answer attention, answer readout
    t["answer/w1"], t["answer/b1"] = affine_w(c, h), zeros(h)
    t["answer/w2"], t["answer/b2"] = affine_w(h, a), zeros(a)
    t["answer/w3"], t["answer/b3"] = affine_w(a, 1), zeros(1)
    t["answer/w4"], t["answer/b4"] = affine_w(c, y), zeros(y)
    # answer embedding, justification attention, fusion
    t["explain/w5"], t["explain/b5"] = affine_w(y, d), zeros(d)
    t["explain/w6"], t["explain/b6"] = affine_w(d, d), zeros(d)
    t["explain/w7"], t["explain/b7"] = affine_w(h, d), zeros(d)
    t["explain/w8"], t["explain/b8"] = affine_w(d, a), zeros(a)
    t["explain/w9"], t["explain/b9"] = affine_w(a, 1), zeros(1)
    t["explain/w10"], t["explain/b10"] = affine_w(c, d), zeros(d)
    t["explain/w11"], t["explain/b11"] = affine_w(h, d), zeros(d)
    # word decoder
    t["explain/word_embed"] = uniform(v, e)
    t["explain/dec_lstm_wx"] = uniform(d + e, 4 * dh)
    t["explain/dec_lstm_wh"] = uniform(dh, 4 * dh)
    t["explain/dec_lstm_b"] = uniform(4 * dh)
    t["explain/w_pred"], t["explain/b_pred"] = affine_w(dh, v), zeros(v)
    return ModelParams(cfg, t)
