"""Losses, the optimizer, and the training loop with its three regimes.

Regimes:
  joint          answer and justification losses, every parameter updates
  finetune       same as joint; meant to continue from a checkpoint
  freeze-answer  justification loss only; ``answer/*`` parameters are not
                 registered with the optimizer, so their bytes never change

Runs are deterministic given the seed: batches are shuffled and dropout
masks drawn from generators derived from it, and per-batch gradients are
accumulated in fixed example order.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .answer import (
    AnswerDistribution,
    RunMode,
    compute_answer_attention,
    encode_question,
    pool_multimodal,
    predict_answer,
)
from .attention import AttentionMap
from .data.records import Dataset, ExampleRecord
from .data.synthetic import SyntheticDataset
from .data.vocab import EOS_ID, PAD_ID, AnswerVocabulary, Vocabulary, tokenize
from .data.attention_gt import load_attention_gt
from .errors import ContractError, InputError, NumericalError, ParameterError
from .explain import answer_embedding, compute_explanation_attention, fuse_features, teacher_forced_probs
from .features import load_features
from .params import ModelConfig, ModelParams
from .tensor import Tensor, backward, clamp_min, index, log, no_grad

LOG_FLOOR = 1e-12

REGIMES = ("freeze-answer", "finetune", "joint")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 10
    seed: int = 0
    regime: str = "joint"
    dropout: float = 0.1
    grad_clip: float = 5.0
    answer_weight: float = 1.0
    explanation_weight: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if self.regime not in REGIMES:
            raise ParameterError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ParameterError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.grad_clip <= 0:
            raise ParameterError(f"grad_clip must be > 0, got {self.grad_clip}")


@dataclass
class EpochStats:
    answer_loss: float
    explanation_loss: float
    val_accuracy: float
    val_explanation_loss: float
    wall_time_s: float


@dataclass
class TrainReport:
    config: dict
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = -1

    def to_json_obj(self) -> dict:
        return {
            "config": self.config,
            "best_epoch": self.best_epoch,
            "epochs": [asdict(e) for e in self.epochs],
        }


# ---------------------------------------------------------------------------
# losses


def answer_loss(pred: AnswerDistribution, gold: int) -> Tensor:
    """Negative log-probability of the gold label, floored at log(1e-12)."""
    n = pred.tensor.shape[1]
    if not 0 <= gold < n:
        raise InputError(f"gold answer index {gold} outside vocabulary of size {n}")
    return -log(clamp_min(index(pred.tensor, (0, gold)), LOG_FLOOR))


def explanation_loss(step_probs: list[Tensor], gold_ids: list[int]) -> Tensor:
    """Teacher-forced sum of per-word negative log-probabilities.

    ``gold_ids`` must end with EOS; PAD positions contribute nothing.
    """
    if len(step_probs) != len(gold_ids):
        raise ContractError(f"{len(step_probs)} prediction steps vs {len(gold_ids)} gold tokens")
    live = [g for g in gold_ids if g != PAD_ID]
    if not live or live[-1] != EOS_ID:
        raise ContractError("gold token sequence must end with EOS")
    total = None
    for probs, gold in zip(step_probs, gold_ids):
        if gold == PAD_ID:
            continue
        term = -log(clamp_min(index(probs, (0, gold)), LOG_FLOOR))
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# optimizer


class Adam:
    """Per-parameter moment estimation (0.9 / 0.999, eps 1e-8) with global
    gradient-norm clipping applied before the update."""

    def __init__(self, named_params, lr: float, clip: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.named_params = list(named_params)
        self.lr = lr
        self.clip = clip
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {n: np.zeros_like(t.data) for n, t in self.named_params}
        self.v = {n: np.zeros_like(t.data) for n, t in self.named_params}

    def grad_norm(self) -> float:
        total = 0.0
        for _, t in self.named_params:
            if t.grad is not None:
                total += float(np.sum(t.grad * t.grad))
        return float(np.sqrt(total))

    def step(self):
        norm = self.grad_norm()
        scale = self.clip / norm if norm > self.clip else 1.0
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for name, t in self.named_params:
            g = (t.grad if t.grad is not None else 0.0) * scale
            m = self.m[name] = self.b1 * self.m[name] + (1 - self.b1) * g
            v = self.v[name] = self.b2 * self.v[name] + (1 - self.b2) * g * g
            t.data = t.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# ---------------------------------------------------------------------------
# example encoding


@dataclass
class EncodedExample:
    id: str
    feat_rows: np.ndarray  # (L, C)
    question_ids: list[int]
    answer_index: int
    gold_explanation: list[int]  # token ids ending with EOS
    gt_map: AttentionMap | None = None


def encode_example(
    rec: ExampleRecord,
    feat_rows: np.ndarray,
    vocab: Vocabulary,
    answers: AnswerVocabulary,
    gt_map: AttentionMap | None,
) -> EncodedExample:
    gold = vocab.encode(tokenize(rec.explanations[0])) + [EOS_ID] if rec.explanations else [EOS_ID]
    return EncodedExample(
        id=rec.id,
        feat_rows=feat_rows,
        question_ids=vocab.encode(rec.question),
        answer_index=answers.index_of(rec.answer),
        gold_explanation=gold,
        gt_map=gt_map,
    )


def encode_synthetic(ds: SyntheticDataset, vocab: Vocabulary, answers: AnswerVocabulary) -> dict[str, list[EncodedExample]]:
    out = {}
    for split, exs in ds.examples.items():
        out[split] = [
            encode_example(e.record, e.features.as_rows(), vocab, answers, AttentionMap(e.mask / e.mask.sum()))
            for e in exs
        ]
    return out


def encode_dataset(ds: Dataset, cfg: ModelConfig, vocab: Vocabulary, answers: AnswerVocabulary) -> dict[str, list[EncodedExample]]:
    """Load features (and masks when present) from disk for every record."""
    out = {}
    for split, records in ds.splits.items():
        encoded = []
        for rec in records:
            feats = load_features(ds.resolve(rec.features_path))
            gt = None
            if rec.att_gt_path:
                gt = load_attention_gt(ds.resolve(rec.att_gt_path), cfg.grid_n, cfg.grid_m)
            encoded.append(encode_example(rec, feats.as_rows(), vocab, answers, gt))
        out[split] = encoded
    return out


# ---------------------------------------------------------------------------
# forward + steps


def example_losses(ex: EncodedExample, params: ModelParams, cfg: ModelConfig, mode: RunMode):
    """Both losses for one example; the answer embedding is teacher-forced
    to the gold label so the justification path trains on the true decision."""
    feats = Tensor(ex.feat_rows)
    q = encode_question(ex.question_ids, params, cfg)
    pooled = pool_multimodal(feats, q, params, mode)
    att_a = compute_answer_attention(pooled, params, cfg)
    dist = predict_answer(feats, q, att_a, params)
    a_loss = answer_loss(dist, ex.answer_index)
    emb = answer_embedding(ex.answer_index, params, cfg)
    att_x = compute_explanation_attention(pooled, emb, params, cfg, mode)
    fused = fuse_features(feats, att_x, q, emb, params)
    probs = teacher_forced_probs(fused, ex.gold_explanation, params, cfg)
    x_loss = explanation_loss(probs, ex.gold_explanation)
    return a_loss, x_loss, dist


def train_step(
    batch: list[EncodedExample],
    params: ModelParams,
    cfg: ModelConfig,
    tc: TrainConfig,
    opt: Adam,
    dropout_rng: np.random.Generator,
) -> dict[str, float]:
    """One optimizer update on the mean batch loss; aborts on NaN/inf."""
    if not batch:
        raise InputError("empty batch")
    params.zero_grad()
    mode = RunMode(training=True, dropout=tc.dropout, rng=dropout_rng)
    total = None
    a_sum = x_sum = 0.0
    for ex in batch:
        a_loss, x_loss, _ = example_losses(ex, params, cfg, mode)
        if tc.regime == "freeze-answer":
            loss = tc.explanation_weight * x_loss
        else:
            loss = tc.answer_weight * a_loss + tc.explanation_weight * x_loss
        total = loss if total is None else total + loss
        a_sum += a_loss.item()
        x_sum += x_loss.item()
    mean = total * (1.0 / len(batch))
    value = mean.item()
    if not np.isfinite(value):
        raise NumericalError(
            f"non-finite training loss {value} (answer={a_sum / len(batch)}, "
            f"explanation={x_sum / len(batch)}); aborting"
        )
    backward(mean)
    opt.step()
    return {"loss": value, "answer_loss": a_sum / len(batch), "explanation_loss": x_sum / len(batch)}


def evaluate_accuracy(examples: list[EncodedExample], params: ModelParams, cfg: ModelConfig) -> float:
    """Top-1 answer accuracy in eval mode, as a percentage."""
    if not examples:
        raise InputError("empty evaluation split")
    correct = 0
    with no_grad():
        for ex in examples:
            feats = Tensor(ex.feat_rows)
            q = encode_question(ex.question_ids, params, cfg)
            pooled = pool_multimodal(feats, q, params)
            att = compute_answer_attention(pooled, params, cfg)
            dist = predict_answer(feats, q, att, params)
            correct += dist.top_index == ex.answer_index
    return 100.0 * correct / len(examples)


def evaluate_explanation_loss(examples: list[EncodedExample], params: ModelParams, cfg: ModelConfig) -> float:
    if not examples:
        raise InputError("empty evaluation split")
    total = 0.0
    with no_grad():
        for ex in examples:
            _, x_loss, _ = example_losses(ex, params, cfg, RunMode())
            total += x_loss.item()
    return total / len(examples)


def fit(
    encoded: dict[str, list[EncodedExample]],
    params: ModelParams,
    cfg: ModelConfig,
    tc: TrainConfig,
    log=None,
) -> TrainReport:
    """Train on the train split, select the best epoch on the val split, and
    leave the best parameters loaded.

    Selection is highest validation accuracy (earliest epoch on ties); the
    freeze-answer regime selects lowest validation justification loss
    instead, since its accuracy cannot move.
    """
    for split in ("train", "val"):
        if not encoded.get(split):
            raise InputError(f"fit needs a non-empty {split!r} split")
    train, val = encoded["train"], encoded["val"]
    ss = np.random.SeedSequence(tc.seed)
    shuffle_rng, dropout_rng = (np.random.default_rng(c) for c in ss.spawn(2))
    opt = Adam(params.trainable(tc.regime), lr=tc.learning_rate, clip=tc.grad_clip)
    report = TrainReport(config={"model": cfg.to_dict(), "train": asdict(tc)})
    best_key = None
    best_arrays = params.to_arrays()
    for epoch in range(tc.epochs):
        start = time.perf_counter()
        order = shuffle_rng.permutation(len(train))
        a_sum = x_sum = 0.0
        n_batches = 0
        for lo in range(0, len(order), tc.batch_size):
            batch = [train[i] for i in order[lo : lo + tc.batch_size]]
            stats = train_step(batch, params, cfg, tc, opt, dropout_rng)
            a_sum += stats["answer_loss"]
            x_sum += stats["explanation_loss"]
            n_batches += 1
        val_acc = evaluate_accuracy(val, params, cfg)
        val_xloss = evaluate_explanation_loss(val, params, cfg)
        report.epochs.append(
            EpochStats(
                answer_loss=a_sum / n_batches,
                explanation_loss=x_sum / n_batches,
                val_accuracy=val_acc,
                val_explanation_loss=val_xloss,
                wall_time_s=time.perf_counter() - start,
            )
        )
        # maximize the key; strict > keeps the earliest epoch on ties
        key = -val_xloss if tc.regime == "freeze-answer" else val_acc
        if best_key is None or key > best_key:
            best_key = key
            best_arrays = params.to_arrays()
            report.best_epoch = epoch
        if log:
            log(
                f"epoch {epoch + 1}/{tc.epochs}: answer_loss={a_sum / n_batches:.4f} "
                f"explanation_loss={x_sum / n_batches:.4f} val_accuracy={val_acc:.1f}%"
            )
    params.load_arrays(best_arrays)
    return report
