"""Small trainable text encoder producing per-dimension label distributions.

A mean-pooled bag of word embeddings feeds three affine heads, one per VAD
dimension; softmax (single-label) or sigmoid (multi-label) turns each head's
logits into a distribution over sorted label positions.  Stage one trains the
whole stack with the squared-EMD objective; stage two bolts a rectified
regression head onto the concatenated distributions and fine-tunes with mean
squared error against continuous VAD targets, keeping everything but the new
head frozen for the first five epochs.

All gradients are analytic and training is deterministic for a fixed seed:
every random draw flows through one numpy PCG64 generator.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from . import emd
from .labelspace import (
    DIMS,
    AnnotationVector,
    Dim,
    DistributionTriple,
    Kind,
    LabelSpace,
    sort_annotation,
)

logger = logging.getLogger(__name__)

UNK_TOKEN = "<unk>"
PAD_TOKEN = "<pad>"
UNK_INDEX = 0
PAD_INDEX = 1

INIT_SCALE = 0.05
REG_HEAD_FREEZE_EPOCHS = 5
REG_HEAD_BIAS_INIT = 0.5  # keeps the rectifier alive at the start


class TrainingDivergedError(RuntimeError):
    """Raised when a loss or parameter goes NaN/Inf during training."""


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation per token.

    An input with no surviving tokens maps to a single unknown-word token.
    """
    tokens = []
    for raw in text.lower().split():
        token = _strip_edge_punctuation(raw)
        if token:
            tokens.append(token)
    return tokens or [UNK_TOKEN]


def _strip_edge_punctuation(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


class Vocabulary:
    """Dense token -> index map with reserved unknown/padding slots."""

    def __init__(self, tokens: Sequence[str]):
        expected = (UNK_TOKEN, PAD_TOKEN)
        if tuple(tokens[:2]) != expected:
            raise ValueError(f"vocabulary must start with {expected}")
        self.tokens = list(tokens)
        self.index = {token: i for i, token in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Vocabulary":
        counts: dict[str, int] = {}
        for text in texts:
            for token in tokenize(text):
                if token != UNK_TOKEN:
                    counts[token] = counts.get(token, 0) + 1
        ordered = sorted(counts, key=lambda t: (-counts[t], t))
        return cls([UNK_TOKEN, PAD_TOKEN, *ordered])

    @property
    def size(self) -> int:
        return len(self.tokens)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        ids = [self.index.get(token, UNK_INDEX) for token in tokens]
        return np.array(ids or [UNK_INDEX], dtype=np.intp)

    def encode_text(self, text: str) -> np.ndarray:
        return self.encode(tokenize(text))


@dataclass
class EncoderParams:
    """All trainable tensors plus the seed they were drawn from."""

    embeddings: np.ndarray                 # (V, D)
    head_w: dict[Dim, np.ndarray]          # each (C, D)
    head_b: dict[Dim, np.ndarray]          # each (C,)
    reg_w: np.ndarray | None = None        # (3, 3C), stage two only
    reg_b: np.ndarray | None = None        # (3,)
    rng_seed: int = 0

    @property
    def embed_dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def n_classes(self) -> int:
        return self.head_b["v"].shape[0]

    @property
    def has_regression_head(self) -> bool:
        return self.reg_w is not None

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        named = [("embeddings", self.embeddings)]
        for dim in DIMS:
            named.append((f"head_{dim}_w", self.head_w[dim]))
            named.append((f"head_{dim}_b", self.head_b[dim]))
        if self.reg_w is not None:
            named.append(("reg_w", self.reg_w))
            named.append(("reg_b", self.reg_b))
        return named

    def array(self, name: str) -> np.ndarray:
        return dict(self.named_arrays())[name]

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            embeddings=self.embeddings.copy(),
            head_w={d: w.copy() for d, w in self.head_w.items()},
            head_b={d: b.copy() for d, b in self.head_b.items()},
            reg_w=None if self.reg_w is None else self.reg_w.copy(),
            reg_b=None if self.reg_b is None else self.reg_b.copy(),
            rng_seed=self.rng_seed,
        )

    def check_finite(self) -> None:
        for name, arr in self.named_arrays():
            if not np.all(np.isfinite(arr)):
                raise TrainingDivergedError(f"non-finite values in {name}")


def init_params(
    vocab_size: int, embed_dim: int, n_classes: int, seed: int
) -> EncoderParams:
    """Uniform [-0.05, 0.05] weights, zero biases, all from one generator."""
    rng = np.random.default_rng(seed)
    embeddings = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(vocab_size, embed_dim))
    head_w = {
        dim: rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n_classes, embed_dim))
        for dim in DIMS
    }
    head_b = {dim: np.zeros(n_classes) for dim in DIMS}
    return EncoderParams(embeddings, head_w, head_b, rng_seed=seed)


def attach_regression_head(params: EncoderParams, seed: int) -> EncoderParams:
    """Return a copy of params with a freshly initialized regression head."""
    rng = np.random.default_rng(seed)
    out = params.copy()
    out.reg_w = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(3, 3 * params.n_classes))
    out.reg_b = np.full(3, REG_HEAD_BIAS_INIT)
    return out


def forward(
    params: EncoderParams,
    vocab: Vocabulary,
    tokens: Sequence[str],
    space: LabelSpace,
    kind: Kind,
) -> DistributionTriple:
    """Distributions over sorted label positions for one token list."""
    if params.n_classes != space.n_labels:
        raise ValueError("params and label space disagree on class count")
    ids = vocab.encode(tokens)
    hidden = params.embeddings[ids].mean(axis=0)
    dists = {}
    for dim in DIMS:
        logits = params.head_w[dim] @ hidden + params.head_b[dim]
        dists[dim] = _softmax(logits) if kind == "single" else _sigmoid(logits)
    return DistributionTriple(dists["v"], dists["a"], dists["d"], kind)


def forward_text(
    params: EncoderParams,
    vocab: Vocabulary,
    text: str,
    space: LabelSpace,
    kind: Kind,
) -> DistributionTriple:
    return forward(params, vocab, tokenize(text), space, kind)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=-1, keepdims=True)


def _sigmoid(logits: np.ndarray) -> np.ndarray:
    out = np.empty_like(logits)
    pos = logits >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-logits[pos]))
    expl = np.exp(logits[~pos])
    out[~pos] = expl / (1.0 + expl)
    return out


# -- training examples --------------------------------------------------------


@dataclass(frozen=True)
class ClassExample:
    """Token ids plus the (3, C) sorted target distributions."""

    ids: np.ndarray
    targets: np.ndarray


@dataclass(frozen=True)
class VadExample:
    """Token ids plus a 3-vector of continuous targets in [0, 1]."""

    ids: np.ndarray
    target: np.ndarray


def encode_for_training(
    items: Iterable[tuple[str, AnnotationVector]],
    vocab: Vocabulary,
    space: LabelSpace,
) -> list[ClassExample]:
    examples = []
    unlabeled = 0
    for text, ann in items:
        targets = np.stack([sort_annotation(space, ann, dim) for dim in DIMS])
        if targets.sum() == 0:
            unlabeled += 1
        examples.append(ClassExample(vocab.encode_text(text), targets))
    if unlabeled:
        logger.info(
            "%d example(s) carry no labels; interclass term skipped for them",
            unlabeled,
        )
    return examples


def encode_for_regression(
    items: Iterable[tuple[str, np.ndarray]], vocab: Vocabulary
) -> list[VadExample]:
    return [
        VadExample(vocab.encode_text(text), np.asarray(target, dtype=np.float64))
        for text, target in items
    ]


# -- batched forward/backward -------------------------------------------------


def _pool_batch(
    params: EncoderParams, batch: Sequence[ClassExample | VadExample]
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    counts = np.array([len(ex.ids) for ex in batch], dtype=np.float64)
    flat = np.concatenate([ex.ids for ex in batch])
    seg = np.repeat(np.arange(len(batch)), [len(ex.ids) for ex in batch])
    hidden = np.zeros((len(batch), params.embed_dim))
    np.add.at(hidden, seg, params.embeddings[flat])
    hidden /= counts[:, None]
    return hidden, flat, seg, counts


def _heads_forward(
    params: EncoderParams, hidden: np.ndarray, kind: Kind
) -> dict[Dim, np.ndarray]:
    probs = {}
    for dim in DIMS:
        logits = hidden @ params.head_w[dim].T + params.head_b[dim]
        probs[dim] = _softmax(logits) if kind == "single" else _sigmoid(logits)
    return probs


def _activation_backward(
    probs: np.ndarray, d_probs: np.ndarray, kind: Kind
) -> np.ndarray:
    if kind == "single":
        inner = np.sum(d_probs * probs, axis=1, keepdims=True)
        return probs * (d_probs - inner)
    return d_probs * probs * (1.0 - probs)


def class_loss_and_grads(
    params: EncoderParams,
    batch: Sequence[ClassExample],
    space: LabelSpace,
    kind: Kind,
    with_grads: bool = True,
) -> tuple[float, dict[str, np.ndarray] | None]:
    """Mean squared-EMD objective over a batch, with analytic gradients."""
    hidden, flat, seg, counts = _pool_batch(params, batch)
    probs = _heads_forward(params, hidden, kind)
    n = len(batch)
    loss = 0.0
    d_hidden = np.zeros_like(hidden)
    grads: dict[str, np.ndarray] = {}
    for axis, dim in enumerate(DIMS):
        targets = np.stack([ex.targets[axis] for ex in batch])
        if kind == "single":
            values, d_probs = emd.emd_single_rows(targets, probs[dim])
        else:
            values, d_probs = emd.emd_multi_rows(
                targets, probs[dim], space.sorted_values(dim)
            )
        loss += float(values.mean())
        if not with_grads:
            continue
        d_logits = _activation_backward(probs[dim], d_probs / n, kind)
        grads[f"head_{dim}_w"] = d_logits.T @ hidden
        grads[f"head_{dim}_b"] = d_logits.sum(axis=0)
        d_hidden += d_logits @ params.head_w[dim]
    if not with_grads:
        return loss, None
    d_emb = np.zeros_like(params.embeddings)
    np.add.at(d_emb, flat, (d_hidden / counts[:, None])[seg])
    grads["embeddings"] = d_emb
    return loss, grads


def regression_forward(
    params: EncoderParams, hidden: np.ndarray, kind: Kind
) -> tuple[np.ndarray, dict[Dim, np.ndarray], np.ndarray]:
    """Rectified VAD outputs for pooled hidden rows; returns intermediates."""
    if not params.has_regression_head:
        raise ValueError("regression head not attached")
    probs = _heads_forward(params, hidden, kind)
    stacked = np.concatenate([probs[dim] for dim in DIMS], axis=1)
    pre = stacked @ params.reg_w.T + params.reg_b
    return np.maximum(pre, 0.0), probs, pre


def predict_vad_regression(
    params: EncoderParams, vocab: Vocabulary, text: str, kind: Kind
) -> np.ndarray:
    """Stage-two continuous VAD prediction for one text."""
    ids = vocab.encode_text(text)
    hidden = params.embeddings[ids].mean(axis=0, keepdims=True)
    outputs, _, _ = regression_forward(params, hidden, kind)
    return outputs[0]


def regression_loss_and_grads(
    params: EncoderParams,
    batch: Sequence[VadExample],
    kind: Kind,
    head_only: bool = False,
    with_grads: bool = True,
) -> tuple[float, dict[str, np.ndarray] | None]:
    """Mean squared error over the three dimensions, averaged over the batch."""
    hidden, flat, seg, counts = _pool_batch(params, batch)
    outputs, probs, pre = regression_forward(params, hidden, kind)
    targets = np.stack([ex.target for ex in batch])
    residual = outputs - targets
    loss = float(np.mean(residual**2))
    if not with_grads:
        return loss, None
    n = len(batch)
    d_outputs = 2.0 * residual / (3.0 * n)
    d_pre = d_outputs * (pre > 0.0)
    stacked = np.concatenate([probs[dim] for dim in DIMS], axis=1)
    grads: dict[str, np.ndarray] = {
        "reg_w": d_pre.T @ stacked,
        "reg_b": d_pre.sum(axis=0),
    }
    if head_only:
        return loss, grads
    d_stacked = d_pre @ params.reg_w
    d_hidden = np.zeros_like(hidden)
    n_classes = params.n_classes
    for axis, dim in enumerate(DIMS):
        d_probs = d_stacked[:, axis * n_classes : (axis + 1) * n_classes]
        d_logits = _activation_backward(probs[dim], d_probs, kind)
        grads[f"head_{dim}_w"] = d_logits.T @ hidden
        grads[f"head_{dim}_b"] = d_logits.sum(axis=0)
        d_hidden += d_logits @ params.head_w[dim]
    d_emb = np.zeros_like(params.embeddings)
    np.add.at(d_emb, flat, (d_hidden / counts[:, None])[seg])
    grads["embeddings"] = d_emb
    return loss, grads


# -- optimizers ----------------------------------------------------------------


class Sgd:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: EncoderParams, grads: dict[str, np.ndarray]) -> None:
        for name, arr in params.named_arrays():
            if name in grads:
                arr -= self.learning_rate * grads[name]


class Adam:
    """Adaptive-moment gradient method (decay 0.9/0.999, epsilon 1e-8)."""

    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.epsilon = beta1, beta2, epsilon
        self.moment1: dict[str, np.ndarray] = {}
        self.moment2: dict[str, np.ndarray] = {}
        self.steps: dict[str, int] = {}

    def step(self, params: EncoderParams, grads: dict[str, np.ndarray]) -> None:
        for name, arr in params.named_arrays():
            grad = grads.get(name)
            if grad is None:
                continue
            if name not in self.moment1:
                self.moment1[name] = np.zeros_like(arr)
                self.moment2[name] = np.zeros_like(arr)
                self.steps[name] = 0
            self.steps[name] += 1
            t = self.steps[name]
            m = self.moment1[name]
            v = self.moment2[name]
            m += (1.0 - self.beta1) * (grad - m)
            v += (1.0 - self.beta2) * (grad * grad - v)
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            arr -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def _make_optimizer(config: "TrainConfig") -> Sgd | Adam:
    if config.optimizer == "sgd":
        return Sgd(config.learning_rate)
    if config.optimizer == "adam":
        return Adam(config.learning_rate)
    raise ValueError(f"unknown optimizer: {config.optimizer!r}")


# -- training loops ------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5
    optimizer: Literal["adam", "sgd"] = "adam"
    seed: int = 42

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch size, epochs, and patience must be positive")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    valid_loss: float
    metrics: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class TrainResult:
    params: EncoderParams
    trace: list[EpochStats]

    @property
    def best_valid_loss(self) -> float:
        return min(stats.valid_loss for stats in self.trace)


MetricsFn = Callable[[EncoderParams], dict[str, float]]


def train(
    params: EncoderParams,
    train_set: Sequence[ClassExample],
    space: LabelSpace,
    kind: Kind,
    config: TrainConfig,
    valid_set: Sequence[ClassExample] | None = None,
    metrics_fn: MetricsFn | None = None,
) -> TrainResult:
    """Stage one: minimize the mean squared-EMD objective.

    Stops at max_epochs or when the validation loss has not improved for
    `patience` epochs; returns the parameters with the best validation loss
    and a per-epoch loss trace.
    """
    if not train_set:
        raise ValueError("empty dataset")
    monitor = valid_set if valid_set else train_set

    def batch_loss(p: EncoderParams, batch: Sequence[ClassExample], grads: bool):
        return class_loss_and_grads(p, batch, space, kind, with_grads=grads)

    return _training_loop(params, train_set, monitor, config, batch_loss, metrics_fn)


def finetune_vad(
    params: EncoderParams,
    train_set: Sequence[VadExample],
    kind: Kind,
    config: TrainConfig,
    valid_set: Sequence[VadExample] | None = None,
    metrics_fn: MetricsFn | None = None,
) -> TrainResult:
    """Stage two: attach the rectified regression head and minimize MSE.

    Epochs 1..5 update only the new head; everything unfreezes afterwards.
    """
    if not train_set:
        raise ValueError("empty dataset")
    if not params.has_regression_head:
        params = attach_regression_head(params, config.seed)
    monitor = valid_set if valid_set else train_set

    def batch_loss(p: EncoderParams, batch: Sequence[VadExample], grads: bool,
                   epoch: int = 0):
        head_only = epoch <= REG_HEAD_FREEZE_EPOCHS
        return regression_loss_and_grads(
            p, batch, kind, head_only=head_only, with_grads=grads
        )

    return _training_loop(
        params, train_set, monitor, config, batch_loss, metrics_fn,
        epoch_aware=True,
    )


def _training_loop(
    params: EncoderParams,
    train_set: Sequence,
    monitor_set: Sequence,
    config: TrainConfig,
    batch_loss,
    metrics_fn: MetricsFn | None,
    epoch_aware: bool = False,
) -> TrainResult:
    params = params.copy()
    optimizer = _make_optimizer(config)
    rng = np.random.default_rng(config.seed)
    n = len(train_set)
    trace: list[EpochStats] = []
    best_loss = np.inf
    best_params = params.copy()
    since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        seen = 0
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = [train_set[i] for i in order[start : start + config.batch_size]]
            if epoch_aware:
                loss, grads = batch_loss(params, batch, True, epoch=epoch)
            else:
                loss, grads = batch_loss(params, batch, True)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss in epoch {epoch}, batch {start // config.batch_size}"
                )
            optimizer.step(params, grads)
            loss_sum += loss * len(batch)
            seen += len(batch)
        params.check_finite()
        train_loss = loss_sum / seen
        if epoch_aware:
            valid_loss, _ = batch_loss(params, monitor_set, False, epoch=epoch)
        else:
            valid_loss, _ = batch_loss(params, monitor_set, False)
        metrics = metrics_fn(params) if metrics_fn else {}
        trace.append(EpochStats(epoch, train_loss, valid_loss, metrics))
        logger.info(
            "epoch %d: train loss %.6f, valid loss %.6f%s",
            epoch, train_loss, valid_loss,
            "".join(f", {k} {v:.4f}" for k, v in metrics.items()),
        )
        if valid_loss < best_loss:
            best_loss = valid_loss
            best_params = params.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                logger.info("early stop at epoch %d", epoch)
                break
    return TrainResult(best_params, trace)


# -- gradient checking ---------------------------------------------------------


def grad_check(
    params: EncoderParams,
    example: ClassExample,
    space: LabelSpace,
    kind: Kind,
    step: float = 1e-5,
) -> float:
    """Max relative error of backprop vs central differences, all parameters."""

    def loss_at(p: EncoderParams) -> float:
        value, _ = class_loss_and_grads(p, [example], space, kind, with_grads=False)
        return value

    _, grads = class_loss_and_grads(params, [example], space, kind)
    return _max_relative_error(params, grads, loss_at, step)


def _max_relative_error(
    params: EncoderParams,
    grads: dict[str, np.ndarray],
    loss_at: Callable[[EncoderParams], float],
    step: float,
) -> float:
    worst = 0.0
    work = params.copy()
    for name, arr in work.named_arrays():
        analytic = grads.get(name, np.zeros_like(arr))
        flat = arr.reshape(-1)
        flat_grad = analytic.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = loss_at(work)
            flat[i] = original - step
            down = loss_at(work)
            flat[i] = original
            numeric = (up - down) / (2.0 * step)
            worst = max(worst, _relative_error(float(flat_grad[i]), numeric))
    return worst


def _relative_error(analytic: float, numeric: float) -> float:
    diff = abs(analytic - numeric)
    denom = max(abs(analytic), abs(numeric))
    if denom < 1e-8:
        return 0.0 if diff < 1e-8 else diff
    return diff / denom
