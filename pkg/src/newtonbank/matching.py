"""Descriptor matching between queries and the scenario bank.

A query raw-feature vector is encoded to a D-dimensional descriptor by an
affine encoder. The motion side scores the descriptor against each catalog
entry's D x 10 state-descriptor matrix with smoothed cosine similarity,
takes the max over states as the entry confidence, and a softmax turns the
66 confidences into probabilities. The image side is a linear classifier
head over the descriptor, also softmaxed. The two probability vectors are
fused by a convex weight, and the winning entry's best state is chosen by
the same cosine argmax.

Training minimizes a per-component negative log-likelihood with exact
analytic gradients; the max over states is handled by a subgradient at the
winning state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import CatalogEntry
from .errors import BankError, LabelError, ParameterError, TrainingError

COSINE_EPSILON = 1e-5
PROB_CLAMP = 1e-12

DEFAULT_DESCRIPTOR_DIM = 64


def cosine_sim(x: np.ndarray, y: np.ndarray) -> float:
    """Smoothed cosine similarity x.y / (|x||y| + eps); 0 for a zero vector."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    denom = np.linalg.norm(x) * np.linalg.norm(y) + COSINE_EPSILON
    return float(np.dot(x, y) / denom)


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - np.max(z)
    e = np.exp(shifted)
    return e / e.sum()


@dataclass(frozen=True)
class StateDescriptorMatrix:
    entry_id: int
    values: np.ndarray  # (D, S) with state s in column s-1


@dataclass
class ScenarioBank:
    catalog: list[CatalogEntry]
    matrices: list[StateDescriptorMatrix]
    descriptor_dim: int
    _stacked: np.ndarray | None = field(default=None, repr=False)
    _norms: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.catalog) != len(self.matrices):
            raise BankError(
                f"{len(self.catalog)} catalog entries but {len(self.matrices)} matrices"
            )
        for m in self.matrices:
            if m.values.shape[0] != self.descriptor_dim:
                raise BankError(
                    f"entry {m.entry_id} has descriptor dim {m.values.shape[0]}, "
                    f"bank expects {self.descriptor_dim}"
                )

    def __len__(self) -> int:
        return len(self.matrices)

    @property
    def stacked(self) -> np.ndarray:
        """All matrices as one (entries, D, S) array."""
        if self._stacked is None:
            self._stacked = np.stack([m.values for m in self.matrices])
        return self._stacked

    @property
    def column_norms(self) -> np.ndarray:
        if self._norms is None:
            self._norms = np.linalg.norm(self.stacked, axis=1)
        return self._norms


@dataclass(frozen=True)
class EncoderParams:
    weight: np.ndarray  # (D, R)
    bias: np.ndarray  # (D,)
    classifier_weight: np.ndarray  # (entries, D)
    classifier_bias: np.ndarray  # (entries,)

    def __post_init__(self):
        d, _ = self.weight.shape
        if self.bias.shape != (d,):
            raise ParameterError("bias length does not match encoder weight rows")
        if self.classifier_weight.shape[1] != d:
            raise ParameterError("classifier width does not match descriptor dim")
        if self.classifier_bias.shape != (self.classifier_weight.shape[0],):
            raise ParameterError("classifier bias length does not match its weight rows")

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            self.weight.copy(), self.bias.copy(),
            self.classifier_weight.copy(), self.classifier_bias.copy(),
        )


@dataclass(frozen=True)
class FusionConfig:
    lam: float = 0.5  # weight on the image row; 1.0 ignores the motion row

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ParameterError(f"fusion weight must be in [0, 1], got {self.lam}")


@dataclass(frozen=True)
class MatchResult:
    entry_id: int  # h, 1-based
    state: int  # s_h, 1-based
    confidences: np.ndarray  # fused 66-vector, sums to 1
    per_state_sims: np.ndarray  # cosine similarities of the winning entry


def identity_params(descriptor_dim: int, raw_dim: int, n_entries: int = 66) -> EncoderParams:
    """Pass-through encoder: raw features zero-padded to D, zero classifier."""
    weight = np.zeros((descriptor_dim, raw_dim))
    block = min(descriptor_dim, raw_dim)
    weight[np.arange(block), np.arange(block)] = 1.0
    return EncoderParams(
        weight, np.zeros(descriptor_dim),
        np.zeros((n_entries, descriptor_dim)), np.zeros(n_entries),
    )


def init_params(descriptor_dim: int, raw_dim: int, rng: np.random.Generator,
                n_entries: int = 66) -> EncoderParams:
    """Gaussian init with sigma = 10 / fan-in per layer, zero biases."""
    return EncoderParams(
        rng.normal(0.0, 10.0 / raw_dim, (descriptor_dim, raw_dim)),
        np.zeros(descriptor_dim),
        rng.normal(0.0, 10.0 / descriptor_dim, (n_entries, descriptor_dim)),
        np.zeros(n_entries),
    )


def encode(x_raw: np.ndarray, params: EncoderParams) -> np.ndarray:
    x_raw = np.asarray(x_raw, dtype=float)
    if x_raw.shape != (params.weight.shape[1],):
        raise ParameterError(
            f"raw feature length {x_raw.shape} does not match encoder input {params.weight.shape[1]}"
        )
    return params.weight @ x_raw + params.bias


def _check_dim(x: np.ndarray, bank: ScenarioBank) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (bank.descriptor_dim,):
        raise BankError(f"descriptor length {x.shape} does not match bank dim {bank.descriptor_dim}")
    return x


def state_similarities(x: np.ndarray, bank: ScenarioBank) -> np.ndarray:
    """Smoothed cosine of the query against every bank column, (entries, S)."""
    x = _check_dim(x, bank)
    dots = np.einsum("d,eds->es", x, bank.stacked)
    return dots / (np.linalg.norm(x) * bank.column_norms + COSINE_EPSILON)


def score_entry(x: np.ndarray, matrix: StateDescriptorMatrix) -> tuple[np.ndarray, float]:
    """Per-state cosine similarities and their max (the entry confidence)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (matrix.values.shape[0],):
        raise BankError(
            f"descriptor length {x.shape} does not match matrix dim {matrix.values.shape[0]}"
        )
    dots = x @ matrix.values
    norms = np.linalg.norm(x) * np.linalg.norm(matrix.values, axis=0) + COSINE_EPSILON
    per_state = dots / norms
    return per_state, float(per_state.max())


def motion_scores(x: np.ndarray, bank: ScenarioBank) -> np.ndarray:
    """Softmax over the per-entry max-similarity confidences."""
    if len(bank) == 0:
        raise BankError("bank is empty")
    return softmax(state_similarities(x, bank).max(axis=1))


def image_scores(x: np.ndarray, params: EncoderParams) -> np.ndarray:
    """Softmax of the linear classifier head over the descriptor."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.classifier_weight.shape[1],):
        raise ParameterError(
            f"descriptor length {x.shape} does not match classifier width "
            f"{params.classifier_weight.shape[1]}"
        )
    return softmax(params.classifier_weight @ x + params.classifier_bias)


def fuse(img: np.ndarray, mot: np.ndarray, cfg: FusionConfig) -> np.ndarray:
    """Convex combination lam * img + (1 - lam) * mot."""
    img = np.asarray(img, dtype=float)
    mot = np.asarray(mot, dtype=float)
    if img.shape != mot.shape:
        raise ParameterError(f"score shapes differ: {img.shape} vs {mot.shape}")
    return cfg.lam * img + (1.0 - cfg.lam) * mot


def predict(x: np.ndarray, bank: ScenarioBank, params: EncoderParams,
            cfg: FusionConfig) -> MatchResult:
    """Pick the entry with the max fused score and its best-matching state.

    Ties break to the smallest index on both the entry and the state argmax.
    """
    if len(bank) == 0:
        raise BankError("bank is empty")
    sims = state_similarities(x, bank)
    fused = fuse(image_scores(x, params), softmax(sims.max(axis=1)), cfg)
    h = int(np.argmax(fused))
    per_state = sims[h]
    return MatchResult(h + 1, int(np.argmax(per_state)) + 1, fused, per_state)


def one_hot(label: int, n: int) -> np.ndarray:
    """Ground-truth vector for a 1-based entry id."""
    if not 1 <= label <= n:
        raise LabelError(f"label {label} outside 1..{n}")
    p = np.zeros(n)
    p[label - 1] = 1.0
    return p


def nll_loss(p: np.ndarray, p_hat: np.ndarray) -> float:
    """Mean per-component negative log-likelihood against a one-hot target."""
    p = np.asarray(p, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    if p.shape != p_hat.shape:
        raise ParameterError(f"target shape {p.shape} does not match prediction {p_hat.shape}")
    if not (np.isin(p, (0.0, 1.0)).all() and p.sum() == 1.0):
        raise LabelError("ground truth must be one-hot")
    q = np.clip(p_hat, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(p * np.log(q) + (1.0 - p) * np.log(1.0 - q)))


@dataclass(frozen=True)
class Gradients:
    weight: np.ndarray
    bias: np.ndarray
    classifier_weight: np.ndarray
    classifier_bias: np.ndarray


def _softmax_backward(probs: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return probs * (grad_out - np.dot(grad_out, probs))


def loss_gradients(x_raw: np.ndarray, label: int, bank: ScenarioBank,
                   params: EncoderParams, cfg: FusionConfig) -> tuple[float, Gradients]:
    """Loss and its exact gradients w.r.t. all encoder parameters.

    The max over states is differentiated through the single winning state
    per entry (ties to the smallest index). Bank columns are fixed inputs,
    so no gradient flows into the bank.
    """
    n = len(bank)
    x = encode(x_raw, params)

    logits = params.classifier_weight @ x + params.classifier_bias
    p_img = softmax(logits)
    sims = state_similarities(x, bank)
    winners = np.argmax(sims, axis=1)
    conf = sims[np.arange(n), winners]
    p_mot = softmax(conf)
    p_hat = fuse(p_img, p_mot, cfg)

    target = one_hot(label, n)
    q = np.clip(p_hat, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = float(-np.mean(target * np.log(q) + (1.0 - target) * np.log(1.0 - q)))

    unclamped = (p_hat > PROB_CLAMP) & (p_hat < 1.0 - PROB_CLAMP)
    g_phat = np.where(unclamped, -(target / q - (1.0 - target) / (1.0 - q)) / n, 0.0)

    g_logits = _softmax_backward(p_img, cfg.lam * g_phat)
    g_conf = _softmax_backward(p_mot, (1.0 - cfg.lam) * g_phat)

    # d cos(x, v) / dx = v / den - (x.v) |v| x / (|x| den^2), den = |x||v| + eps
    win_cols = bank.stacked[np.arange(n), :, winners]  # (entries, D)
    col_norms = bank.column_norms[np.arange(n), winners]
    x_norm = np.linalg.norm(x)
    dens = x_norm * col_norms + COSINE_EPSILON
    dots = win_cols @ x
    # subgradient v / eps at x = 0, where |x| is not differentiable
    safe_norm = x_norm if x_norm > 0 else 1.0
    dcos_dx = win_cols / dens[:, None] - np.outer(dots * col_norms / (safe_norm * dens**2), x)
    g_x = params.classifier_weight.T @ g_logits + dcos_dx.T @ g_conf

    grads = Gradients(
        weight=np.outer(g_x, np.asarray(x_raw, dtype=float)),
        bias=g_x,
        classifier_weight=np.outer(g_logits, x),
        classifier_bias=g_logits,
    )
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    iters: int = 5000
    lr_start: float = 1e-1
    lr_end: float = 1e-4
    batch_size: int = 32
    fusion: FusionConfig = field(default_factory=FusionConfig)
    seed: int = 0


@dataclass
class TrainResult:
    params: EncoderParams
    losses: list[float]


def learning_rate(cfg: TrainConfig, iteration: int) -> float:
    """Geometric decay from lr_start to lr_end across the run."""
    if cfg.iters <= 1:
        return cfg.lr_start
    frac = iteration / (cfg.iters - 1)
    return cfg.lr_start * (cfg.lr_end / cfg.lr_start) ** frac


def train_encoder(dataset: list[tuple[np.ndarray, int]], bank: ScenarioBank,
                  config: TrainConfig, params: EncoderParams | None = None) -> TrainResult:
    """SGD over random query batches against the full fixed bank.

    Every iteration scores one random batch against all catalog entries,
    so the loss penalizes the error over every entry each step.
    """
    if not dataset:
        raise TrainingError("training dataset is empty")
    for _, label in dataset:
        one_hot(label, len(bank))
    rng = np.random.default_rng(config.seed)
    if params is None:
        # Start from the encoder the bank was built with (identity) and a
        # neutral classifier head. A cold Gaussian encoder cannot reach the
        # identity-encoded bank within a short decaying-lr run.
        raw_dim = len(dataset[0][0])
        params = identity_params(bank.descriptor_dim, raw_dim, n_entries=len(bank))

    weight = params.weight.copy()
    bias = params.bias.copy()
    cls_weight = params.classifier_weight.copy()
    cls_bias = params.classifier_bias.copy()
    losses: list[float] = []

    for it in range(config.iters):
        current = EncoderParams(weight, bias, cls_weight, cls_bias)
        picks = rng.integers(0, len(dataset), size=config.batch_size)
        batch_loss = 0.0
        g_w = np.zeros_like(weight)
        g_b = np.zeros_like(bias)
        g_cw = np.zeros_like(cls_weight)
        g_cb = np.zeros_like(cls_bias)
        for idx in picks:
            x_raw, label = dataset[idx]
            loss, grads = loss_gradients(x_raw, label, bank, current, config.fusion)
            batch_loss += loss
            g_w += grads.weight
            g_b += grads.bias
            g_cw += grads.classifier_weight
            g_cb += grads.classifier_bias
        scale = learning_rate(config, it) / config.batch_size
        weight = weight - scale * g_w
        bias = bias - scale * g_b
        cls_weight = cls_weight - scale * g_cw
        cls_bias = cls_bias - scale * g_cb
        losses.append(batch_loss / config.batch_size)

    return TrainResult(EncoderParams(weight, bias, cls_weight, cls_bias), losses)
