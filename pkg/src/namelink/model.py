"""Two-branch feedforward classifier with hand-rolled backprop and Adam.

One model instance discriminates the authors of a single block.  Input one
(name features) and input two (title/source features) pass through separate
ReLU stacks, are concatenated, run through merged ReLU layers with inverted
dropout on the last hidden layer, and end in a softmax over the block's
author classes.  The loss is class-weighted cross-entropy.

All parameters live in one flat float64 vector; weight matrices and bias
vectors are reshaped views into it.  That makes the Adam update a handful of
vectorized passes, lets checkpoints snapshot a single array bit-exactly, and
reduces the finite-difference gradient check to perturbing flat entries.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoders import FeatureVectorPair
from .records import AuthorId

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    n_classes: int
    input1_dim: int = 400
    input2_dim: int = 768
    branch1_hidden: tuple[int, ...] = (256,)
    branch2_hidden: tuple[int, ...] = (256,)
    merged_hidden: tuple[int, ...] = (256, 128)
    dropout_rate: float = 0.5
    dropout_branches: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "branch1_hidden", tuple(self.branch1_hidden))
        object.__setattr__(self, "branch2_hidden", tuple(self.branch2_hidden))
        object.__setattr__(self, "merged_hidden", tuple(self.merged_hidden))
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if self.input1_dim < 1 or self.input2_dim < 1:
            raise ValueError("input dims must be >= 1")
        for width in (*self.branch1_hidden, *self.branch2_hidden, *self.merged_hidden):
            if width < 1:
                raise ValueError(f"layer width {width} must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(n_in, n_out) per layer: branch one, branch two, merged, output."""
        shapes: list[tuple[int, int]] = []
        d = self.input1_dim
        for width in self.branch1_hidden:
            shapes.append((d, width))
            d = width
        b1_out = d
        d = self.input2_dim
        for width in self.branch2_hidden:
            shapes.append((d, width))
            d = width
        b2_out = d
        d = b1_out + b2_out
        for width in self.merged_hidden:
            shapes.append((d, width))
            d = width
        shapes.append((d, self.n_classes))
        return shapes

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in self.layer_shapes())

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "input1_dim": self.input1_dim,
            "input2_dim": self.input2_dim,
            "branch1_hidden": list(self.branch1_hidden),
            "branch2_hidden": list(self.branch2_hidden),
            "merged_hidden": list(self.merged_hidden),
            "dropout_rate": self.dropout_rate,
            "dropout_branches": self.dropout_branches,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelConfig":
        payload = dict(payload)
        for key in ("branch1_hidden", "branch2_hidden", "merged_hidden"):
            payload[key] = tuple(payload[key])
        return cls(**payload)


def _layer_views(flat: np.ndarray, config: ModelConfig) -> tuple[list[np.ndarray], list[np.ndarray]]:
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    offset = 0
    for n_in, n_out in config.layer_shapes():
        weights.append(flat[offset : offset + n_in * n_out].reshape(n_in, n_out))
        offset += n_in * n_out
        biases.append(flat[offset : offset + n_out])
        offset += n_out
    assert offset == flat.size
    return weights, biases


class ModelParams:
    """All parameters of one block model, as a flat vector plus views."""

    def __init__(self, config: ModelConfig, flat: np.ndarray):
        if flat.shape != (config.n_params,) or flat.dtype != np.float64:
            raise ValueError(f"flat parameter vector must be float64 of length {config.n_params}")
        self.config = config
        self.flat = flat
        self.weights, self.biases = _layer_views(flat, config)

    @property
    def n_params(self) -> int:
        return self.flat.size

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, self.flat.copy())


def init_model(config: ModelConfig) -> ModelParams:
    """Fan-in scaled normal weights (variance 2/n_in, matching ReLU), zero
    biases; fully determined by ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    flat = np.zeros(config.n_params)
    params = ModelParams(config, flat)
    for w in params.weights:
        n_in = w.shape[0]
        w[...] = rng.normal(0.0, np.sqrt(2.0 / n_in), size=w.shape)
    return params


def _split_layers(params: ModelParams):
    cfg = params.config
    n1, n2, nm = len(cfg.branch1_hidden), len(cfg.branch2_hidden), len(cfg.merged_hidden)
    w, b = params.weights, params.biases
    return (
        (w[:n1], b[:n1]),
        (w[n1 : n1 + n2], b[n1 : n1 + n2]),
        (w[n1 + n2 : n1 + n2 + nm], b[n1 + n2 : n1 + n2 + nm]),
        (w[-1], b[-1]),
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def forward_batch(
    params: ModelParams,
    x1: np.ndarray,
    x2: np.ndarray,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict | None]:
    """Run a batch through the network.

    ``x1`` is (B, input1_dim), ``x2`` is (B, input2_dim); returns (B,
    n_classes) class probabilities.  ``mode`` "train" applies inverted
    dropout (needs ``rng``) and returns the activation cache backprop needs;
    "infer" is deterministic and returns no cache.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode {mode!r}")
    cfg = params.config
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    if x1.shape[1] != cfg.input1_dim or x2.shape[1] != cfg.input2_dim or x1.shape[0] != x2.shape[0]:
        raise ValueError(
            f"input shapes {x1.shape}/{x2.shape} do not match config dims "
            f"{cfg.input1_dim}/{cfg.input2_dim}"
        )
    train = mode == "train"
    use_dropout = train and cfg.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ValueError("train-mode forward with dropout needs an rng")

    (w1s, b1s), (w2s, b2s), (wms, bms), (w_out, b_out) = _split_layers(params)

    def run_stack(x, ws, bs):
        acts, zs = [x], []
        for w, b in zip(ws, bs):
            z = acts[-1] @ w + b
            zs.append(z)
            acts.append(np.maximum(z, 0.0))
        return acts, zs

    b1_acts, b1_zs = run_stack(x1, w1s, b1s)
    b2_acts, b2_zs = run_stack(x2, w2s, b2s)

    mask1 = mask2 = None
    h1, h2 = b1_acts[-1], b2_acts[-1]
    # branch dropout is optional and skipped when the concat itself is the
    # last hidden layer (no merged layers), to avoid dropping it twice
    if use_dropout and cfg.dropout_branches and cfg.merged_hidden:
        keep = 1.0 - cfg.dropout_rate
        mask1 = (rng.random(h1.shape) >= cfg.dropout_rate) / keep
        mask2 = (rng.random(h2.shape) >= cfg.dropout_rate) / keep
        h1 = h1 * mask1
        h2 = h2 * mask2

    concat = np.concatenate([h1, h2], axis=1)
    m_acts, m_zs = run_stack(concat, wms, bms)

    last_hidden = m_acts[-1]
    mask_last = None
    if use_dropout:
        keep = 1.0 - cfg.dropout_rate
        mask_last = (rng.random(last_hidden.shape) >= cfg.dropout_rate) / keep
        last_hidden = last_hidden * mask_last

    logits = last_hidden @ w_out + b_out
    probs = _softmax(logits)

    if not train:
        return probs, None
    cache = {
        "x1": x1,
        "x2": x2,
        "b1_acts": b1_acts,
        "b1_zs": b1_zs,
        "b2_acts": b2_acts,
        "b2_zs": b2_zs,
        "concat": concat,
        "m_acts": m_acts,
        "m_zs": m_zs,
        "last_hidden": last_hidden,
        "mask_last": mask_last,
        "mask1": mask1,
        "mask2": mask2,
        "probs": probs,
    }
    return probs, cache


def forward(
    params: ModelParams,
    pair: FeatureVectorPair,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict | None]:
    """Single-sample forward pass; returns a probability vector of length
    n_classes (sums to one) and, in train mode, the activation cache."""
    probs, cache = forward_batch(params, pair.x1[None, :], pair.x2[None, :], mode=mode, rng=rng)
    return probs[0], cache


def loss_and_gradients_batch(
    params: ModelParams,
    x1: np.ndarray,
    x2: np.ndarray,
    labels: np.ndarray,
    sample_weights: np.ndarray,
    mode: str = "train",
    rng: np.random.Generator | None = None,
) -> tuple[float, np.ndarray]:
    """Mean weighted cross-entropy over the batch and its gradient, flat.

    The gradient shares the parameter layout, so ``_layer_views`` applies to
    it unchanged.  The log is floored at 1e-12 to guard the loss value
    against underflow; gradients use the exact softmax/cross-entropy form.
    """
    cfg = params.config
    if mode == "train":
        _, cache = forward_batch(params, x1, x2, mode="train", rng=rng)
    else:
        # infer-mode gradients: same math with dropout disabled
        _, cache = _forward_cache_no_dropout(params, x1, x2)
    labels = np.asarray(labels)
    sample_weights = np.asarray(sample_weights, dtype=np.float64)
    batch = labels.shape[0]
    rows = np.arange(batch)

    p_true = cache["probs"][rows, labels]
    losses = -np.log(np.maximum(p_true, LOG_FLOOR))
    loss = float((losses * sample_weights).sum() / batch) + 0.0

    d_logits = cache["probs"].copy()
    d_logits[rows, labels] -= 1.0
    d_logits *= (sample_weights / batch)[:, None]

    grad_flat = np.zeros(cfg.n_params)
    g_weights, g_biases = _layer_views(grad_flat, cfg)
    n1, n2 = len(cfg.branch1_hidden), len(cfg.branch2_hidden)
    nm = len(cfg.merged_hidden)
    gw1, gw2 = g_weights[:n1], g_weights[n1 : n1 + n2]
    gb1, gb2 = g_biases[:n1], g_biases[n1 : n1 + n2]
    gwm, gbm = g_weights[n1 + n2 : n1 + n2 + nm], g_biases[n1 + n2 : n1 + n2 + nm]
    gw_out, gb_out = g_weights[-1], g_biases[-1]

    (w1s, _), (w2s, _), (wms, _), (w_out, _) = _split_layers(params)

    gw_out[...] = cache["last_hidden"].T @ d_logits
    gb_out[...] = d_logits.sum(axis=0)
    dh = d_logits @ w_out.T
    if cache["mask_last"] is not None:
        dh = dh * cache["mask_last"]

    def back_stack(dh, ws, acts, zs, gws, gbs):
        for i in range(len(ws) - 1, -1, -1):
            dz = dh * (zs[i] > 0.0)
            gws[i][...] = acts[i].T @ dz
            gbs[i][...] = dz.sum(axis=0)
            dh = dz @ ws[i].T
        return dh

    d_concat = back_stack(dh, wms, cache["m_acts"], cache["m_zs"], gwm, gbm)
    split = cache["b1_acts"][-1].shape[1]
    d1, d2 = d_concat[:, :split], d_concat[:, split:]
    if cache["mask1"] is not None:
        d1 = d1 * cache["mask1"]
    if cache["mask2"] is not None:
        d2 = d2 * cache["mask2"]
    back_stack(d1, w1s, cache["b1_acts"], cache["b1_zs"], gw1, gb1)
    back_stack(d2, w2s, cache["b2_acts"], cache["b2_zs"], gw2, gb2)

    return loss, grad_flat


def _forward_cache_no_dropout(params: ModelParams, x1, x2):
    """Train-style cache with dropout disabled, for infer-mode gradients."""
    cfg = params.config
    if cfg.dropout_rate == 0.0:
        return forward_batch(params, x1, x2, mode="train", rng=None)
    plain = ModelConfig(**{**cfg.to_dict(), "dropout_rate": 0.0})
    alias = ModelParams(plain, params.flat)
    return forward_batch(alias, x1, x2, mode="train", rng=None)


def loss_and_gradients(
    params: ModelParams,
    pair: FeatureVectorPair,
    true_class: int,
    class_weight: float = 1.0,
    mode: str = "train",
    rng: np.random.Generator | None = None,
) -> tuple[float, np.ndarray]:
    """Weighted cross-entropy loss of one sample and its flat gradient.

    In train mode the gradient is consistent with the dropout mask drawn in
    the forward pass; in infer mode dropout is off and the result is
    deterministic.
    """
    if not 0 <= true_class < params.config.n_classes:
        raise ValueError(f"true_class {true_class} out of range")
    if class_weight <= 0.0:
        raise ValueError("class_weight must be positive")
    return loss_and_gradients_batch(
        params,
        pair.x1[None, :],
        pair.x2[None, :],
        np.array([true_class]),
        np.array([class_weight]),
        mode=mode,
        rng=rng,
    )


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    t: int
    lr: float
    beta1: float
    beta2: float
    eps: float
    m: np.ndarray
    v: np.ndarray


def init_adam_state(
    params: ModelParams, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
) -> AdamState:
    n = params.n_params
    return AdamState(t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps, m=np.zeros(n), v=np.zeros(n))


def adam_step(params: ModelParams, grad_flat: np.ndarray, state: AdamState) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update, in place on ``params.flat``.

    Fails fast on non-finite gradients rather than poisoning the moments.
    """
    if grad_flat.shape != params.flat.shape:
        raise ValueError("gradient shape does not match parameters")
    if not np.isfinite(grad_flat).all():
        raise FloatingPointError("non-finite gradient")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grad_flat
    state.v *= b2
    buf = grad_flat * grad_flat
    buf *= 1.0 - b2
    state.v += buf
    np.divide(state.v, 1.0 - b2**state.t, out=buf)
    np.sqrt(buf, out=buf)
    buf += state.eps
    step = state.m / (1.0 - b1**state.t)
    step /= buf
    step *= state.lr
    params.flat -= step
    return params, state


def class_weights(counts: Sequence[int]) -> np.ndarray:
    """Per-class loss weights N / (L * n_l), inversely proportional to the
    class's sample count; the weighted counts then average to N / L."""
    counts = np.asarray(counts)
    if counts.size == 0:
        raise ValueError("no classes")
    if (counts < 1).any():
        bad = int(np.argmin(counts))
        raise ValueError(f"class {bad} has no training samples")
    total = counts.sum()
    return total / (counts.size * counts.astype(np.float64))


# --- checkpointing -------------------------------------------------------

CHECKPOINT_FORMAT = "blockmodel/1"


class CheckpointError(Exception):
    pass


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    adam_state: AdamState,
    class_index: Sequence[AuthorId],
    extra: dict | None = None,
) -> None:
    """Persist parameters, optimizer state and the class mapping.

    The container is an npz archive: a JSON metadata blob plus raw float64
    arrays, so reloads are bit-exact.
    """
    if len(class_index) != params.config.n_classes:
        raise CheckpointError(
            f"class index length {len(class_index)} != n_classes {params.config.n_classes}"
        )
    meta = {
        "format": CHECKPOINT_FORMAT,
        "config": params.config.to_dict(),
        "adam": {
            "t": adam_state.t,
            "lr": adam_state.lr,
            "beta1": adam_state.beta1,
            "beta2": adam_state.beta2,
            "eps": adam_state.eps,
        },
        "classes": [[a.base_name, a.homonym_index] for a in class_index],
        "extra": extra or {},
    }
    meta_bytes = np.frombuffer(json.dumps(meta, ensure_ascii=False).encode("utf-8"), dtype=np.uint8)
    np.savez(path, meta=meta_bytes, params=params.flat, adam_m=adam_state.m, adam_v=adam_state.v)


@dataclass
class CheckpointBundle:
    params: ModelParams
    adam_state: AdamState
    class_index: list[AuthorId]
    extra: dict = field(default_factory=dict)


def load_checkpoint(path: str | Path, expected_classes: int | None = None) -> CheckpointBundle:
    """Reload a checkpoint; optionally validate the class count against the
    block it is about to serve."""
    try:
        with np.load(path, allow_pickle=False) as archive:
            meta = json.loads(bytes(archive["meta"]).decode("utf-8"))
            flat = archive["params"].astype(np.float64, copy=True)
            adam_m = archive["adam_m"].astype(np.float64, copy=True)
            adam_v = archive["adam_v"].astype(np.float64, copy=True)
    except (OSError, KeyError, ValueError, zipfile.BadZipFile, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unsupported checkpoint format {meta.get('format')!r}")
    config = ModelConfig.from_dict(meta["config"])
    if expected_classes is not None and config.n_classes != expected_classes:
        raise CheckpointError(
            f"checkpoint has {config.n_classes} classes, expected {expected_classes}"
        )
    params = ModelParams(config, flat)
    a = meta["adam"]
    adam_state = AdamState(t=a["t"], lr=a["lr"], beta1=a["beta1"], beta2=a["beta2"], eps=a["eps"], m=adam_m, v=adam_v)
    classes = [AuthorId(base, idx) for base, idx in meta["classes"]]
    return CheckpointBundle(params=params, adam_state=adam_state, class_index=classes, extra=meta.get("extra", {}))
