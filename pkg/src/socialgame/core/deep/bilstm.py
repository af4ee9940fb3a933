# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, Field
from scipy.special import softmax
from tqdm import tqdm

from socialgame.core.deep.common import (
    Grads,
    History,
    NesterovMomentum,
    Params,
    batches,
    check_finite_loss,
    clip_by_global_norm,
    dropout_mask,
    elu,
    elu_grad,
    glorot_uniform,
    he_normal,
)
from socialgame.core.deep.mlp import holdout_split, safe_auc
from socialgame.core.errors import (
    ArityMismatchError,
    InvalidArguments,
    SingleClassError,
    TooFewRowsError,
)
from socialgame.core.features.matrix import FeatureMatrix
from socialgame.core.learners.base import TrainedModel, check_binary, register_scorer
from socialgame.core.utils.numerical import sigmoid

logger = logging.getLogger(__name__)

DIRECTIONS = ("fwd", "bwd")


class LstmConfig(BaseModel, extra="forbid"):
    """Stacked bi-directional LSTM over windows of consecutive minutes."""

    window: int = Field(120, ge=2)
    "Minutes per sequence."
    layers: int = Field(3, ge=1)
    width: int = Field(32, ge=1)
    "Hidden units per direction."
    fc_width: int = Field(16, ge=1)
    "Units of the fully connected layer before the soft-max."
    dropout: float = Field(0.6, ge=0, lt=1)
    "Drop probability applied to the output of every recurrent layer during training."
    learning_rate: float = Field(0.01, gt=0)
    decay: float = Field(0.95, gt=0, le=1)
    "Learning rate multiplier applied after every epoch."
    momentum: float = Field(0.9, ge=0, lt=1)
    patience: int = Field(5, ge=1)
    "Epochs without validation AUC improvement before stopping."
    max_epochs: int = Field(35, ge=1)
    batch_size: Optional[int] = Field(None, ge=1)
    "Defaults to twice the window."
    clip_norm: Optional[float] = Field(5.0, gt=0)
    validation_fraction: float = Field(0.2, gt=0, le=0.5)
    seed: Optional[int] = None

    @property
    def effective_batch_size(self) -> int:
        return self.batch_size or 2 * self.window


def make_windows(X, y=None, N: int = 120) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Sliding windows of ``N`` consecutive rows, one per row from the ``N``-th on.

    The window ending at row ``t`` is labelled with ``y[t]``. Windows are read-only views of the
    rows.

    Returns:
        An ``(n_rows - N + 1, N, n_cols)`` array and the aligned labels.

    Raises:
        TooFewRowsError: Fewer than ``N`` rows.
    """
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    if y is None and isinstance(X, FeatureMatrix):
        y = X.target
    if N < 1:
        raise InvalidArguments(f"window length must be >= 1 (got {N})")
    if values.shape[0] < N:
        raise TooFewRowsError(f"{values.shape[0]} rows for windows of {N}")
    windows = sliding_window_view(values, N, axis=0).transpose(0, 2, 1)
    labels = None if y is None else np.asarray(y).reshape(-1)[N - 1 :]
    return windows, labels


def init_bilstm(n_features: int, config: LstmConfig, rng: np.random.Generator) -> Params:
    params: Params = {}
    H = config.width
    fan_in = n_features
    for layer in range(config.layers):
        for direction in DIRECTIONS:
            prefix = f"l{layer}_{direction}"
            params[f"{prefix}_Wx"] = glorot_uniform(rng, fan_in, 4 * H)
            params[f"{prefix}_Wh"] = glorot_uniform(rng, H, 4 * H)
            bias = np.zeros(4 * H)
            bias[H : 2 * H] = 1.0
            params[f"{prefix}_b"] = bias
        fan_in = 2 * H
    params["fc_W"] = he_normal(rng, 2 * H, config.fc_width)
    params["fc_b"] = np.zeros(config.fc_width)
    params["out_W"] = glorot_uniform(rng, config.fc_width, 2)
    params["out_b"] = np.zeros(2)
    return params


def _n_layers(params: Params) -> int:
    return sum(1 for k in params if k.endswith("_fwd_Wx"))


def _lstm_pass(
    xs: np.ndarray, Wx: np.ndarray, Wh: np.ndarray, b: np.ndarray
) -> Tuple[np.ndarray, List[Tuple[np.ndarray, ...]]]:
    """Run one direction over ``xs`` (batch, time, features) from time 0 on."""
    B, T, _ = xs.shape
    H = Wh.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, T, H))
    steps = []
    for t in range(T):
        x_t = xs[:, t]
        gates = x_t @ Wx + h @ Wh + b
        i = sigmoid(gates[:, :H])
        f = sigmoid(gates[:, H : 2 * H])
        o = sigmoid(gates[:, 2 * H : 3 * H])
        g = np.tanh(gates[:, 3 * H :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        steps.append((x_t, h, c, i, f, o, g, tanh_c))
        h, c = h_new, c_new
        hs[:, t] = h
    return hs, steps


def _lstm_pass_backward(
    dhs: np.ndarray, steps, Wx: np.ndarray, Wh: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagation through time of :func:`_lstm_pass`. Returns dxs, dWx, dWh, db."""
    B, T, H = dhs.shape
    dWx, dWh, db = np.zeros_like(Wx), np.zeros_like(Wh), np.zeros(4 * H)
    dxs = np.empty((B, T, Wx.shape[0]))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in reversed(range(T)):
        x_t, h_prev, c_prev, i, f, o, g, tanh_c = steps[t]
        dh = dhs[:, t] + dh_next
        do = dh * tanh_c
        dc = dh * o * (1.0 - tanh_c**2) + dc_next
        dgates = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                do * o * (1.0 - o),
                dc * i * (1.0 - g**2),
            ],
            axis=1,
        )
        dc_next = dc * f
        dWx += x_t.T @ dgates
        dWh += h_prev.T @ dgates
        db += dgates.sum(axis=0)
        dxs[:, t] = dgates @ Wx.T
        dh_next = dgates @ Wh.T
    return dxs, dWx, dWh, db


def bilstm_forward(
    params: Params,
    windows: np.ndarray,
    masks: Optional[Dict[int, np.ndarray]] = None,
) -> Tuple[np.ndarray, Dict]:
    """Pre-soft-max outputs ``(batch, 2)`` for the classes (off, on), plus the backward cache.

    Every layer concatenates the forward and backward hidden states of each minute. The
    representation fed to the fully connected layer is the last forward state joined with the
    first backward state of the top layer. ``masks`` holds inverted dropout masks per layer.
    """
    cache: Dict = {"layers": []}
    inputs = windows
    for layer in range(_n_layers(params)):
        per_direction = {}
        outputs = []
        for direction in DIRECTIONS:
            prefix = f"l{layer}_{direction}"
            xs = inputs if direction == "fwd" else inputs[:, ::-1]
            hs, steps = _lstm_pass(
                xs, params[f"{prefix}_Wx"], params[f"{prefix}_Wh"], params[f"{prefix}_b"]
            )
            per_direction[direction] = steps
            outputs.append(hs if direction == "fwd" else hs[:, ::-1])
        out = np.concatenate(outputs, axis=2)
        mask = None if masks is None else masks.get(layer)
        if mask is not None:
            out = out * mask
        cache["layers"].append({"steps": per_direction, "mask": mask})
        inputs = out
    H = inputs.shape[2] // 2
    representation = np.concatenate([inputs[:, -1, :H], inputs[:, 0, H:]], axis=1)
    fc_pre = representation @ params["fc_W"] + params["fc_b"]
    fc = elu(fc_pre)
    logits = fc @ params["out_W"] + params["out_b"]
    cache.update(
        representation=representation, fc_pre=fc_pre, fc=fc, shape=inputs.shape, H=H
    )
    return logits, cache


def bilstm_backward(params: Params, cache: Dict, dlogits: np.ndarray) -> Grads:
    grads: Grads = {}
    grads["out_W"] = cache["fc"].T @ dlogits
    grads["out_b"] = dlogits.sum(axis=0)
    dfc_pre = (dlogits @ params["out_W"].T) * elu_grad(cache["fc_pre"])
    grads["fc_W"] = cache["representation"].T @ dfc_pre
    grads["fc_b"] = dfc_pre.sum(axis=0)
    drep = dfc_pre @ params["fc_W"].T
    H = cache["H"]
    dout = np.zeros(cache["shape"])
    dout[:, -1, :H] = drep[:, :H]
    dout[:, 0, H:] += drep[:, H:]
    for layer in reversed(range(len(cache["layers"]))):
        layer_cache = cache["layers"][layer]
        if layer_cache["mask"] is not None:
            dout = dout * layer_cache["mask"]
        width = dout.shape[2] // 2
        dinputs = None
        for k, direction in enumerate(DIRECTIONS):
            prefix = f"l{layer}_{direction}"
            dhs = dout[:, :, k * width : (k + 1) * width]
            if direction == "bwd":
                dhs = dhs[:, ::-1]
            dxs, dWx, dWh, db = _lstm_pass_backward(
                np.ascontiguousarray(dhs),
                layer_cache["steps"][direction],
                params[f"{prefix}_Wx"],
                params[f"{prefix}_Wh"],
            )
            grads[f"{prefix}_Wx"], grads[f"{prefix}_Wh"], grads[f"{prefix}_b"] = dWx, dWh, db
            if direction == "bwd":
                dxs = dxs[:, ::-1]
            dinputs = dxs if dinputs is None else dinputs + dxs
        dout = dinputs
    return grads


def class_weights(labels: np.ndarray) -> np.ndarray:
    """Per-row weights making both classes weigh the same in the loss."""
    counts = np.bincount(labels, minlength=2).astype(np.float64)
    return (labels.size / (2.0 * counts))[labels]


def bilstm_loss_and_grad(
    params: Params,
    windows: np.ndarray,
    labels: np.ndarray,
    weights: Optional[np.ndarray] = None,
    masks: Optional[Dict[int, np.ndarray]] = None,
) -> Tuple[float, Grads]:
    """Weighted mean cross-entropy of the soft-max outputs and its gradient."""
    weights = np.ones(labels.size) if weights is None else weights
    logits, cache = bilstm_forward(params, windows, masks)
    log_probabilities = logits - np.logaddexp(logits[:, 0], logits[:, 1])[:, None]
    total_weight = weights.sum()
    picked = log_probabilities[np.arange(labels.size), labels]
    loss = float(-np.sum(weights * picked) / total_weight)
    dlogits = softmax(logits, axis=1)
    dlogits[np.arange(labels.size), labels] -= 1.0
    dlogits *= (weights / total_weight)[:, None]
    return loss, bilstm_backward(params, cache, dlogits)


def swap_directions(params: Params) -> Params:
    """Parameters of the mirrored network, scoring reversed windows like the original.

    Forward and backward weights trade places, and every weight reading a (forward, backward)
    concatenation has its two row blocks exchanged.
    """
    swapped = {
        name: value.copy() if isinstance(value, np.ndarray) else value
        for name, value in params.items()
    }
    n_layers = _n_layers(params)
    for layer in range(n_layers):
        for suffix in ("Wx", "Wh", "b"):
            forward, backward = f"l{layer}_fwd_{suffix}", f"l{layer}_bwd_{suffix}"
            swapped[forward], swapped[backward] = params[backward].copy(), params[forward].copy()
        if layer > 0:
            for direction in DIRECTIONS:
                name = f"l{layer}_{direction}_Wx"
                swapped[name] = _swap_row_blocks(swapped[name])
    swapped["fc_W"] = _swap_row_blocks(params["fc_W"])
    return swapped


def _swap_row_blocks(matrix: np.ndarray) -> np.ndarray:
    half = matrix.shape[0] // 2
    return np.concatenate([matrix[half:], matrix[:half]], axis=0)


def _score_bilstm(params: Params, X: np.ndarray) -> np.ndarray:
    """Probability of "on" for every window. Rows of a 2-D input are windowed first."""
    if X.ndim == 2:
        X, _ = make_windows(X, None, int(params["window"]))
    probabilities = []
    for start in range(0, X.shape[0], 1024):
        logits, _ = bilstm_forward(params, np.ascontiguousarray(X[start : start + 1024]))
        probabilities.append(softmax(logits, axis=1)[:, 1])
    return np.concatenate(probabilities) if probabilities else np.zeros(0)


register_scorer("bilstm", _score_bilstm)


def train_bilstm(
    windows: np.ndarray,
    labels,
    config: Optional[LstmConfig] = None,
    rng: Optional[np.random.Generator] = None,
    feature_names: Optional[List[str]] = None,
    show_progress: bool = False,
) -> TrainedModel:
    """Train the bi-directional LSTM classifier on labelled windows.

    Cross-entropy is class-weighted so both classes count equally. A stratified random share
    of the windows is held out; training stops when its AUC has not improved for
    ``config.patience`` epochs or after ``config.max_epochs``, and the weights of the best
    validation epoch are returned. The learning rate decays geometrically every epoch.

    Raises:
        SingleClassError: A class has no window.
        TooFewRowsError: A class has a single window.
        NonFiniteLossError: The loss diverged.
    """
    config = config or LstmConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3:
        raise InvalidArguments("windows must be a (count, length, features) array")
    labels = check_binary(np.asarray(labels).reshape(-1))
    if labels.size != windows.shape[0]:
        raise ArityMismatchError(f"{labels.size} labels for {windows.shape[0]} windows")
    counts = np.bincount(labels, minlength=2)
    if (counts == 0).any():
        raise SingleClassError("both classes need windows")
    if (counts < 2).any():
        raise TooFewRowsError(f"each class needs at least 2 windows (got {counts.tolist()})")

    train_rows, validation_rows = holdout_split(labels, config.validation_fraction, rng)
    weights = class_weights(labels[train_rows])
    n_features = windows.shape[2]
    params = init_bilstm(n_features, config, rng)
    params_window = windows.shape[1]
    optimizer = NesterovMomentum(config.momentum)
    history = History()
    best_auc, best_params, stale = -math.inf, None, 0
    learning_rate = config.learning_rate
    for epoch in tqdm(range(1, config.max_epochs + 1), disable=not show_progress):
        total = 0.0
        for batch_number, batch in enumerate(
            batches(train_rows.size, config.effective_batch_size, rng)
        ):
            rows = train_rows[batch]
            batch_windows = np.ascontiguousarray(windows[rows])
            masks = {
                layer: dropout_mask(
                    rng, (rows.size, params_window, 2 * config.width), config.dropout
                )
                for layer in range(config.layers)
            }
            loss, grads = bilstm_loss_and_grad(
                params, batch_windows, labels[rows], weights[batch], masks
            )
            check_finite_loss(loss, epoch, batch_number)
            clip_by_global_norm(grads, config.clip_norm)
            optimizer.step(params, grads, learning_rate)
            total += loss * rows.size
        learning_rate *= config.decay
        validation_auc = safe_auc(
            _score_bilstm(params, windows[validation_rows]), labels[validation_rows]
        )
        history.append(epoch, total / train_rows.size, validation_auc)
        logger.debug(f"BiLSTM epoch {epoch}: loss {total / train_rows.size:.5f}")
        if best_params is None or validation_auc > best_auc:
            best_auc = validation_auc if not math.isnan(validation_auc) else best_auc
            best_params = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info(f"Early stopping after epoch {epoch}, best AUC {best_auc:.4f}.")
                break

    for array in best_params.values():
        array.setflags(write=False)
    best_params["window"] = int(params_window)
    return TrainedModel(
        kind="bilstm",
        params=best_params,
        metadata={
            "n_features": int(n_features),
            "feature_names": list(feature_names or [f"x{j}" for j in range(n_features)]),
            "hyperparameters": config.model_dump(),
            "history": history.to_records(),
            "best_validation_auc": best_auc,
        },
    )
