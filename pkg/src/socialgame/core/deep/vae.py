# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator
from tqdm import tqdm

from socialgame.core.deep.common import (
    Grads,
    History,
    NesterovMomentum,
    Params,
    batches,
    check_finite_loss,
    clip_by_global_norm,
    elu,
    elu_grad,
    he_normal,
)
from socialgame.core.errors import InvalidArguments
from socialgame.core.features.matrix import ColumnInfo, FeatureMatrix, Scaler
from socialgame.core.utils.numerical import sigmoid

logger = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)

SampleMode = Literal["sample", "mean"]


class VaeConfig(BaseModel, extra="forbid"):
    """Dense variational auto-encoder generating feature rows."""

    hidden: List[int] = Field(default_factory=lambda: [64, 32])
    "Encoder hidden sizes. The decoder mirrors them."
    latent: int = Field(4, ge=1)
    epochs: int = Field(100, ge=1)
    batch_size: int = Field(128, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    clip_norm: Optional[float] = Field(5.0, gt=0)
    bernoulli_columns: Optional[List[str]] = None
    "Columns with a Bernoulli likelihood. Defaults to the dummy-tagged columns."
    sample_mode: SampleMode = "sample"
    "Draw the likelihoods when sampling, or output their means (Bernoulli means thresholded)."
    seed: Optional[int] = None

    @field_validator("hidden")
    @classmethod
    def sizes_are_positive(cls, hidden):
        if len(hidden) != 2 or any(size < 1 for size in hidden):
            raise ValueError("the encoder needs two positive hidden sizes")
        return hidden


@dataclass(frozen=True)
class VaeLoss:
    """Negative ELBO of a batch, averaged over its rows."""

    reconstruction: float
    kl: float

    @property
    def total(self) -> float:
        return self.reconstruction + self.kl

    @property
    def elbo(self) -> float:
        return -self.total


@dataclass(frozen=True)
class VaeGenerator:
    """Trained decoder able to produce new feature rows."""

    params: Params
    columns: Tuple[ColumnInfo, ...]
    bernoulli: np.ndarray
    "Mask of the Bernoulli columns."
    config: VaeConfig
    scaler: Optional[Scaler] = None
    "Maps the Gaussian columns back to their original units."
    history: Optional[History] = None

    @property
    def n_features(self) -> int:
        return len(self.columns)


def kl_divergence(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """Per-row ``KL(N(mu, exp(logvar)) || N(0, I))``."""
    return -0.5 * np.sum(1.0 + logvar - mu**2 - np.exp(logvar), axis=-1)


def init_vae(n_features: int, n_gaussian: int, config: VaeConfig, rng) -> Params:
    params: Params = {}
    encoder = [n_features, *config.hidden]
    for layer, (fan_in, fan_out) in enumerate(zip(encoder[:-1], encoder[1:])):
        params[f"enc_W{layer}"] = he_normal(rng, fan_in, fan_out)
        params[f"enc_b{layer}"] = np.zeros(fan_out)
    params["mu_W"] = he_normal(rng, config.hidden[-1], config.latent) * 0.1
    params["mu_b"] = np.zeros(config.latent)
    params["logvar_W"] = he_normal(rng, config.hidden[-1], config.latent) * 0.1
    params["logvar_b"] = np.zeros(config.latent)
    decoder = [config.latent, *reversed(config.hidden)]
    for layer, (fan_in, fan_out) in enumerate(zip(decoder[:-1], decoder[1:])):
        params[f"dec_W{layer}"] = he_normal(rng, fan_in, fan_out)
        params[f"dec_b{layer}"] = np.zeros(fan_out)
    params["out_W"] = he_normal(rng, decoder[-1], n_features) * 0.1
    params["out_b"] = np.zeros(n_features)
    params["out_logvar"] = np.zeros(n_gaussian)
    return params


def _dense_stack(params: Params, prefix: str, a: np.ndarray) -> Tuple[np.ndarray, List]:
    caches = []
    layer = 0
    while f"{prefix}_W{layer}" in params:
        z = a @ params[f"{prefix}_W{layer}"] + params[f"{prefix}_b{layer}"]
        caches.append((a, z))
        a = elu(z)
        layer += 1
    return a, caches


def _dense_stack_backward(params: Params, prefix: str, caches: List, da: np.ndarray, grads: Grads):
    for layer in reversed(range(len(caches))):
        a_in, z = caches[layer]
        dz = da * elu_grad(z)
        grads[f"{prefix}_W{layer}"] = a_in.T @ dz
        grads[f"{prefix}_b{layer}"] = dz.sum(axis=0)
        da = dz @ params[f"{prefix}_W{layer}"].T
    return da


def decode(params: Params, z: np.ndarray) -> Tuple[np.ndarray, List]:
    """Decoder outputs: Gaussian means and Bernoulli logits, one column per feature."""
    hidden, caches = _dense_stack(params, "dec", z)
    return hidden @ params["out_W"] + params["out_b"], caches + [hidden]


def vae_loss_and_grad(
    params: Params, X: np.ndarray, bernoulli: np.ndarray, eps: np.ndarray
) -> Tuple[VaeLoss, Grads]:
    """Negative ELBO of a batch for fixed reparameterization noise ``eps``, and its gradient.

    The reconstruction term sums the Gaussian negative log-likelihoods (learned per-column
    variance) and the Bernoulli ones of every row. Both terms are averaged over rows.
    """
    n = X.shape[0]
    gaussian = ~bernoulli
    hidden, encoder_caches = _dense_stack(params, "enc", X)
    mu = hidden @ params["mu_W"] + params["mu_b"]
    logvar = hidden @ params["logvar_W"] + params["logvar_b"]
    std = np.exp(0.5 * logvar)
    z = mu + std * eps
    out, decoder_caches = decode(params, z)
    top = decoder_caches.pop()

    out_logvar = params["out_logvar"]
    residual = X[:, gaussian] - out[:, gaussian]
    precision = np.exp(-out_logvar)
    gaussian_nll = 0.5 * (_LOG_2PI + out_logvar + residual**2 * precision)
    logits = out[:, bernoulli]
    bernoulli_nll = np.logaddexp(0.0, logits) - X[:, bernoulli] * logits
    reconstruction = float((gaussian_nll.sum() + bernoulli_nll.sum()) / n)
    kl = float(kl_divergence(mu, logvar).sum() / n)

    grads: Grads = {}
    dout = np.zeros_like(out)
    dout[:, gaussian] = -residual * precision / n
    dout[:, bernoulli] = (sigmoid(logits) - X[:, bernoulli]) / n
    grads["out_logvar"] = np.sum(0.5 * (1.0 - residual**2 * precision), axis=0) / n
    grads["out_W"] = top.T @ dout
    grads["out_b"] = dout.sum(axis=0)
    dz = _dense_stack_backward(params, "dec", decoder_caches, dout @ params["out_W"].T, grads)

    dmu = dz + mu / n
    dlogvar = dz * eps * 0.5 * std + 0.5 * (np.exp(logvar) - 1.0) / n
    grads["mu_W"] = hidden.T @ dmu
    grads["mu_b"] = dmu.sum(axis=0)
    grads["logvar_W"] = hidden.T @ dlogvar
    grads["logvar_b"] = dlogvar.sum(axis=0)
    dhidden = dmu @ params["mu_W"].T + dlogvar @ params["logvar_W"].T
    _dense_stack_backward(params, "enc", encoder_caches, dhidden, grads)
    return VaeLoss(reconstruction=reconstruction, kl=kl), grads


def _bernoulli_mask(X: FeatureMatrix, config: VaeConfig) -> np.ndarray:
    if config.bernoulli_columns is None:
        return X.dummy_mask
    unknown = set(config.bernoulli_columns) - set(X.names)
    if unknown:
        raise InvalidArguments(f"unknown Bernoulli columns {sorted(unknown)}")
    return np.array([name in config.bernoulli_columns for name in X.names], dtype=bool)


def train_vae(
    X: FeatureMatrix,
    config: Optional[VaeConfig] = None,
    rng: Optional[np.random.Generator] = None,
    scaler: Optional[Scaler] = None,
    show_progress: bool = False,
) -> VaeGenerator:
    """Fit the auto-encoder by maximizing the ELBO with reparameterized latent draws.

    ``X`` holds standardized Gaussian columns and 0/1 Bernoulli columns. ``scaler``, when given,
    is kept so that samples come back in the original units.

    Raises:
        NonFiniteLossError: The loss diverged.
    """
    config = config or VaeConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    bernoulli = _bernoulli_mask(X, config)
    values = X.values
    binary = np.all((values[:, bernoulli] == 0) | (values[:, bernoulli] == 1))
    if not binary:
        raise InvalidArguments("Bernoulli columns must only hold 0 and 1")
    if X.n_rows == 0:
        raise InvalidArguments("cannot train on an empty matrix")
    params = init_vae(X.n_cols, int((~bernoulli).sum()), config, rng)
    optimizer = NesterovMomentum(config.momentum)
    history = History()
    for epoch in tqdm(range(1, config.epochs + 1), disable=not show_progress):
        total = 0.0
        for batch_number, rows in enumerate(batches(X.n_rows, config.batch_size, rng)):
            eps = rng.standard_normal((rows.size, config.latent))
            loss, grads = vae_loss_and_grad(params, values[rows], bernoulli, eps)
            check_finite_loss(loss.total, epoch, batch_number)
            clip_by_global_norm(grads, config.clip_norm)
            optimizer.step(params, grads, config.learning_rate)
            total += loss.total * rows.size
        history.append(epoch, total / X.n_rows)
        logger.debug(f"VAE epoch {epoch}: negative ELBO {history.loss[-1]:.5f}")
    for array in params.values():
        array.setflags(write=False)
    return VaeGenerator(
        params=params,
        columns=X.columns,
        bernoulli=bernoulli,
        config=config,
        scaler=scaler,
        history=history,
    )


def vae_sample(
    generator: VaeGenerator,
    n: int,
    rng: np.random.Generator,
    mode: Optional[SampleMode] = None,
) -> FeatureMatrix:
    """Decode ``n`` standard-normal latent draws into feature rows.

    In ``sample`` mode Gaussian columns add their learned noise and Bernoulli columns are
    drawn; in ``mean`` mode Gaussian columns are the decoder means and Bernoulli columns are
    thresholded at 0.5. Bernoulli columns always hold 0 or 1.
    """
    if n < 1:
        raise InvalidArguments(f"n must be >= 1 (got {n})")
    mode = mode or generator.config.sample_mode
    params, bernoulli = generator.params, generator.bernoulli
    z = rng.standard_normal((n, params["mu_b"].size))
    out, _ = decode(params, z)
    rows = out.copy()
    probabilities = sigmoid(out[:, bernoulli])
    gaussian = ~bernoulli
    if mode == "sample":
        noise = rng.standard_normal((n, int(gaussian.sum())))
        rows[:, gaussian] = out[:, gaussian] + np.exp(0.5 * params["out_logvar"]) * noise
        rows[:, bernoulli] = (rng.uniform(size=probabilities.shape) < probabilities).astype(float)
    elif mode == "mean":
        rows[:, bernoulli] = (probabilities >= 0.5).astype(float)
    else:
        raise InvalidArguments(f"unknown sample mode '{mode}'")
    if generator.scaler is not None:
        restored = generator.scaler.inverse_transform(rows)
        rows[:, gaussian] = restored[:, gaussian]
    return FeatureMatrix(values=rows, columns=generator.columns)
