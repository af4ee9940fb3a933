# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from socialgame.core.errors import NonConvergenceWarning, SingularCovarianceError
from socialgame.core.learners.base import LearnerConfig, Params, member_mean, register_learner
from socialgame.core.utils.numerical import sigmoid, soft_threshold

logger = logging.getLogger(__name__)

_ARMIJO = 1e-4
_MIN_STEP = 1e-16
_MAX_RESAMPLES = 100


@dataclass(frozen=True)
class LogisticFit:
    coef: np.ndarray
    intercept: float
    converged: bool
    n_iter: int
    gradient_norm: float
    "Infinity-norm of the (proximal) gradient at the returned weights."
    loss_history: np.ndarray
    "Objective after every accepted step, starting from the all-zero weights."


def _smooth_loss(theta: np.ndarray, Xb: np.ndarray, y: np.ndarray, l2: float) -> float:
    z = Xb @ theta
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * theta[1:] @ theta[1:])


def _smooth_gradient(theta: np.ndarray, Xb: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    gradient = Xb.T @ (sigmoid(Xb @ theta) - y) / y.size
    gradient[1:] += l2 * theta[1:]
    return gradient


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    l1_penalty: float = 0.0,
    l2_penalty: float = 0.0,
    max_iter: int = 10_000,
    tolerance: float = 1e-6,
    step_size: float = 1.0,
    warn: bool = True,
) -> LogisticFit:
    """Minimize the mean cross-entropy of a logistic regression with an unpenalized intercept.

    Without ``l1_penalty`` this is full-batch gradient descent with an Armijo backtracking line
    search. With it, the step becomes proximal: the weights are soft-thresholded after every
    gradient step and the line search uses the quadratic upper bound of the smooth part. Both
    variants decrease the objective at every accepted step.

    Non-convergence within ``max_iter`` emits a :class:`NonConvergenceWarning` and the result
    has ``converged=False``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    Xb = np.column_stack([np.ones(X.shape[0]), X])
    theta = np.zeros(Xb.shape[1])

    def objective(t):
        return _smooth_loss(t, Xb, y, l2_penalty) + l1_penalty * np.abs(t[1:]).sum()

    smooth = _smooth_loss(theta, Xb, y, l2_penalty)
    history = [objective(theta)]
    step = step_size
    converged = False
    gradient_norm = math.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        gradient = _smooth_gradient(theta, Xb, y, l2_penalty)
        if l1_penalty == 0:
            gradient_norm = float(np.max(np.abs(gradient)))
            if gradient_norm < tolerance:
                converged = True
                break
        step = min(step * 2.0, step_size * 1e6)
        while True:
            candidate = theta - step * gradient
            if l1_penalty > 0:
                candidate[1:] = soft_threshold(candidate[1:], step * l1_penalty)
            candidate_smooth = _smooth_loss(candidate, Xb, y, l2_penalty)
            move = candidate - theta
            if l1_penalty == 0:
                accepted = candidate_smooth <= smooth - _ARMIJO * step * gradient @ gradient
            else:
                bound = smooth + gradient @ move + move @ move / (2.0 * step)
                accepted = candidate_smooth <= bound
            if accepted or step < _MIN_STEP:
                break
            step *= 0.5
        if not accepted:
            logger.debug(f"Line search stalled at iteration {n_iter}.")
            break
        if l1_penalty > 0:
            gradient_norm = float(np.max(np.abs(move))) / step
        theta, smooth = candidate, candidate_smooth
        history.append(objective(theta))
        if l1_penalty > 0 and gradient_norm < tolerance:
            converged = True
            break
    if not converged:
        message = (
            f"logistic regression did not converge in {max_iter} iterations "
            f"(gradient norm {gradient_norm:.3g})"
        )
        logger.warning(message)
        if warn:
            warnings.warn(message, NonConvergenceWarning, stacklevel=2)
    return LogisticFit(
        coef=theta[1:].copy(),
        intercept=float(theta[0]),
        converged=converged,
        n_iter=n_iter,
        gradient_norm=gradient_norm,
        loss_history=np.array(history),
    )


def _score_linear(params: Params, X: np.ndarray) -> np.ndarray:
    return sigmoid(X @ params["coef"] + params["intercept"])


def _convergence(fit: LogisticFit) -> Dict:
    return {"converged": fit.converged, "n_iter": fit.n_iter, "gradient_norm": fit.gradient_norm}


@register_learner("logistic", _score_linear)
def _train_logistic(X, y, config: LearnerConfig, rng) -> Tuple[Params, Dict]:
    fit = fit_logistic(
        X,
        y,
        l2_penalty=config.l2_penalty,
        max_iter=config.max_iter,
        tolerance=config.tolerance,
        step_size=config.step_size,
    )
    return {"coef": fit.coef, "intercept": fit.intercept}, _convergence(fit)


@register_learner("l1_logistic", _score_linear)
def _train_l1_logistic(X, y, config: LearnerConfig, rng) -> Tuple[Params, Dict]:
    fit = fit_logistic(
        X,
        y,
        l1_penalty=config.l1_penalty,
        l2_penalty=config.l2_penalty,
        max_iter=config.max_iter,
        tolerance=config.tolerance,
        step_size=config.step_size,
    )
    details = _convergence(fit)
    details["n_nonzero"] = int(np.count_nonzero(fit.coef))
    return {"coef": fit.coef, "intercept": fit.intercept}, details


def bootstrap_rows(y: np.ndarray, rng: np.random.Generator, resample: bool = True) -> np.ndarray:
    """Bootstrap row indices holding both classes. Falls back to every row."""
    if not resample:
        return np.arange(y.size)
    for _ in range(_MAX_RESAMPLES):
        rows = rng.integers(0, y.size, size=y.size)
        if y[rows].min() != y[rows].max():
            return rows
    logger.warning("No bootstrap sample with both classes, using every row.")
    return np.arange(y.size)


def _score_bagged(params: Params, X: np.ndarray) -> np.ndarray:
    return member_mean(params["members"], _score_linear, X)


@register_learner("bagged_logistic", _score_bagged)
def _train_bagged_logistic(X, y, config: LearnerConfig, rng) -> Tuple[Params, Dict]:
    members = []
    not_converged = 0
    for _ in range(config.n_estimators):
        rows = bootstrap_rows(y, rng, config.bootstrap)
        fit = fit_logistic(
            X[rows],
            y[rows],
            l2_penalty=config.l2_penalty,
            max_iter=config.max_iter,
            tolerance=config.tolerance,
            step_size=config.step_size,
            warn=False,
        )
        not_converged += not fit.converged
        members.append({"coef": fit.coef, "intercept": fit.intercept})
    if not_converged:
        warnings.warn(
            f"{not_converged} of {config.n_estimators} bagged members did not converge",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return {"members": members}, {"converged": not_converged == 0}


@register_learner("lda", _score_linear)
def _train_lda(X, y, config: LearnerConfig, rng) -> Tuple[Params, Dict]:
    """Gaussian classes sharing one covariance, scored by the exact posterior."""
    mean0, mean1 = X[y == 0].mean(axis=0), X[y == 1].mean(axis=0)
    centered = X - np.where(y[:, None] == 1, mean1, mean0)
    covariance = centered.T @ centered / max(y.size - 2, 1)
    n_features = X.shape[1]
    ridge_applied = np.linalg.matrix_rank(covariance) < n_features
    if ridge_applied:
        scale = np.trace(covariance) / n_features if np.trace(covariance) > 0 else 1.0
        logger.warning(f"Singular LDA covariance, adding a ridge of {config.ridge * scale:.3g}.")
        covariance = covariance + config.ridge * scale * np.eye(n_features)
    try:
        factor = cho_factor(covariance)
    except LinAlgError as e:
        raise SingularCovarianceError(f"pooled covariance is not invertible: {e}") from None
    coef = cho_solve(factor, mean1 - mean0)
    prior = float(np.mean(y))
    intercept = float(-0.5 * (mean1 + mean0) @ coef + math.log(prior / (1.0 - prior)))
    return {"coef": coef, "intercept": intercept}, {"ridge_applied": bool(ridge_applied)}


@register_learner("linear_svm", _score_linear)
def _train_linear_svm(X, y, config: LearnerConfig, rng) -> Tuple[Params, Dict]:
    """Hinge loss with a squared-norm penalty, full-batch projected subgradient descent.

    The intercept is an extra weight on a constant column. The iterate with the lowest
    objective is kept. Probabilities are the logistic link of the margins.
    """
    signs = 2.0 * y - 1.0
    Xb = np.column_stack([X, np.ones(X.shape[0])])
    penalty = config.svm_penalty
    radius = 1.0 / math.sqrt(penalty)
    theta = np.zeros(Xb.shape[1])

    def objective(t):
        return 0.5 * penalty * t @ t + np.mean(np.maximum(0.0, 1.0 - signs * (Xb @ t)))

    best, best_objective = theta.copy(), objective(theta)
    for t in range(1, config.svm_iterations + 1):
        active = signs * (Xb @ theta) < 1.0
        subgradient = penalty * theta - Xb[active].T @ signs[active] / y.size
        theta = theta - subgradient / (penalty * t)
        norm = np.linalg.norm(theta)
        if norm > radius:
            theta *= radius / norm
        value = objective(theta)
        if value < best_objective:
            best, best_objective = theta.copy(), value
    logger.debug(f"SVM objective {best_objective:.6g} after {config.svm_iterations} steps.")
    return {"coef": best[:-1], "intercept": float(best[-1])}, {"objective": float(best_objective)}
