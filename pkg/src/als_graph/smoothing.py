"""Smoothed-label construction and the three training losses with exact gradients.

The adaptive path replaces the uniform smoothing target with a learned one:
propagated neighbor labels pass through a trainable class-relevance matrix W
and a softmax, giving per-node soft targets. The mixing strength follows a
pacing schedule over epochs, and a KL-to-uniform penalty keeps the learned
soft targets from collapsing onto the hard labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import stream

__all__ = [
    "PacingSchedule",
    "RefinementMatrix",
    "LossBreakdown",
    "alpha_at",
    "init_refinement",
    "refine_soft_label",
    "smooth_label",
    "smooth_labels",
    "kl_to_uniform",
    "loss_and_grads",
    "softmax_rows",
    "reset_refinement_op_count",
    "refinement_op_count",
]

PROB_FLOOR = 1e-12  # predicted probabilities are clamped here before log

# multiply-add counter for the refinement path (matrix products touching W);
# tests assert the expected |B| * C^2 scaling from it
_REFINEMENT_MADDS = 0


def reset_refinement_op_count() -> None:
    global _REFINEMENT_MADDS
    _REFINEMENT_MADDS = 0


def refinement_op_count() -> int:
    return _REFINEMENT_MADDS


@dataclass(frozen=True)
class PacingSchedule:
    """Smoothing-strength schedule over epochs.

    * ``constant``:    alpha_const
    * ``linear``:      min(r * t, alpha_max)
    * ``exponential``: min(b * exp(r * t), alpha_max)

    ``r`` may be negative (decaying strength for full-batch regimes); the
    closed forms are evaluated exactly, and range checks happen where a
    strength is consumed.
    """

    kind: str = "constant"
    alpha_const: float = 0.1
    r: float = 0.0
    b: float = 0.1
    alpha_max: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "linear", "exponential"):
            raise ValueError(f"unknown pacing kind {self.kind!r}")
        if not 0.0 <= self.alpha_const <= 1.0:
            raise ValueError("alpha_const must lie in [0, 1]")
        if not 0.0 <= self.alpha_max <= 1.0:
            raise ValueError("alpha_max must lie in [0, 1]")
        if self.b < 0.0:
            raise ValueError("initial strength b must be nonnegative")


def alpha_at(schedule: PacingSchedule, t: int) -> float:
    """Smoothing strength at epoch ``t`` via the exact closed forms."""
    if t < 0:
        raise ValueError("epoch index must be nonnegative")
    if schedule.kind == "constant":
        return schedule.alpha_const
    if schedule.kind == "linear":
        return min(schedule.r * t, schedule.alpha_max)
    if schedule.b == 0.0:
        return min(0.0, schedule.alpha_max)
    exponent = schedule.r * t
    if exponent > 700.0:  # exp overflows; any positive b already exceeds the cap
        return schedule.alpha_max
    return min(schedule.b * math.exp(exponent), schedule.alpha_max)


@dataclass
class RefinementMatrix:
    """Trainable C x C class-relevance matrix with its gradient slot."""

    w: np.ndarray
    grad: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 2 or self.w.shape[0] != self.w.shape[1]:
            raise ValueError("relevance matrix must be square")
        if not np.isfinite(self.w).all():
            raise ValueError("relevance matrix must be finite")
        if self.grad is None:
            self.grad = np.zeros_like(self.w)

    @property
    def num_classes(self) -> int:
        return self.w.shape[0]


def init_refinement(num_classes: int, seed: int, scale: float = 0.01) -> RefinementMatrix:
    """Small Gaussian init so early soft targets stay close to uniform."""
    gen = stream(seed)
    return RefinementMatrix(scale * gen.standard_normal((num_classes, num_classes)))


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def refine_soft_label(refinement: RefinementMatrix, yk_row: np.ndarray) -> np.ndarray:
    """Soft target softmax(W @ yk_row); strictly positive, sums to one."""
    yk_row = np.asarray(yk_row, dtype=np.float64)
    if not np.isfinite(yk_row).all():
        raise ValueError("propagated label row must be finite")
    return softmax_rows(refinement.w @ yk_row)


def smooth_label(y: np.ndarray, y_soft: np.ndarray | None, alpha_t: float, mode: str) -> np.ndarray:
    """Convex mixture (1 - alpha) * y + alpha * target.

    The target is the uniform distribution (``uniform_ls``), the learned soft
    label (``als`` and ``ablate_propagation``, whose caller feeds the hard
    label through W), or the propagated row itself renormalized
    (``ablate_refinement``; an all-zero row falls back to uniform).
    """
    return smooth_labels(np.atleast_2d(y), None if y_soft is None else np.atleast_2d(y_soft),
                         alpha_t, mode)[0]


def smooth_labels(y: np.ndarray, y_soft: np.ndarray | None, alpha_t: float, mode: str) -> np.ndarray:
    """Row-wise version of :func:`smooth_label`."""
    if not 0.0 <= alpha_t <= 1.0:
        raise ValueError(f"smoothing strength {alpha_t} out of [0, 1]")
    y = np.asarray(y, dtype=np.float64)
    c = y.shape[-1]
    if mode == "uniform_ls":
        target = np.full_like(y, 1.0 / c)
    elif mode in ("als", "ablate_propagation"):
        if y_soft is None:
            raise ValueError(f"mode {mode!r} needs soft targets")
        target = np.asarray(y_soft, dtype=np.float64)
    elif mode == "ablate_refinement":
        if y_soft is None:
            raise ValueError("mode 'ablate_refinement' needs propagated rows")
        raw = np.asarray(y_soft, dtype=np.float64)
        sums = raw.sum(axis=-1, keepdims=True)
        target = np.where(sums > PROB_FLOOR, raw / np.where(sums > PROB_FLOOR, sums, 1.0), 1.0 / c)
    else:
        raise ValueError(f"unknown smoothing mode {mode!r}")
    return (1.0 - alpha_t) * y + alpha_t * target


def kl_to_uniform(p: np.ndarray) -> float:
    """KL(p || uniform) = sum_c p_c * ln(p_c * C), with 0 * ln 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("expected a single distribution")
    if p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("input is not a probability distribution")
    pos = p > 0
    return float(np.sum(p[pos] * np.log(p[pos] * p.size)))


def _kl_rows(p: np.ndarray) -> np.ndarray:
    c = p.shape[-1]
    safe = np.where(p > 0, p, 1.0)
    return np.sum(np.where(p > 0, p * np.log(safe * c), 0.0), axis=-1)


@dataclass(frozen=True)
class LossBreakdown:
    """Batch loss split into its hard, soft and KL parts.

    In the adaptive mode ``total`` equals
    ``(1 - alpha_t) * ce_hard + alpha_t * ce_soft + gamma * kl_term`` exactly.
    """

    total: float
    ce_hard: float
    ce_soft: float
    kl_term: float


def _cross_entropy_rows(targets: np.ndarray, log_probs: np.ndarray) -> np.ndarray:
    return -np.sum(targets * log_probs, axis=-1)


def loss_and_grads(
    logits: np.ndarray,
    targets: np.ndarray,
    soft_inputs: np.ndarray | None = None,
    refinement: RefinementMatrix | None = None,
    alpha_t: float = 0.0,
    gamma: float = 0.0,
    mode: str = "plain",
    stop_gradient_yhat: bool = False,
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    """Batch loss with exact gradients for the logits and for W.

    ``targets`` are the per-node hard-label distributions (one-hot in the
    standard paths; any distribution is accepted in ``plain`` mode, which is
    how premixed ablation targets run). In ``als`` mode the soft targets are
    softmax(W @ soft_inputs) row-wise, and W receives the full joint gradient
    of both the soft cross-entropy term and the KL penalty.
    ``stop_gradient_yhat`` removes the pull of the soft term on the logits,
    leaving only the hard-label part of the logits gradient.

    Returns ``(breakdown, dlogits, dW)`` with ``dlogits = (p - mix) / |B|``
    row-wise; ``dW`` is zero outside ``als`` mode. Natural log throughout;
    predicted probabilities are floored at ``PROB_FLOOR`` inside the log.
    """
    global _REFINEMENT_MADDS
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if logits.ndim != 2 or logits.shape != targets.shape:
        raise ValueError("logits and targets must share a (batch, classes) shape")
    batch, c = logits.shape
    if batch == 0:
        raise ValueError("empty batch")
    if alpha_t < 0.0 or alpha_t > 1.0:
        raise ValueError(f"smoothing strength {alpha_t} out of [0, 1]")
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    if mode not in ("plain", "ls", "als"):
        raise ValueError(f"unknown loss mode {mode!r}")

    probs = softmax_rows(logits)
    log_probs = np.log(np.maximum(probs, PROB_FLOOR))
    ce_hard = float(np.mean(_cross_entropy_rows(targets, log_probs)))
    dw = np.zeros((c, c))

    if mode == "plain":
        dlogits = (probs - targets) / batch
        return LossBreakdown(ce_hard, ce_hard, 0.0, 0.0), dlogits, dw

    if mode == "ls":
        soft = np.full_like(targets, 1.0 / c)
        kl = 0.0
    else:
        if refinement is None or soft_inputs is None:
            raise ValueError("als mode needs a refinement matrix and propagated rows")
        soft_inputs = np.asarray(soft_inputs, dtype=np.float64)
        if soft_inputs.shape != (batch, c):
            raise ValueError("propagated rows must match the batch shape")
        soft = softmax_rows(soft_inputs @ refinement.w.T)
        _REFINEMENT_MADDS += batch * c * c
        kl = float(np.mean(_kl_rows(soft)))

    ce_soft = float(np.mean(_cross_entropy_rows(soft, log_probs)))
    total = (1.0 - alpha_t) * ce_hard + alpha_t * ce_soft + gamma * kl

    mix = (1.0 - alpha_t) * targets + alpha_t * soft
    if stop_gradient_yhat:
        dlogits = (1.0 - alpha_t) * (probs - targets) / batch
    else:
        dlogits = (probs - mix) / batch

    if mode == "als":
        # chain rule through soft = softmax(s): ds = soft * (a - <soft, a>);
        # flooring inside the log keeps underflowed soft entries at their
        # correct zero-gradient limit
        a = alpha_t * (-log_probs) + gamma * np.log(np.maximum(soft, PROB_FLOOR) * c)
        ds = soft * (a - np.sum(soft * a, axis=-1, keepdims=True))
        dw = ds.T @ soft_inputs / batch
        _REFINEMENT_MADDS += batch * c * c
    return LossBreakdown(total, ce_hard, ce_soft, kl), dlogits, dw
