"""Reference implementations of the training losses.

All losses are in nats. The CTC gradient is taken with respect to the
log-probabilities stored in the posteriorgram, not the logits that
produced them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllMasked, InfeasibleLength, LengthMismatch
from .gram import FrameClock, Posteriorgram
from .lexicon import BLANK, PhonemePlan

DEFAULT_LAMBDA = 0.5
LAMBDA_GRID = (0.5, 0.8, 1.0, 1.2, 1.5)
DEFAULT_GAUSSIAN_WIDTH = 0.7
BCE_EPS = 1e-7


@dataclass(frozen=True)
class LossReport:
    phone_loss: float
    pitch_loss: float
    lam: float
    total: float

    def to_dict(self) -> dict:
        return {"phone_loss": self.phone_loss, "pitch_loss": self.pitch_loss, "lambda": self.lam, "total": self.total}


@dataclass
class BoundaryCurve:
    values: np.ndarray
    clock: FrameClock = field(default_factory=FrameClock)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()

    def __len__(self) -> int:
        return len(self.values)

    def to_posteriorgram(self) -> Posteriorgram:
        return Posteriorgram.from_probs(self.values, "boundary", self.clock, floor=BCE_EPS)

    @classmethod
    def from_posteriorgram(cls, gram: Posteriorgram) -> "BoundaryCurve":
        return cls(np.exp(gram.data[:, 0]), gram.clock)


def skip_allowed(plan: PhonemePlan) -> np.ndarray:
    """Mask of states reachable by jumping over the preceding blank."""
    states = plan.states
    ok = np.zeros(len(states), dtype=bool)
    for s in range(2, len(states)):
        ok[s] = states[s].kind != BLANK and states[s].class_index != states[s - 2].class_index
    return ok


def _check_feasible(n_frames: int, plan: PhonemePlan) -> None:
    need = plan.min_frames()
    if n_frames < need:
        raise InfeasibleLength(f"{n_frames} frames cannot emit a plan needing {need}")


def ctc_forward_backward(logp: np.ndarray, plan: PhonemePlan):
    """Log-space forward and backward variables over plan states.

    Both include the emission of frame t, so ``alpha + beta - emit`` is the
    log-mass of paths occupying state s at frame t.
    """
    classes = np.asarray(plan.classes)
    n_frames, n_states = logp.shape[0], len(classes)
    emit = logp[:, classes]
    skip = skip_allowed(plan)
    skip_from = np.zeros(n_states, dtype=bool)
    skip_from[:-2] = skip[2:]

    alpha = np.full((n_frames, n_states), -np.inf)
    alpha[0, :2] = emit[0, :2]
    for t in range(1, n_frames):
        prev = alpha[t - 1]
        acc = prev.copy()
        acc[1:] = np.logaddexp(acc[1:], prev[:-1])
        acc[2:] = np.where(skip[2:], np.logaddexp(acc[2:], prev[:-2]), acc[2:])
        alpha[t] = acc + emit[t]

    beta = np.full((n_frames, n_states), -np.inf)
    beta[-1, -2:] = emit[-1, -2:]
    for t in range(n_frames - 2, -1, -1):
        nxt = beta[t + 1]
        acc = nxt.copy()
        acc[:-1] = np.logaddexp(acc[:-1], nxt[1:])
        acc[:-2] = np.where(skip_from[:-2], np.logaddexp(acc[:-2], nxt[2:]), acc[:-2])
        beta[t] = acc + emit[t]
    return alpha, beta, emit


def ctc_loss(gram: Posteriorgram, plan: PhonemePlan, allow_infeasible: bool = False):
    """Negative log-likelihood of ``plan`` summed over all CTC paths.

    Returns ``(loss, grad)`` where ``grad[t, c]`` is the derivative of the
    loss with respect to ``gram.data[t, c]``.
    """
    logp = gram.data
    try:
        _check_feasible(logp.shape[0], plan)
    except InfeasibleLength:
        if allow_infeasible:
            return np.inf, np.zeros_like(logp)
        raise
    alpha, beta, emit = ctc_forward_backward(logp, plan)
    log_z = np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    occupancy = np.exp(alpha + beta - emit - log_z)
    grad = np.zeros_like(logp)
    np.add.at(grad, (slice(None), np.asarray(plan.classes)), -occupancy)
    return float(-log_z), grad


def pitch_ce(gram: Posteriorgram, targets, mask=None) -> float:
    """Mean frame-wise cross entropy over unmasked frames."""
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (gram.n_frames,):
        raise LengthMismatch(f"{len(targets)} targets for {gram.n_frames} frames")
    mask = np.ones(gram.n_frames, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != targets.shape:
        raise LengthMismatch("mask and targets differ in length")
    if not mask.any():
        raise AllMasked("no annotated frame contributes to the pitch loss")
    frames = np.flatnonzero(mask)
    return float(-gram.data[frames, targets[frames]].mean())


def total_loss(phone: float, pitch: float, lam: float = DEFAULT_LAMBDA) -> LossReport:
    """Weighted multi-task loss ``phone + lam * pitch``."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return LossReport(phone, pitch, lam, phone + lam * pitch)


def boundary_targets(
    line_starts, clock: FrameClock, n_frames: int, width: float = DEFAULT_GAUSSIAN_WIDTH
) -> BoundaryCurve:
    """Boundary activation curve with a truncated Gaussian per line start.

    Each event is snapped to its nearest frame, where the curve is exactly 1.
    The window spans ``width`` seconds (sigma = width / 6) and overlapping
    windows combine by maximum. Events outside the clip are ignored.
    """
    sigma = width / 6.0
    half = width / 2.0
    times = clock.time(np.arange(n_frames))
    curve = np.zeros(n_frames)
    for start in line_starts:
        center = clock.frame(start)
        if not 0 <= center < n_frames:
            continue
        d = times - clock.time(center)
        g = np.where(np.abs(d) < half, np.exp(-0.5 * (d / sigma) ** 2), 0.0)
        np.maximum(curve, g, out=curve)
    return BoundaryCurve(curve, clock)


def boundary_bce(pred: BoundaryCurve, target: BoundaryCurve, eps: float = BCE_EPS) -> float:
    x = np.clip(np.asarray(pred.values if isinstance(pred, BoundaryCurve) else pred, dtype=np.float64), eps, 1 - eps)
    y = np.asarray(target.values if isinstance(target, BoundaryCurve) else target, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"prediction has {x.size} frames, target {y.size}")
    return float(np.mean(-(y * np.log(x) + (1 - y) * np.log1p(-x))))

