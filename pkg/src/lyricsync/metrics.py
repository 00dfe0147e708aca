"""Evaluation of word/line alignment, boundary detection and note transcription."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.stats import rankdata

from .errors import DegenerateLabels, EmptyInput, LengthMismatch
from .notes import NoteEvent

PCO_TOLERANCE = 0.3
BOUNDARY_WINDOW = 0.5
ONSET_TOLERANCE = 0.05
OFFSET_RATIO = 0.2
OFFSET_MIN = 0.05
PITCH_TOLERANCE = 50.0  # cents


@dataclass(frozen=True)
class AlignEval:
    aae: float
    pco: float
    level: str = "word"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundaryEval:
    precision: float
    recall: float
    f_score: float
    auc: float | None = None
    empty: bool = False  # an event list was empty; scores are 0 by convention

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NoteEval:
    con: float
    conp: float
    conpoff: float

    def to_dict(self) -> dict:
        return asdict(self)


def f_measure(precision: float, recall: float) -> float:
    if precision <= 0 or recall <= 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def eval_alignment(est: Sequence[float], ref: Sequence[float], tol: float = PCO_TOLERANCE, level: str = "word") -> AlignEval:
    """Average absolute onset error and fraction of onsets within ``tol``."""
    est = np.asarray(est, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if est.shape != ref.shape:
        raise LengthMismatch(f"{est.size} estimated vs {ref.size} reference onsets")
    if est.size == 0:
        raise EmptyInput("no onsets to evaluate")
    err = np.abs(est - ref)
    return AlignEval(float(err.mean()), float(np.mean(err <= tol)), level)


def corpus_alignment(evals: Sequence[AlignEval]) -> AlignEval:
    """Per-song mean, so every song weighs the same regardless of length."""
    if not evals:
        raise EmptyInput("no songs")
    return AlignEval(
        float(np.mean([e.aae for e in evals])),
        float(np.mean([e.pco for e in evals])),
        evals[0].level,
    )


def match_events(est: Sequence[float], ref: Sequence[float], window: float) -> list[tuple[int, int]]:
    """Greedy one-to-one matching in time order.

    Each estimate, earliest first, takes the closest still-unmatched
    reference within ``window`` (the earlier one on a tie).
    """
    used = set()
    pairs = []
    order_est = sorted(range(len(est)), key=lambda i: est[i])
    order_ref = sorted(range(len(ref)), key=lambda j: ref[j])
    for i in order_est:
        best = None
        for j in order_ref:
            if j in used:
                continue
            d = abs(est[i] - ref[j])
            if d <= window and (best is None or d < best[0]):
                best = (d, j)
        if best is not None:
            used.add(best[1])
            pairs.append((i, best[1]))
    return pairs


def eval_boundary(est_events: Sequence[float], ref_events: Sequence[float], window: float = BOUNDARY_WINDOW) -> BoundaryEval:
    """Precision/recall/F of boundary events with a +-``window`` hit rule."""
    est = [float(x) for x in est_events]
    ref = [float(x) for x in ref_events]
    if not est or not ref:
        return BoundaryEval(0.0, 0.0, 0.0, empty=True)
    hits = len(match_events(est, ref, window))
    p, r = hits / len(est), hits / len(ref)
    return BoundaryEval(p, r, f_measure(p, r))


def eval_auc(pred, target, binarize_at: float = 0.5) -> float:
    """ROC AUC of a boundary activation curve against a binarized target.

    Computed as the Mann-Whitney statistic; tied scores count one half.
    """
    x = np.asarray(getattr(pred, "values", pred), dtype=np.float64).ravel()
    y = np.asarray(getattr(target, "values", target), dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise LengthMismatch(f"prediction has {x.size} frames, target {y.size}")
    pos = y >= binarize_at
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("target has a single class after binarization")
    ranks = rankdata(x)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def pick_boundaries(curve, clock, threshold: float = 0.5, min_distance: float = 0.0) -> list[float]:
    """Times of local maxima of an activation curve above ``threshold``."""
    values = np.asarray(getattr(curve, "values", curve), dtype=np.float64).ravel()
    distance = max(1, int(round(min_distance / clock.period))) if min_distance > 0 else None
    peaks, _ = find_peaks(np.concatenate([[-np.inf], values, [-np.inf]]), height=threshold, distance=distance)
    return [float(clock.time(p - 1)) for p in peaks]


def pitch_distance_cents(est: float, ref: float, octave_wrap: bool = True) -> float:
    cents = 100.0 * (est - ref)
    if not octave_wrap:
        return abs(cents)
    wrapped = cents % 1200.0
    return min(wrapped, 1200.0 - wrapped)


def _match_count(adj: np.ndarray) -> int:
    if adj.size == 0 or not adj.any():
        return 0
    matching = maximum_bipartite_matching(csr_matrix(adj.astype(np.int8)), perm_type="column")
    return int(np.sum(matching >= 0))


def eval_notes(
    est: Sequence[NoteEvent],
    ref: Sequence[NoteEvent],
    onset_tol: float = ONSET_TOLERANCE,
    offset_ratio: float = OFFSET_RATIO,
    offset_min: float = OFFSET_MIN,
    pitch_tol: float = PITCH_TOLERANCE,
    octave_wrap: bool = True,
) -> NoteEval:
    """COn, COnP and COnPOff note F-scores.

    Each level is scored with a maximum one-to-one matching between
    estimated and reference notes satisfying that level's criteria, which
    keeps COnPOff <= COnP <= COn.
    """
    if not est or not ref:
        return NoteEval(0.0, 0.0, 0.0)
    e_on = np.array([n.onset for n in est])[:, None]
    r_on = np.array([n.onset for n in ref])[None, :]
    onset_ok = np.abs(e_on - r_on) <= onset_tol
    pitch_ok = np.array([[pitch_distance_cents(a.pitch, b.pitch, octave_wrap) <= pitch_tol for b in ref] for a in est])
    off_tol = np.array([max(offset_min, offset_ratio * n.duration) for n in ref])[None, :]
    e_off = np.array([n.offset for n in est])[:, None]
    r_off = np.array([n.offset for n in ref])[None, :]
    offset_ok = np.abs(e_off - r_off) <= off_tol

    def score(adj):
        hits = _match_count(adj)
        return f_measure(hits / len(est), hits / len(ref))

    con_adj = onset_ok
    conp_adj = con_adj & pitch_ok
    return NoteEval(score(con_adj), score(conp_adj), score(conp_adj & offset_ok))


def corpus_mean(rows: Sequence[dict]) -> dict:
    """Column-wise mean of per-song metric rows (numeric fields only)."""
    if not rows:
        raise EmptyInput("no songs")
    keys = [k for k, v in rows[0].items() if isinstance(v, (int, float)) and not isinstance(v, bool)]
    return {k: float(np.mean([r[k] for r in rows])) for k in keys}
