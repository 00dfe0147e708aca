"""Viterbi forced alignment over a blank-expanded phoneme plan.

Scores are log-probabilities. The boundary variant adds ``alpha`` times a
boundary log-probability for frames assigned to the first phoneme of a
lyric line: either once, when the path enters that state (``entry``), or
for every frame spent there (``occupancy``).

Ties are broken deterministically: staying in a state beats advancing,
advancing by one beats skipping a blank, and at the final frame the last
phoneme beats the trailing blank.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InfeasibleLength, LengthMismatch
from .gram import FrameClock, Posteriorgram
from .lexicon import PhonemePlan
from .loss import skip_allowed

DEFAULT_ALPHA = 0.8
ALPHA_GRID = (0.5, 0.8, 1.0, 1.2, 1.5)
ENTRY, OCCUPANCY = "entry", "occupancy"


@dataclass(frozen=True)
class BdrConfig:
    alpha: float = DEFAULT_ALPHA
    mode: str = ENTRY

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.mode not in (ENTRY, OCCUPANCY):
            raise ValueError(f"unknown bonus mode {self.mode!r}")


@dataclass
class AlignmentPath:
    states: np.ndarray  # state index per frame
    score: float

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int64)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(t, int(q)) for t, q in enumerate(self.states)]

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class WordSpan:
    word_idx: int
    line_idx: int
    text: str
    onset: float
    offset: float


@dataclass(frozen=True)
class LineSpan:
    line_idx: int
    onset: float
    offset: float
    text: str = ""


def _emissions(gram: Posteriorgram, plan: PhonemePlan) -> np.ndarray:
    classes = np.asarray(plan.classes)
    if classes.max() >= gram.n_classes:
        raise LengthMismatch(f"plan uses class {classes.max()} but posteriorgram has {gram.n_classes}")
    if gram.n_frames < plan.min_frames():
        raise InfeasibleLength(f"{gram.n_frames} frames cannot emit a plan needing {plan.min_frames()}")
    return gram.data[:, classes]


def _decode(emit: np.ndarray, plan: PhonemePlan, entry_bonus: np.ndarray | None) -> AlignmentPath:
    """Max-sum DP; ``entry_bonus[t, s]`` is added when entering state s at frame t."""
    n_frames, n_states = emit.shape
    skip = skip_allowed(plan)
    back = np.zeros((n_frames, n_states), dtype=np.int8)  # 0 stay, 1 advance, 2 skip

    score = np.full(n_states, -np.inf)
    score[:2] = emit[0, :2]
    if entry_bonus is not None:
        score[:2] += entry_bonus[0, :2]
    for t in range(1, n_frames):
        stay = score
        adv = np.full(n_states, -np.inf)
        adv[1:] = score[:-1]
        jump = np.full(n_states, -np.inf)
        jump[2:] = np.where(skip[2:], score[:-2], -np.inf)
        if entry_bonus is not None:
            adv = adv + entry_bonus[t]
            jump = jump + entry_bonus[t]
        cand = np.stack([stay, adv, jump])
        choice = np.argmax(cand, axis=0)  # first maximum wins
        back[t] = choice
        score = cand[choice, np.arange(n_states)] + emit[t]

    last = n_states - 2 if score[-2] >= score[-1] else n_states - 1
    best = float(score[last])
    if not np.isfinite(best):
        raise InfeasibleLength("no legal path has finite score")
    states = np.empty(n_frames, dtype=np.int64)
    q = last
    for t in range(n_frames - 1, -1, -1):
        states[t] = q
        q -= back[t, q]
    return AlignmentPath(states, best)


def viterbi(gram: Posteriorgram, plan: PhonemePlan) -> AlignmentPath:
    """Best CTC-topology path for ``plan`` through a phoneme posteriorgram."""
    return _decode(_emissions(gram, plan), plan, None)


def viterbi_bdr(
    gram: Posteriorgram, bdr: Posteriorgram, plan: PhonemePlan, cfg: BdrConfig | None = None
) -> AlignmentPath:
    """Viterbi with a boundary bonus on each line's first phoneme state."""
    cfg = cfg or BdrConfig()
    if bdr.n_frames != gram.n_frames:
        raise LengthMismatch(f"boundary gram has {bdr.n_frames} frames, phoneme gram {gram.n_frames}")
    emit = _emissions(gram, plan)
    if cfg.alpha == 0:
        return _decode(emit, plan, None)
    starts = plan.line_start_states
    bonus = np.zeros_like(emit)
    bonus[:, starts] = cfg.alpha * bdr.data[:, :1]
    if cfg.mode == OCCUPANCY:
        return _decode(emit + bonus, plan, None)
    return _decode(emit, plan, bonus)


def path_score(
    gram: Posteriorgram,
    plan: PhonemePlan,
    states: Sequence[int],
    bdr: Posteriorgram | None = None,
    cfg: BdrConfig | None = None,
) -> float:
    """Recompute the alignment objective of an explicit state path."""
    classes = plan.classes
    total = sum(gram.data[t, classes[q]] for t, q in enumerate(states))
    if bdr is not None and cfg is not None and cfg.alpha != 0:
        starts = set(plan.line_start_states)
        for t, q in enumerate(states):
            if q not in starts:
                continue
            entering = t == 0 or states[t - 1] != q
            if cfg.mode == OCCUPANCY or entering:
                total += cfg.alpha * bdr.data[t, 0]
    return float(total)


def is_legal(states: Sequence[int], plan: PhonemePlan) -> bool:
    n = len(plan)
    if len(states) == 0 or states[0] not in (0, 1) or states[-1] not in (n - 1, n - 2):
        return False
    skip = skip_allowed(plan)
    for a, b in zip(states, states[1:]):
        step = b - a
        if step not in (0, 1, 2) or (step == 2 and not skip[b]):
            return False
    return True


def path_to_spans(
    path: AlignmentPath,
    plan: PhonemePlan,
    clock: FrameClock,
    words: Sequence | None = None,
) -> tuple[list[WordSpan], list[LineSpan]]:
    """Convert a state path into word and line time spans.

    A word starts at the first frame on its first phoneme state and ends
    after the last frame on its last phoneme state. ``words`` (the lexicon
    ``Word`` objects) supplies text and line membership; without it every
    line start in the plan opens a new line.
    """
    states = path.states
    first_frame: dict[int, int] = {}
    last_frame: dict[int, int] = {}
    for t, q in enumerate(states):
        first_frame.setdefault(int(q), t)
        last_frame[int(q)] = t

    line_of: dict[int, int] = {}
    text_of: dict[int, str] = {}
    if words is not None:
        for w in words:
            line_of[w.word_idx] = w.line_idx
            text_of[w.word_idx] = w.text
    else:
        line = -1
        for s in plan.states:
            if s.word_idx is None:
                continue
            if s.is_line_start:
                line += 1
            line_of.setdefault(s.word_idx, max(line, 0))

    spans = []
    for widx, idx in sorted(plan.word_states().items()):
        onset = clock.time(first_frame[idx[0]])
        offset = clock.time(last_frame[idx[-1]] + 1)
        spans.append(WordSpan(widx, line_of[widx], text_of.get(widx, ""), float(onset), float(offset)))

    lines: list[LineSpan] = []
    for span in spans:
        if lines and lines[-1].line_idx == span.line_idx:
            prev = lines[-1]
            lines[-1] = LineSpan(prev.line_idx, prev.onset, span.offset, f"{prev.text} {span.text}".strip())
        else:
            lines.append(LineSpan(span.line_idx, span.onset, span.offset, span.text))
    return spans, lines


def alignment_to_dict(words: list[WordSpan], lines: list[LineSpan], score: float) -> dict:
    return {
        "words": [
            {"word": w.text, "index": w.word_idx, "line": w.line_idx, "onset": w.onset, "offset": w.offset}
            for w in words
        ],
        "lines": [{"line": ln.line_idx, "text": ln.text, "onset": ln.onset, "offset": ln.offset} for ln in lines],
        "score": score,
    }


def format_lrc_time(seconds: float) -> str:
    centis = int(round(seconds * 100))
    minutes, centis = divmod(centis, 6000)
    return f"{minutes:02d}:{centis // 100:02d}.{centis % 100:02d}"


def to_lrc(lines: list[LineSpan]) -> str:
    """Line-level karaoke timing in LRC format (``[mm:ss.xx]text``)."""
    return "".join(f"[{format_lrc_time(ln.onset)}]{ln.text}\n" for ln in lines)
