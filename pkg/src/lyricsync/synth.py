"""Synthetic ground truth and exhaustive oracles.

``synth_case`` builds a joint tensor whose pooled argmax follows a known
alignment path and note sequence, so every stage can be tested without a
trained model. The brute-force oracles enumerate paths directly and share
no code with the dynamic programs they check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import InfeasibleSpec, TooLarge
from .gram import SILENCE, FrameClock, JointTensor, PitchLayout
from .lexicon import ARPABET, PhonemePlan, PhonemeSet, PronouncingDictionary
from .loss import BoundaryCurve, boundary_targets
from .notes import DEFAULT_MIN_DUR, NoteEvent

MAX_ORACLE_FRAMES = 8
MAX_ORACLE_STATES = 9


@dataclass
class SynthSpec:
    seed: int
    n_frames: int
    plan: PhonemePlan
    noise: float = 0.0
    blur: int = 0
    clock: FrameClock = field(default_factory=FrameClock)
    n_phone: int = 41
    layout: PitchLayout = field(default_factory=PitchLayout)
    margin: float = 4.0
    min_run: int | None = None  # frames per phoneme; default fits the 50 ms note floor

    def __post_init__(self):
        if self.noise < 0:
            raise InfeasibleSpec("noise must be non-negative")
        if self.blur < 0:
            raise InfeasibleSpec("blur must be non-negative")
        if self.min_run is None:
            self.min_run = max(1, math.ceil(DEFAULT_MIN_DUR / self.clock.period - 1e-9))


@dataclass
class SynthCase:
    true_path: np.ndarray
    joint_tensor: JointTensor
    boundary_curve: BoundaryCurve
    true_notes: list[NoteEvent]
    true_word_spans: list[tuple[int, float, float]]  # (word_idx, onset, offset)
    true_line_onsets: list[float]
    pitch_classes: np.ndarray


def _min_durations(plan: PhonemePlan, min_run: int) -> np.ndarray:
    states = plan.states
    mins = np.zeros(len(states), dtype=np.int64)
    for s, st in enumerate(states):
        if st.kind != "blank":
            mins[s] = min_run
        elif 0 < s < len(states) - 1 and states[s - 1].class_index == states[s + 1].class_index:
            mins[s] = 1  # a blank must separate repeated labels
    return mins


def synth_case(spec: SynthSpec) -> SynthCase:
    rng = np.random.default_rng(spec.seed)
    plan, clock, T = spec.plan, spec.clock, spec.n_frames
    if max(plan.classes) >= spec.n_phone:
        raise InfeasibleSpec("plan uses classes beyond n_phone")

    mins = _min_durations(plan, spec.min_run)
    extra = T - int(mins.sum())
    if extra < 0:
        raise InfeasibleSpec(f"{T} frames cannot hold the plan (needs {int(mins.sum())})")
    weights = rng.dirichlet(np.ones(len(mins)))
    durations = mins + rng.multinomial(extra, weights)
    path = np.repeat(np.arange(len(mins)), durations)
    starts = np.concatenate([[0], np.cumsum(durations)[:-1]])
    stops = starts + durations

    # words, lines and notes all follow the sampled state durations
    word_spans = []
    line_onsets = []
    pitch = np.full(T, SILENCE, dtype=np.int64)
    prev_cls = None
    for widx, idx in sorted(plan.word_states().items()):
        onset, offset = int(starts[idx[0]]), int(stops[idx[-1]])
        word_spans.append((widx, float(clock.time(onset)), float(clock.time(offset))))
        if plan.states[idx[0]].is_line_start:
            line_onsets.append(float(clock.time(onset)))
        cuts = [onset] + [int(starts[s]) for s in idx[1:] if rng.random() < 0.5] + [offset]
        for a, b in zip(cuts, cuts[1:]):
            choices = [c for c in range(1, spec.layout.n_classes) if c != prev_cls]
            prev_cls = int(rng.choice(choices))
            pitch[a:b] = prev_cls

    notes = [
        NoteEvent(float(clock.time(a)), float(clock.time(b)), spec.layout.midi(c))
        for c, a, b in _runs(pitch)
        if c != SILENCE
    ]

    phone_hot = np.zeros((T, spec.n_phone))
    phone_hot[np.arange(T), np.asarray(plan.classes)[path]] = 1.0
    pitch_hot = np.zeros((T, spec.layout.n_classes))
    pitch_hot[np.arange(T), pitch] = 1.0
    if spec.blur > 0:
        size = 2 * spec.blur + 1
        phone_hot = uniform_filter1d(phone_hot, size, axis=0, mode="nearest")
        pitch_hot = uniform_filter1d(pitch_hot, size, axis=0, mode="nearest")
    if spec.noise > 0:
        # separable noise survives pooling at full scale on both axes
        phone_hot = phone_hot + spec.noise / spec.margin * rng.standard_normal(phone_hot.shape)
        pitch_hot = pitch_hot + spec.noise / spec.margin * rng.standard_normal(pitch_hot.shape)
    joint = spec.margin * (phone_hot[:, :, None] + pitch_hot[:, None, :])

    curve = boundary_targets(line_onsets, clock, T)
    return SynthCase(path, JointTensor(joint, clock), curve, notes, word_spans, line_onsets, pitch)


def _runs(values):
    out = []
    start = 0
    for t in range(1, len(values) + 1):
        if t == len(values) or values[t] != values[start]:
            out.append((int(values[start]), start, t))
            start = t
    return out


# ---------------------------------------------------------------- oracles


def _guard(n_frames: int, n_states: int) -> None:
    if n_frames > MAX_ORACLE_FRAMES or n_states > MAX_ORACLE_STATES:
        raise TooLarge(f"oracle limited to T<={MAX_ORACLE_FRAMES}, states<={MAX_ORACLE_STATES}")


def legal_paths(plan: PhonemePlan, n_frames: int):
    """Yield every state sequence allowed by the CTC topology."""
    cls = [s.class_index for s in plan.states]
    blank = [s.kind == "blank" for s in plan.states]
    last = len(cls) - 1

    def moves(q):
        yield q
        if q + 1 <= last:
            yield q + 1
        if q + 2 <= last and blank[q + 1] and not blank[q + 2] and cls[q + 2] != cls[q]:
            yield q + 2

    def extend(prefix):
        if len(prefix) == n_frames:
            if prefix[-1] >= last - 1:
                yield tuple(prefix)
            return
        for nq in moves(prefix[-1]):
            yield from extend(prefix + [nq])

    for q0 in (0, 1):
        if q0 <= last:
            yield from extend([q0])


def objective(gram, plan, path, bdr=None, alpha=0.0, mode="entry") -> float:
    cls = [s.class_index for s in plan.states]
    starts = {i for i, s in enumerate(plan.states) if s.is_line_start}
    total = 0.0
    for t, q in enumerate(path):
        total += gram.data[t, cls[q]]
        if bdr is not None and alpha and q in starts:
            if mode == "occupancy" or t == 0 or path[t - 1] != q:
                total += alpha * bdr.data[t, 0]
    return total


def brute_force_align(gram, plan, bdr=None, cfg=None, tol: float = 1e-9):
    """Exhaustive maximum of the alignment objective.

    Returns ``(best_score, argmax_paths)`` where paths within ``tol`` of the
    best are all included.
    """
    T = gram.data.shape[0]
    _guard(T, len(plan))
    alpha = cfg.alpha if (cfg is not None and bdr is not None) else 0.0
    mode = cfg.mode if cfg is not None else "entry"
    scored = [(objective(gram, plan, p, bdr, alpha, mode), p) for p in legal_paths(plan, T)]
    if not scored:
        return -math.inf, set()
    best = max(s for s, _ in scored)
    return best, {p for s, p in scored if s >= best - tol}


@lru_cache(maxsize=64)
def _collapsed_sequences(n_symbols: int, n_frames: int):
    """All symbol sequences (symbol 0 = blank) grouped by their CTC collapse."""
    groups: dict[tuple, list[int]] = {}
    seqs = list(itertools.product(range(n_symbols), repeat=n_frames))
    for i, seq in enumerate(seqs):
        out = []
        prev = None
        for s in seq:
            if s != prev and s != 0:
                out.append(s)
            prev = s
        groups.setdefault(tuple(out), []).append(i)
    return np.array(seqs, dtype=np.int64).reshape(len(seqs), n_frames), {k: np.array(v) for k, v in groups.items()}


def brute_force_ctc(gram, plan) -> float:
    """CTC negative log-likelihood by summing path probabilities directly.

    Frame sequences over the blank and the plan's labels are enumerated and
    kept when removing repeats and blanks yields the label sequence.
    """
    T = gram.data.shape[0]
    _guard(T, len(plan))
    labels = plan.labels
    alphabet = [plan.blank_index] + sorted(set(labels))
    local = tuple(alphabet.index(c) for c in labels)
    seqs, groups = _collapsed_sequences(len(alphabet), T)
    rows = groups.get(local)
    if rows is None:
        return math.inf
    probs = np.exp(gram.data[:, alphabet])  # T x A
    chosen = seqs[rows]
    total = 0.0
    for seq in chosen:
        p = 1.0
        for t, a in enumerate(seq):
            p *= probs[t, a]
        total += p
    return -math.log(total) if total > 0 else math.inf


# ----------------------------------------------------- random lyric material

_ONSETS = ["B", "D", "F", "G", "K", "L", "M", "N", "P", "R", "S", "T", "V", "Z"]
_VOWELS = ["A", "E", "I", "O", "U"]


def random_song(seed: int, n_lines: int = 2, words_per_line: tuple[int, int] = (1, 3), max_phones: int = 3):
    """Pseudo-word lyrics and a matching dictionary.

    Returns ``(lyrics_text, dictionary_lines)``; every word is in the
    dictionary, so no out-of-vocabulary fallback happens.
    """
    rng = np.random.default_rng(seed)
    phonemes = list(ARPABET)
    entries: dict[str, list[str]] = {}
    lines = []
    for _ in range(n_lines):
        words = []
        for _ in range(int(rng.integers(words_per_line[0], words_per_line[1] + 1))):
            word = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(int(rng.integers(1, 3))))
            if word not in entries:
                n = int(rng.integers(1, max_phones + 1))
                entries[word] = [str(p) for p in rng.choice(phonemes, size=n)]
            words.append(word)
        lines.append(" ".join(words))
    text = "\n".join(lines) + "\n"
    dict_lines = [f"{w}  {' '.join(ph)}" for w, ph in sorted(entries.items())]
    return text, dict_lines


def default_plan_song(seed: int, insert_spaces: bool = True, **kwargs):
    """Convenience: random song parsed into ``(doc, plan, dictionary)``."""
    from .lexicon import build_plan, parse_lyrics

    text, dict_lines = random_song(seed, **kwargs)
    dictionary = PronouncingDictionary.from_lines(dict_lines)
    doc = parse_lyrics(text, dictionary)
    return doc, build_plan(doc, PhonemeSet.default(), insert_spaces), dictionary, text, dict_lines
