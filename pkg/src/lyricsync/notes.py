"""Note events decoded from a pitch posteriorgram.

The decoder is a plain argmax run-length encoder: consecutive frames with
the same non-silent class form one note.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .gram import SILENCE, FrameClock, PitchLayout, Posteriorgram

DEFAULT_MIN_DUR = 0.05


@dataclass(frozen=True)
class NoteEvent:
    onset: float
    offset: float
    pitch: float  # MIDI note number

    @property
    def duration(self) -> float:
        return self.offset - self.onset


def frame_runs(classes) -> list[tuple[int, int, int]]:
    """``(class, start, stop)`` for each maximal run of equal values."""
    classes = np.asarray(classes)
    if classes.size == 0:
        return []
    change = np.flatnonzero(np.diff(classes)) + 1
    starts = np.concatenate([[0], change])
    stops = np.concatenate([change, [classes.size]])
    return [(int(classes[a]), int(a), int(b)) for a, b in zip(starts, stops)]


def decode_notes(
    gram: Posteriorgram,
    clock: FrameClock | None = None,
    min_dur: float = DEFAULT_MIN_DUR,
    layout: PitchLayout | None = None,
    merge_gap: float = 0.0,
) -> list[NoteEvent]:
    """Turn per-frame argmax pitch classes into note events.

    Same-pitch notes separated by a silence shorter than ``merge_gap``
    seconds are joined (off by default). Notes shorter than ``min_dur``
    are dropped afterwards.
    """
    clock = clock or gram.clock
    layout = layout or PitchLayout(gram.n_classes)
    best = np.argmax(gram.data, axis=1)

    runs = [(c, a, b) for c, a, b in frame_runs(best) if c != SILENCE]
    merged: list[list[int]] = []
    for c, a, b in runs:
        if merged and merged[-1][0] == c and clock.time(a - merged[-1][2]) < merge_gap:
            merged[-1][2] = b
        else:
            merged.append([c, a, b])

    notes = []
    for c, a, b in merged:
        onset, offset = clock.time(a), clock.time(b)
        # tolerate float error so an exactly min_dur-long note survives
        if offset - onset < min_dur - 1e-12:
            continue
        notes.append(NoteEvent(float(onset), float(offset), layout.midi(c)))
    return notes


def notes_to_json(notes: list[NoteEvent]) -> list[dict]:
    return [{"onset": n.onset, "offset": n.offset, "midi": n.pitch} for n in notes]


def notes_from_json(obj, source: str = "<notes>") -> list[NoteEvent]:
    if isinstance(obj, dict):
        obj = obj.get("notes")
    if not isinstance(obj, list):
        raise SchemaError(f"{source}: expected a list of notes")
    notes = []
    for i, item in enumerate(obj):
        try:
            note = NoteEvent(float(item["onset"]), float(item["offset"]), float(item["midi"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{source}: note {i}: {exc!r}") from None
        if note.offset <= note.onset:
            raise SchemaError(f"{source}: note {i}: offset must follow onset")
        notes.append(note)
    return notes


def load_notes(path: str | Path) -> list[NoteEvent]:
    with open(path) as fh:
        return notes_from_json(json.load(fh), str(path))
