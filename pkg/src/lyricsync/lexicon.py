"""Lyrics tokenization, pronouncing-dictionary lookup and alignment targets.

The phoneme inventory is the 39-symbol ARPAbet set of the CMU pronouncing
dictionary, extended with a word separator (space) and the CTC blank.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyLyrics, UnmappablePhoneme

logger = logging.getLogger(__name__)

ARPABET = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH",
    "EH", "ER", "EY", "F", "G", "HH", "IH", "IY", "JH", "K",
    "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH",
    "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH",
)

BLANK_SYMBOL = "<eps>"
SPACE_SYMBOL = "<sp>"

# Spelled-out pronunciations used for out-of-vocabulary words.
LETTER_NAMES = {
    "A": "EY", "B": "B IY", "C": "S IY", "D": "D IY", "E": "IY",
    "F": "EH F", "G": "JH IY", "H": "EY CH", "I": "AY", "J": "JH EY",
    "K": "K EY", "L": "EH L", "M": "EH M", "N": "EH N", "O": "OW",
    "P": "P IY", "Q": "K Y UW", "R": "AA R", "S": "EH S", "T": "T IY",
    "U": "Y UW", "V": "V IY", "W": "D AH B AH L Y UW", "X": "EH K S",
    "Y": "W AY", "Z": "Z IY",
    "0": "Z IH R OW", "1": "W AH N", "2": "T UW", "3": "TH R IY",
    "4": "F AO R", "5": "F AY V", "6": "S IH K S", "7": "S EH V AH N",
    "8": "EY T", "9": "N AY N",
}

_STRESS = re.compile(r"[012]$")
_VARIANT = re.compile(r"\(\d+\)$")


@dataclass(frozen=True)
class PhonemeSet:
    """Ordered class inventory of the phoneme posteriorgram."""

    symbols: tuple[str, ...]
    blank_index: int
    space_index: int

    def __post_init__(self):
        n = len(self.symbols)
        if len(set(self.symbols)) != n:
            raise ValueError("phoneme symbols must be unique")
        for idx in (self.blank_index, self.space_index):
            if not 0 <= idx < n:
                raise ValueError(f"index {idx} out of range for {n} symbols")
        if self.blank_index == self.space_index:
            raise ValueError("blank and space must be distinct classes")

    @classmethod
    def default(cls) -> "PhonemeSet":
        """Blank at 0, the 39 ARPAbet phonemes at 1..39, space at 40."""
        return cls((BLANK_SYMBOL,) + ARPABET + (SPACE_SYMBOL,), 0, len(ARPABET) + 1)

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._lookup[symbol]
        except KeyError:
            raise UnmappablePhoneme(f"unknown phoneme symbol {symbol!r}") from None

    @property
    def _lookup(self) -> dict[str, int]:
        # frozen dataclass: cache on the instance dict directly
        cache = self.__dict__.get("_cache")
        if cache is None:
            cache = {s: i for i, s in enumerate(self.symbols)}
            object.__setattr__(self, "_cache", cache)
        return cache

    def is_phoneme(self, index: int) -> bool:
        return 0 <= index < len(self.symbols) and index not in (self.blank_index, self.space_index)


@dataclass
class Word:
    text: str
    line_idx: int
    word_idx: int
    phonemes: list[int] = field(default_factory=list)
    oov: bool = False


@dataclass
class LyricsDoc:
    lines: list[list[Word]]

    @property
    def words(self) -> list[Word]:
        return [w for line in self.lines for w in line]

    @property
    def oov_words(self) -> list[str]:
        return [w.text for w in self.words if w.oov]


class PronouncingDictionary:
    """CMU-format pronouncing dictionary restricted to the first variant.

    Words missing from the dictionary are spelled letter by letter and
    remembered in ``oov``.
    """

    def __init__(self, entries: dict[str, tuple[str, ...]], phoneme_set: PhonemeSet | None = None):
        self.phoneme_set = phoneme_set or PhonemeSet.default()
        self.entries = entries
        self.oov: set[str] = set()

    @classmethod
    def from_lines(cls, lines: Iterable[str], phoneme_set: PhonemeSet | None = None):
        pset = phoneme_set or PhonemeSet.default()
        entries: dict[str, tuple[str, ...]] = {}
        for lineno, raw in enumerate(lines, 1):
            line = raw.strip()
            if not line or line.startswith(";;;"):
                continue
            parts = line.split()
            head = parts[0].upper()
            if _VARIANT.search(head):
                # alternative pronunciations, e.g. "READ(1)", are ignored
                continue
            if head in entries:
                continue
            phones = tuple(_STRESS.sub("", p.upper()) for p in parts[1:])
            for ph in phones:
                if ph not in ARPABET:
                    raise UnmappablePhoneme(f"line {lineno}: {head} uses {ph!r} outside the 39-symbol set")
            entries[head] = phones
        return cls(entries, pset)

    @classmethod
    def load(cls, path: str | Path, phoneme_set: PhonemeSet | None = None):
        # cmudict ships as latin-1
        with open(path, encoding="latin-1") as fh:
            return cls.from_lines(fh, phoneme_set)

    def __contains__(self, word: str) -> bool:
        return word.upper() in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def spell_out(word: str) -> list[str]:
    phones: list[str] = []
    for ch in word.upper():
        phones.extend(LETTER_NAMES.get(ch, "").split())
    return phones


def lookup_word(word: str, dictionary: PronouncingDictionary) -> list[int]:
    """Return phoneme indices for ``word`` (first pronunciation variant).

    Unknown words fall back to a letter-by-letter spelling; they are added
    to ``dictionary.oov`` and logged.
    """
    key = word.upper()
    phones = dictionary.entries.get(key)
    if phones is None:
        phones = tuple(spell_out(key))
        dictionary.oov.add(key)
        logger.warning("out-of-vocabulary word %r spelled as %s", key, " ".join(phones))
    pset = dictionary.phoneme_set
    return [pset.index(p) for p in phones]


def normalize_token(token: str) -> str:
    kept = "".join(ch for ch in token if ch.isalnum() or ch == "'")
    if not any(ch.isalnum() for ch in kept):
        return ""
    return kept.upper()


def parse_lyrics(text: str, dictionary: PronouncingDictionary | None = None) -> LyricsDoc:
    """Split lyrics into lines and upper-cased words.

    Punctuation other than apostrophes is removed and empty lines are
    dropped. If ``dictionary`` is given, every word gets its phonemes.
    """
    lines: list[list[Word]] = []
    word_idx = 0
    for raw in text.splitlines():
        tokens = [normalize_token(t) for t in raw.split()]
        tokens = [t for t in tokens if t]
        if not tokens:
            continue
        line_idx = len(lines)
        line = []
        for tok in tokens:
            line.append(Word(tok, line_idx, word_idx))
            word_idx += 1
        lines.append(line)
    if not lines:
        raise EmptyLyrics("no word survives normalization")
    doc = LyricsDoc(lines)
    if dictionary is not None:
        attach_phonemes(doc, dictionary)
    return doc


def attach_phonemes(doc: LyricsDoc, dictionary: PronouncingDictionary) -> LyricsDoc:
    for word in doc.words:
        word.oov = word.text not in dictionary
        word.phonemes = lookup_word(word.text, dictionary)
        if not word.phonemes:
            raise UnmappablePhoneme(f"word {word.text!r} yields no phonemes")
    return doc


BLANK, PHONEME, SPACE = "blank", "phoneme", "space"


@dataclass(frozen=True)
class PlanState:
    class_index: int
    kind: str
    word_idx: int | None = None
    is_line_start: bool = False


@dataclass(frozen=True)
class PhonemePlan:
    """Blank-expanded target sequence ``eps l1 eps l2 ... eps ln eps``."""

    states: tuple[PlanState, ...]

    def __len__(self) -> int:
        return len(self.states)

    @property
    def classes(self) -> list[int]:
        return [s.class_index for s in self.states]

    @property
    def labels(self) -> list[int]:
        """The emitted (non-blank) tokens, spaces included."""
        return [s.class_index for s in self.states[1::2]]

    @property
    def blank_index(self) -> int:
        return self.states[0].class_index

    @property
    def line_start_states(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if s.is_line_start]

    @property
    def n_words(self) -> int:
        idx = [s.word_idx for s in self.states if s.word_idx is not None]
        return max(idx) + 1 if idx else 0

    def word_states(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, s in enumerate(self.states):
            if s.word_idx is not None:
                out.setdefault(s.word_idx, []).append(i)
        return out

    def min_frames(self) -> int:
        """Fewest frames that can emit the whole plan under CTC topology."""
        labels = self.labels
        repeats = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
        return len(labels) + repeats

    @classmethod
    def from_labels(cls, labels: Sequence[int], blank: int = 0) -> "PhonemePlan":
        """Single-word, single-line plan over arbitrary class labels."""
        states = [PlanState(blank, BLANK)]
        for i, c in enumerate(labels):
            if c == blank:
                raise ValueError("labels must not contain the blank class")
            states.append(PlanState(int(c), PHONEME, 0, i == 0))
            states.append(PlanState(blank, BLANK))
        return cls(tuple(states))

    def to_dict(self) -> dict:
        return {
            "states": [
                {"class": s.class_index, "kind": s.kind, "word": s.word_idx, "line_start": s.is_line_start}
                for s in self.states
            ]
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PhonemePlan":
        return cls(tuple(
            PlanState(int(s["class"]), s["kind"], s.get("word"), bool(s.get("line_start", False)))
            for s in obj["states"]
        ))


def build_plan(doc: LyricsDoc, phoneme_set: PhonemeSet | None = None, insert_spaces: bool = True) -> PhonemePlan:
    """Expand the word phonemes of ``doc`` into the CTC state sequence.

    With ``insert_spaces`` a space token separates consecutive words,
    including across line breaks. The first phoneme state of each line is
    flagged as a line start.
    """
    pset = phoneme_set or PhonemeSet.default()
    if not doc.lines:
        raise EmptyLyrics("empty document")
    tokens: list[PlanState] = []
    first = True
    for line in doc.lines:
        for j, word in enumerate(line):
            if insert_spaces and not first:
                tokens.append(PlanState(pset.space_index, SPACE))
            first = False
            for k, ph in enumerate(word.phonemes):
                if not pset.is_phoneme(ph):
                    raise UnmappablePhoneme(f"class {ph} is not an emitting phoneme")
                tokens.append(PlanState(ph, PHONEME, word.word_idx, j == 0 and k == 0))
    blank = PlanState(pset.blank_index, BLANK)
    states = [blank]
    for tok in tokens:
        states.append(tok)
        states.append(blank)
    return PhonemePlan(tuple(states))


def window_samples(
    words: Sequence[tuple[float, float]], window: float = 5.6, hop: float = 2.8
) -> list[tuple[float, list[int]]]:
    """Sliding-window training samples over word timings.

    A word belongs to a window when it lies entirely inside it. Windows
    start at ``k * hop`` for k = 0, 1, ... while the start does not exceed
    the end of the last word.
    """
    if window <= 0 or hop <= 0:
        raise ValueError("window and hop must be positive")
    if not words:
        return []
    last_end = max(end for _, end in words)
    n_windows = math.floor(last_end / hop) + 1
    out = []
    for k in range(n_windows):
        start = k * hop
        stop = start + window
        covered = [i for i, (s, e) in enumerate(words) if s >= start and e <= stop]
        out.append((start, covered))
    return out
