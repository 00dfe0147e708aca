"""Joint phoneme-pitch tensors, posteriorgrams and their file formats.

Binary layout (all little-endian)::

    b"PGR1"                      magic + format version
    u8 rank, u8 kind, u16 0      header
    u32 * rank                   dims
    f64 sample_rate, hop, decimation
    f32 * prod(dims)             row-major payload

``kind`` is 0 for a joint tensor (logits) and 1/2/3 for phoneme, pitch and
boundary posteriorgrams (log-probabilities).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import log_softmax

from .errors import BadMagic, ShapeMismatch, UnsupportedVersion

MAGIC = b"PGR1"
KINDS = {"joint": 0, "phoneme": 1, "pitch": 2, "boundary": 3}
KIND_NAMES = {v: k for k, v in KINDS.items()}

SILENCE = 0
LOWEST_MIDI = 38  # D2


@dataclass(frozen=True)
class FrameClock:
    sample_rate: float = 22050.0
    hop: float = 256.0
    decimation: float = 1.0

    def __post_init__(self):
        if self.sample_rate <= 0 or self.hop <= 0 or self.decimation < 1:
            raise ValueError(f"invalid frame clock {self}")

    @property
    def period(self) -> float:
        return self.hop * self.decimation / self.sample_rate

    def time(self, frame):
        """Start time in seconds of ``frame`` (scalar or array)."""
        return frame * self.period

    def frame(self, seconds: float) -> int:
        """Index of the frame whose start is nearest to ``seconds``."""
        return int(np.floor(seconds / self.period + 0.5))

    def to_dict(self) -> dict:
        return {"sample_rate": self.sample_rate, "hop": self.hop, "decimation": self.decimation}


@dataclass(frozen=True)
class PitchLayout:
    """Pitch class inventory: class 0 is silence, then ascending semitones from D2.

    The default 47 classes cover D2..B5; ``n_classes=48`` includes C6.
    """

    n_classes: int = 47
    lowest_midi: int = LOWEST_MIDI

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need silence plus at least one pitch")

    def midi(self, cls: int) -> int | None:
        if cls == SILENCE:
            return None
        if not 0 < cls < self.n_classes:
            raise ValueError(f"pitch class {cls} out of range")
        return self.lowest_midi + cls - 1

    def class_of(self, midi: int) -> int:
        cls = int(midi) - self.lowest_midi + 1
        if not 0 < cls < self.n_classes:
            raise ValueError(f"MIDI {midi} outside pitch range")
        return cls

    @property
    def highest_midi(self) -> int:
        return self.lowest_midi + self.n_classes - 2


@dataclass
class JointTensor:
    """Frame x phoneme x pitch logits."""

    data: np.ndarray
    clock: FrameClock = field(default_factory=FrameClock)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[0] < 1:
            raise ShapeMismatch(f"joint tensor must be T x N_phone x N_pitch, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("joint tensor contains non-finite entries")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]


@dataclass
class Posteriorgram:
    """Frame x class log-probabilities."""

    data: np.ndarray
    kind: str = "phoneme"
    clock: FrameClock = field(default_factory=FrameClock)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.kind not in ("phoneme", "pitch", "boundary"):
            raise ValueError(f"unknown posteriorgram kind {self.kind!r}")
        if self.data.ndim == 1 and self.kind == "boundary":
            self.data = self.data[:, None]
        if self.data.ndim != 2:
            raise ShapeMismatch(f"posteriorgram must be 2-D, got {self.data.shape}")
        if self.kind == "boundary" and self.data.shape[1] != 1:
            raise ShapeMismatch("boundary posteriorgram must have a single class")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_classes(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_probs(cls, probs, kind="boundary", clock=None, floor=1e-7):
        """Wrap probabilities, clamping at ``floor`` before taking logs."""
        p = np.clip(np.asarray(probs, dtype=np.float64), floor, 1.0)
        return cls(np.log(p), kind, clock or FrameClock())

    def normalization_error(self) -> float:
        """Largest per-frame deviation of logsumexp from 0."""
        from scipy.special import logsumexp

        return float(np.max(np.abs(logsumexp(self.data, axis=1))))


def pool_phoneme(tensor: JointTensor) -> Posteriorgram:
    """Average the logits over pitch, then log-softmax over phonemes."""
    return Posteriorgram(log_softmax(tensor.data.mean(axis=2), axis=1), "phoneme", tensor.clock)


def pool_pitch(tensor: JointTensor) -> Posteriorgram:
    """Average the logits over phonemes, then log-softmax over pitch classes."""
    return Posteriorgram(log_softmax(tensor.data.mean(axis=1), axis=1), "pitch", tensor.clock)


def write_gram(value: JointTensor | Posteriorgram, path: str | Path) -> None:
    if isinstance(value, JointTensor):
        kind = KINDS["joint"]
    else:
        kind = KINDS[value.kind]
    data = np.ascontiguousarray(value.data, dtype="<f4")
    clock = value.clock
    header = MAGIC + struct.pack("<BBH", data.ndim, kind, 0)
    header += struct.pack(f"<{data.ndim}I", *data.shape)
    header += struct.pack("<3d", clock.sample_rate, clock.hop, clock.decimation)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes(order="C"))


def read_gram(path: str | Path) -> JointTensor | Posteriorgram:
    with open(path, "rb") as fh:
        blob = fh.read()
    return decode_gram(blob)


def decode_gram(blob: bytes) -> JointTensor | Posteriorgram:
    if len(blob) < 8:
        raise BadMagic("file too short for a gram header")
    magic = blob[:4]
    if magic != MAGIC:
        if magic[:3] == MAGIC[:3]:
            raise UnsupportedVersion(f"gram format version {magic[3:4]!r} not supported")
        raise BadMagic(f"bad magic {magic!r}")
    rank, kind, _ = struct.unpack_from("<BBH", blob, 4)
    if kind not in KIND_NAMES:
        raise UnsupportedVersion(f"unknown kind tag {kind}")
    expected_rank = 3 if kind == KINDS["joint"] else 2
    if rank != expected_rank:
        raise ShapeMismatch(f"kind {KIND_NAMES[kind]} requires rank {expected_rank}, got {rank}")
    offset = 8
    if len(blob) < offset + 4 * rank + 24:
        raise ShapeMismatch("truncated header")
    dims = struct.unpack_from(f"<{rank}I", blob, offset)
    offset += 4 * rank
    sample_rate, hop, decimation = struct.unpack_from("<3d", blob, offset)
    offset += 24
    payload = blob[offset:]
    n = int(np.prod(dims, dtype=np.int64))
    if len(payload) != 4 * n:
        raise ShapeMismatch(f"payload has {len(payload) // 4} floats, dims {dims} need {n}")
    data = np.frombuffer(payload, dtype="<f4").reshape(dims)
    clock = FrameClock(sample_rate, hop, decimation)
    if kind == KINDS["joint"]:
        return JointTensor(data, clock)
    return Posteriorgram(data, KIND_NAMES[kind], clock)


def gram_to_json(value: JointTensor | Posteriorgram) -> dict:
    kind = "joint" if isinstance(value, JointTensor) else value.kind
    return {
        "dims": list(value.data.shape),
        "kind": kind,
        "clock": value.clock.to_dict(),
        "data": value.data.ravel().tolist(),
    }


def gram_from_json(obj: dict) -> JointTensor | Posteriorgram:
    dims = tuple(obj["dims"])
    data = np.asarray(obj["data"], dtype=np.float64)
    if data.size != int(np.prod(dims)):
        raise ShapeMismatch(f"{data.size} values do not fill dims {dims}")
    data = data.reshape(dims)
    clock = FrameClock(**obj.get("clock", {}))
    if obj["kind"] == "joint":
        return JointTensor(data, clock)
    return Posteriorgram(data, obj["kind"], clock)


def load_json_gram(path: str | Path):
    with open(path) as fh:
        return gram_from_json(json.load(fh))
