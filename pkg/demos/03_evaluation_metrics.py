"""The evaluation metrics on small hand-made cases.

Alignment error is averaged per song and then across songs. Boundary
detection is scored with one-to-one matching inside a tolerance window,
and by ROC AUC of the raw activation curve. Notes are scored on onset,
onset plus pitch, and onset plus pitch plus offset.
"""
import numpy as np

from lyricsync.gram import FrameClock
from lyricsync.loss import boundary_targets
from lyricsync.metrics import corpus_alignment, eval_alignment, eval_auc, eval_boundary, eval_notes, pick_boundaries
from lyricsync.notes import NoteEvent

print("word onsets")
ev = eval_alignment([0.0, 1.0, 2.0], [0.1, 1.5, 2.2])
print(f"  est [0.0 1.0 2.0] vs ref [0.1 1.5 2.2]: AAE {ev.aae:.4f} s, PCO {ev.pco:.3f}")
short = eval_alignment([0.0], [0.2])
long = eval_alignment([0.0] * 9, [0.4] * 9)
corpus = corpus_alignment([short, long])
print(f"  a 1-word song and a 9-word song weigh the same: corpus AAE {corpus.aae:.2f}")

print("\nline boundaries")
ev = eval_boundary([1.0], [1.4, 9.0])
print(f"  one estimate near the first of two references: P {ev.precision} R {ev.recall} F {ev.f_score:.3f}")
clock = FrameClock(100, 1)
target = boundary_targets([1.0, 3.0], clock, 500)
rng = np.random.default_rng(0)
noisy = np.clip(target.values + rng.normal(0, 0.15, 500), 0, 1)
print(f"  AUC of a noisy copy of the target curve: {eval_auc(noisy, target):.3f}")
print(f"  AUC of a flat curve: {eval_auc(np.full(500, 0.5), target):.3f}")
print(f"  peaks picked from the clean target: {pick_boundaries(target, clock)}")

print("\nnotes")
ref = [NoteEvent(0.0, 0.5, 60), NoteEvent(0.6, 1.6, 62), NoteEvent(2.0, 2.4, 64)]
est = [NoteEvent(0.02, 0.65, 60), NoteEvent(0.6, 1.75, 74), NoteEvent(2.3, 2.6, 64)]
for wrap in (True, False):
    ev = eval_notes(est, ref, octave_wrap=wrap)
    print(f"  octave wrap {wrap!s:5s}: COn {ev.con:.3f}  COnP {ev.conp:.3f}  COnPOff {ev.conpoff:.3f}")
