"""CTC loss on a toy posteriorgram, checked against path enumeration.

For a handful of frames every blank-augmented symbol sequence can be
listed, so the negative log of their summed probability is an exact
reference for the forward-backward recursion. The gradient with respect
to the log-probabilities is minus the state occupancy, which we compare
with central finite differences. The last part combines the phoneme loss
with a pitch cross-entropy at several weights.
"""
import numpy as np

from lyricsync.gram import Posteriorgram, pool_phoneme, pool_pitch
from lyricsync.lexicon import PhonemePlan
from lyricsync.loss import LAMBDA_GRID, ctc_loss, pitch_ce, total_loss
from lyricsync.synth import SynthSpec, brute_force_ctc, synth_case

rng = np.random.default_rng(0)
n_frames, n_classes = 6, 4
gram = Posteriorgram(np.log(rng.dirichlet(np.ones(n_classes), size=n_frames)))
plan = PhonemePlan.from_labels([1, 2, 2])
print(f"labels {plan.labels}, states {len(plan)}, minimum frames {plan.min_frames()}")

loss, grad = ctc_loss(gram, plan)
print(f"forward-backward loss  {loss:.12f}")
print(f"enumerated paths loss  {brute_force_ctc(gram, plan):.12f}")

h = 1e-5
fd = np.zeros_like(grad)
for idx in np.ndindex(grad.shape):
    up, down = gram.data.copy(), gram.data.copy()
    up[idx] += h
    down[idx] -= h
    fd[idx] = (ctc_loss(Posteriorgram(up), plan)[0] - ctc_loss(Posteriorgram(down), plan)[0]) / (2 * h)
print(f"max |grad - finite difference| = {np.abs(grad - fd).max():.2e}")
print("each frame's gradient sums to -1 (one state is occupied per frame):")
print(np.round(grad.sum(axis=1), 12))

# multi-task total on a synthetic joint tensor
plan = PhonemePlan.from_labels([5, 9, 14, 9])
spec = SynthSpec(3, 60, plan, noise=1.0)
case = synth_case(spec)
phone_loss, _ = ctc_loss(pool_phoneme(case.joint_tensor), plan)
pitch_loss = pitch_ce(pool_pitch(case.joint_tensor), case.pitch_classes)
print(f"\nphone loss {phone_loss:.4f}, pitch loss {pitch_loss:.4f}")
for lam in (0.0,) + LAMBDA_GRID:
    print(f"  lambda {lam:3.1f}: total {total_loss(phone_loss, pitch_loss, lam).total:.4f}")
