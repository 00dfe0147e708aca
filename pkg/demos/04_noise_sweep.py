"""How alignment error grows with posteriorgram noise.

Each level renders twenty synthetic songs, decodes them with the boundary
bonus switched on and off, and reports mean word-onset error. At zero
noise the decoder recovers the truth exactly. As the logit noise
approaches the class margin, errors start to appear. They land mostly on
words inside a line, which the boundary curve says nothing about, so the
bonus barely moves the average here.
"""
import math

import numpy as np

from lyricsync.align import BdrConfig, path_to_spans, viterbi_bdr
from lyricsync.gram import pool_phoneme
from lyricsync.metrics import eval_alignment
from lyricsync.synth import SynthSpec, default_plan_song, synth_case

SEEDS = range(20)

print(f"{'noise':>6} {'AAE alpha=0':>12} {'AAE alpha=0.8':>14}")
for noise in (0.0, 0.5, 1.0, 2.0, 3.0, 4.0):
    errors = {0.0: [], 0.8: []}
    for seed in SEEDS:
        doc, plan, *_ = default_plan_song(seed)
        spec = SynthSpec(seed, 1, plan, noise)
        spec.n_frames = math.ceil(1.5 * (2 * spec.min_run * len(plan.labels) + len(plan)))
        case = synth_case(spec)
        gram = pool_phoneme(case.joint_tensor)
        bdr = case.boundary_curve.to_posteriorgram()
        truth = [on for _, on, _ in case.true_word_spans]
        for alpha in errors:
            path = viterbi_bdr(gram, bdr, plan, BdrConfig(alpha))
            words, _ = path_to_spans(path, plan, gram.clock, doc.words)
            errors[alpha].append(eval_alignment([w.onset for w in words], truth).aae)
    print(f"{noise:6.1f} {np.mean(errors[0.0]):12.4f} {np.mean(errors[0.8]):14.4f}")
