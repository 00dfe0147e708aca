"""Align lyrics to a synthetic posteriorgram, with and without the boundary bonus.

A random two-line song is drawn together with a matching pronouncing
dictionary. The synthesizer picks a legal path through the blank-expanded
phoneme plan and renders a joint phoneme-by-pitch tensor around it. The
tensor is pooled into a phoneme posteriorgram, decoded with Viterbi, and the
word onsets are compared to the ground truth.

Run with ``python demos/01_align_synthetic_song.py [--noise 2.5]``.
"""
import argparse
import math

from lyricsync.align import BdrConfig, path_to_spans, to_lrc, viterbi, viterbi_bdr
from lyricsync.gram import pool_phoneme
from lyricsync.metrics import eval_alignment
from lyricsync.synth import SynthSpec, default_plan_song, synth_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--noise", type=float, default=2.5)
    args = ap.parse_args()

    doc, plan, _, text, _ = default_plan_song(args.seed, n_lines=3)
    print("lyrics:")
    print(text)
    print(f"plan: {len(plan)} states, {plan.n_words} words, needs at least {plan.min_frames()} frames")

    spec = SynthSpec(args.seed, 1, plan, noise=args.noise)
    spec.n_frames = math.ceil(1.5 * (2 * spec.min_run * len(plan.labels) + len(plan)))
    case = synth_case(spec)
    clock = case.joint_tensor.clock
    print(f"joint tensor: {case.joint_tensor.data.shape}, frame period {clock.period * 1000:.2f} ms")

    gram = pool_phoneme(case.joint_tensor)
    truth = [on for _, on, _ in case.true_word_spans]

    # plain Viterbi sees only the phoneme evidence
    plain = viterbi(gram, plan)
    words, _ = path_to_spans(plain, plan, clock, doc.words)
    ev = eval_alignment([w.onset for w in words], truth)
    print(f"\nviterbi           score {plain.score:9.2f}  AAE {ev.aae:.4f} s  PCO {ev.pco:.3f}")

    # the boundary curve rewards entering a line where a boundary is likely
    bdr = case.boundary_curve.to_posteriorgram()
    for mode in ("entry", "occupancy"):
        path = viterbi_bdr(gram, bdr, plan, BdrConfig(0.8, mode))
        words, lines = path_to_spans(path, plan, clock, doc.words)
        ev = eval_alignment([w.onset for w in words], truth)
        print(f"viterbi_bdr {mode:9s} score {path.score:9.2f}  AAE {ev.aae:.4f} s  PCO {ev.pco:.3f}")

    print("\nword timings (estimate vs truth):")
    for w, t in zip(words, truth):
        print(f"  {w.text:12s} {w.onset:6.3f}  {t:6.3f}")
    print("\nLRC:")
    print(to_lrc(lines), end="")


if __name__ == "__main__":
    main()
