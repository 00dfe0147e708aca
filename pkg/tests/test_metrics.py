import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyricsync.errors import DegenerateLabels, EmptyInput, LengthMismatch
from lyricsync.gram import FrameClock
from lyricsync.loss import boundary_targets
from lyricsync.metrics import (
    corpus_alignment,
    eval_alignment,
    eval_auc,
    eval_boundary,
    eval_notes,
    match_events,
    pick_boundaries,
    pitch_distance_cents,
)
from lyricsync.notes import NoteEvent


def pairwise_auc(x, y, threshold=0.5):
    pos = [a for a, b in zip(x, y) if b >= threshold]
    neg = [a for a, b in zip(x, y) if b < threshold]
    wins = 0.0
    for p in pos:
        for n in neg:
            wins += 1.0 if p > n else 0.5 if p == n else 0.0
    return wins / (len(pos) * len(neg))


class TestAlignment:
    def test_identity(self):
        ev = eval_alignment([0.5, 1.0, 3.0], [0.5, 1.0, 3.0])
        assert (ev.aae, ev.pco) == (0.0, 1.0)

    def test_worked_example(self):
        ev = eval_alignment([0.0, 1.0, 2.0], [0.1, 1.5, 2.2])
        assert ev.aae == pytest.approx(0.8 / 3, abs=1e-12)
        assert ev.pco == pytest.approx(2 / 3)

    def test_song_level_average(self):
        short = eval_alignment([0.0], [0.2])
        long = eval_alignment([0.0] * 9, [0.4] * 9)
        corpus = corpus_alignment([short, long])
        assert corpus.aae == pytest.approx(0.3)
        assert corpus.pco == pytest.approx(0.5)

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            eval_alignment([0.0], [0.0, 1.0])
        with pytest.raises(EmptyInput):
            eval_alignment([], [])

    @given(
        st.lists(st.tuples(st.floats(0, 100), st.floats(-1, 1)), min_size=1, max_size=30),
        st.floats(-50, 50),
    )
    def test_shift_equivariance(self, pairs, c):
        ref = np.array([p[0] for p in pairs])
        est = ref + np.array([p[1] for p in pairs])
        a = eval_alignment(est, ref)
        b = eval_alignment(est + c, ref + c)
        assert b.aae == pytest.approx(a.aae, abs=1e-9)
        # allow for rounding right at the tolerance edge
        err = np.abs(est - ref)
        if not np.any(np.abs(err - 0.3) < 1e-9):
            assert b.pco == a.pco


class TestBoundary:
    def test_identity(self):
        ev = eval_boundary([1.0, 5.0, 9.0], [1.0, 5.0, 9.0])
        assert (ev.precision, ev.recall, ev.f_score) == (1.0, 1.0, 1.0)

    def test_worked_example(self):
        ev = eval_boundary([1.0], [1.4, 9.0])
        assert ev.precision == 1.0
        assert ev.recall == 0.5
        assert ev.f_score == pytest.approx(2 / 3)

    def test_empty(self):
        ev = eval_boundary([], [1.0])
        assert (ev.precision, ev.recall, ev.f_score) == (0.0, 0.0, 0.0)
        assert ev.empty

    def test_one_to_one(self):
        # two estimates near a single reference count once
        ev = eval_boundary([1.0, 1.1], [1.05])
        assert ev.recall == 1.0 and ev.precision == 0.5

    def test_greedy_takes_nearest(self):
        assert match_events([1.0, 1.6], [1.5, 0.9], 0.5) == [(0, 1), (1, 0)]

    @given(
        st.lists(st.floats(0, 20), max_size=15),
        st.lists(st.floats(0, 20), max_size=15),
        st.floats(0.01, 2),
    )
    def test_no_double_counting(self, est, ref, window):
        pairs = match_events(sorted(est), sorted(ref), window)
        assert len({i for i, _ in pairs}) == len(pairs)
        assert len({j for _, j in pairs}) == len(pairs)
        assert len(pairs) <= min(len(est), len(ref))

    def test_pick_boundaries(self):
        clock = FrameClock(100, 1)
        curve = boundary_targets([0.4, 0.5, 2.0], clock, 300)
        assert pick_boundaries(curve, clock) == pytest.approx([0.4, 0.5, 2.0])


class TestAUC:
    def test_separated(self):
        assert eval_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_constant(self):
        assert eval_auc(np.full(10, 0.3), [0, 1] * 5) == 0.5

    def test_degenerate(self):
        with pytest.raises(DegenerateLabels):
            eval_auc([0.1, 0.2], [1.0, 0.9])

    @pytest.mark.parametrize("seed", range(20))
    def test_pairwise_oracle(self, seed):
        rng = np.random.default_rng(seed)
        x = np.round(rng.random(20), 1)  # coarse values force ties
        y = rng.random(20)
        y[:2] = [0.9, 0.1]
        assert eval_auc(x, y) == pairwise_auc(x.tolist(), y.tolist())


class TestNotes:
    ref = [NoteEvent(0.0, 1.0, 60), NoteEvent(1.2, 1.7, 64), NoteEvent(2.0, 2.3, 67)]

    def test_identity(self):
        ev = eval_notes(self.ref, self.ref)
        assert (ev.con, ev.conp, ev.conpoff) == (1.0, 1.0, 1.0)

    def test_octave_wrap(self):
        ev = eval_notes([NoteEvent(0.0, 1.0, 72)], [NoteEvent(0.0, 1.0, 60)])
        assert (ev.con, ev.conp, ev.conpoff) == (1.0, 1.0, 1.0)
        plain = eval_notes([NoteEvent(0.0, 1.0, 72)], [NoteEvent(0.0, 1.0, 60)], octave_wrap=False)
        assert (plain.con, plain.conp) == (1.0, 0.0)

    def test_offset_tolerance(self):
        long_hit = eval_notes([NoteEvent(0.0, 1.15, 60)], [NoteEvent(0.0, 1.0, 60)])
        assert long_hit.conpoff == 1.0
        short_miss = eval_notes([NoteEvent(0.0, 0.65, 60)], [NoteEvent(0.0, 0.5, 60)])
        assert short_miss.conp == 1.0
        assert short_miss.conpoff == 0.0

    def test_onset_tolerance(self):
        ev = eval_notes([NoteEvent(0.04, 1.0, 60)], [NoteEvent(0.0, 1.0, 60)])
        assert ev.con == 1.0
        ev = eval_notes([NoteEvent(0.06, 1.0, 60)], [NoteEvent(0.0, 1.0, 60)])
        assert ev.con == 0.0

    def test_cent_distance(self):
        assert pitch_distance_cents(60.4, 60) == pytest.approx(40)
        assert pitch_distance_cents(71.6, 60) == pytest.approx(40)
        assert pitch_distance_cents(66, 60) == pytest.approx(600)

    def test_empty(self):
        assert eval_notes([], self.ref).con == 0.0

    @pytest.mark.parametrize("seed", range(30))
    def test_ordering(self, seed):
        rng = np.random.default_rng(seed)

        def notes(n):
            on = np.sort(rng.uniform(0, 3, n))
            return [NoteEvent(a, a + rng.uniform(0.05, 0.6), int(rng.integers(58, 62))) for a in on]

        ref = notes(int(rng.integers(1, 12)))
        est = [NoteEvent(n.onset + rng.normal(0, 0.03), n.offset + rng.normal(0, 0.1), n.pitch + int(rng.integers(-1, 2)))
               for n in ref if rng.random() < 0.8]
        est = [n for n in est if n.offset > n.onset] + notes(int(rng.integers(0, 4)))
        if not est:
            return
        ev = eval_notes(est, ref)
        assert ev.conpoff <= ev.conp <= ev.con
