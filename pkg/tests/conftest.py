from pathlib import Path

import numpy as np
import pytest

from lyricsync.gram import Posteriorgram
from lyricsync.lexicon import PhonemePlan, PhonemeSet, PronouncingDictionary

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def cmudict():
    return PronouncingDictionary.load(FIXTURES / "mini_cmudict.txt")


@pytest.fixture
def pset():
    return PhonemeSet.default()


def random_gram(rng, n_frames, n_classes, kind="phoneme"):
    return Posteriorgram(np.log(rng.dirichlet(np.ones(n_classes), size=n_frames)), kind)


def random_instance(rng, max_frames=6, max_labels=3, max_classes=4):
    """Feasible (gram, plan) pair with class 0 as blank."""
    while True:
        n_classes = int(rng.integers(2, max_classes + 1))
        n_labels = int(rng.integers(1, max_labels + 1))
        labels = rng.integers(1, n_classes, size=n_labels)
        plan = PhonemePlan.from_labels(labels)
        n_frames = int(rng.integers(1, max_frames + 1))
        if n_frames >= plan.min_frames():
            return random_gram(rng, n_frames, n_classes), plan


def multiline_plan(rng, n_classes, max_states=7):
    """Plan with one word per line so line-start bonuses are exercised."""
    from lyricsync.lexicon import BLANK, PHONEME, PlanState

    n_labels = int(rng.integers(1, (max_states - 1) // 2 + 1))
    states = [PlanState(0, BLANK)]
    for i in range(n_labels):
        c = int(rng.integers(1, n_classes))
        states.append(PlanState(c, PHONEME, i, True))
        states.append(PlanState(0, BLANK))
    return PhonemePlan(tuple(states))


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
