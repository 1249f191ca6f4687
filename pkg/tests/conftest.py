import random

import pytest

from config import RANDOM_SEED
from utils.itinerary import ItinerarySeq, witness_sequence
from utils.tower_arith import Lit


@pytest.fixture
def rng():
    return random.Random(RANDOM_SEED)


@pytest.fixture
def canonical0():
    """The witness-tail point of X_0."""
    return witness_sequence(0)


@pytest.fixture
def late_entry():
    """|s_1| = 8 and zeros elsewhere; its escape height is exactly 1."""
    return ItinerarySeq({1: Lit(8)})
