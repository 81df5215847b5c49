import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest

from touchauth.synthetic import synthetic_corpus


@pytest.fixture(scope="session")
def small_corpus():
    """Six well-separated users, three week-1 sessions and one week-2 session each."""
    return synthetic_corpus(n_users=6, separation=6.0, seed=2, strokes_per_session=80)
