import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from halflib.ncalg import letter

settings.register_profile("halflib", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("halflib")


def sphere_words(N, max_len=6, min_len=0):
    lt = st.builds(letter, st.integers(1, N), st.booleans())
    return st.lists(lt, min_size=min_len, max_size=max_len).map(tuple)


def random_word(rng, N, length):
    return tuple(letter(int(rng.integers(1, N + 1)), bool(rng.integers(2))) for _ in range(length))


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
