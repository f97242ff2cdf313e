from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from sgsolve.models import mixed_loop
from sgsolve.generate import GenConfig, corpus, generate_random_game
from sgsolve.oracle import enumerate_solve

settings.register_profile(
    "sgsolve", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("sgsolve")


@lru_cache(maxsize=None)
def corpus_games():
    return tuple(corpus(200))


@lru_cache(maxsize=None)
def corpus_oracle():
    return tuple(enumerate_solve(g) for g in corpus_games())


@pytest.fixture(scope="session")
def games():
    return corpus_games()


@pytest.fixture(scope="session")
def oracles():
    return corpus_oracle()


def random_games(max_states=8, dyadic=True, max_actions=2):
    """Hypothesis strategy: a seeded generator draw."""
    return st.builds(
        lambda n, seed, back: generate_random_game(
            GenConfig(n_states=n, dyadic=dyadic, back_edge=back, max_actions=max_actions), seed
        ),
        st.integers(3, max_states),
        st.integers(0, 2**32 - 1),
        st.sampled_from([0.0, 0.3, 0.6, 0.9]),
    )


def two_state_loop():
    return mixed_loop()
