"""Hypothesis strategies shared by the property tests."""

from __future__ import annotations

from hypothesis import strategies as st

from belief_arena.generate import Profile, generate_random_game

small_profiles = st.builds(
    Profile,
    states=st.integers(1, 4), targets=st.integers(0, 2),
    actions1=st.integers(1, 2), actions2=st.integers(1, 2),
    signals1=st.integers(1, 3), signals2=st.integers(1, 3),
    max_outcomes=st.integers(1, 4))

games = st.builds(generate_random_game, small_profiles, st.integers(0, 2**32 - 1))
