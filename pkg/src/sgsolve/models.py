"""Hand-built games used as fixtures and in the experiment scripts."""

from __future__ import annotations

from fractions import Fraction as F

from .game import Game, make_game


def coin_game() -> Game:
    """One Maximizer state flipping a fair coin between target and sink."""
    return make_game(
        [("s0", "max"), ("t", "target"), ("z", "sink")],
        {("s0", "a"): {"t": F(1, 2), "z": F(1, 2)}},
        "s0",
    )


def bigmec(n: int) -> Game:
    """One target, one sink and a single Maximizer end component of 2n states.

    The component is a ring ``m0 -> m1 -> ... -> m{2n-1} -> m0`` of ``stay``
    actions.  Every ring state also has an ``exit`` action; the last one
    exits with 1/4 to the target, 3/8 to the sink and 3/8 back to ``m0``, all
    others with 1/4 to the target and 3/4 to the sink.  The initial state
    ``s0`` moves into the ring.  Walking the ring to the last exit is optimal
    and gives v = 1/4 + 3/8 v, i.e. every state has value 2/5.
    """
    if n < 1:
        raise ValueError("n must be positive")
    k = 2 * n
    ring = [f"m{i}" for i in range(k)]
    states = [("s0", "max")] + [(r, "max") for r in ring] + [("t", "target"), ("z", "sink")]
    trans = {("s0", "go"): {"m0": F(1)}}
    for i, r in enumerate(ring):
        trans[(r, "stay")] = {ring[(i + 1) % k]: F(1)}
        if i == k - 1:
            trans[(r, "exit")] = {"t": F(1, 4), "z": F(3, 8), "m0": F(3, 8)}
        else:
            trans[(r, "exit")] = {"t": F(1, 4), "z": F(3, 4)}
    return make_game(states, trans, "s0")


def mutual_mecs() -> Game:
    """Two end components that reach each other only through exiting actions.

    ``a0 <-> a1`` (Maximizer) and ``b0 <-> b1`` (mixed) are separate MECs;
    ``a1`` can leak into the b-component and ``b1`` back into the a-component,
    so neither can be solved before the other.
    """
    states = [
        ("a0", "max"), ("a1", "max"), ("b0", "min"), ("b1", "max"),
        ("t", "target"), ("z", "sink"),
    ]
    trans = {
        ("a0", "stay"): {"a1": F(1)},
        ("a0", "exit"): {"t": F(1, 4), "z": F(3, 4)},
        ("a1", "stay"): {"a0": F(1)},
        ("a1", "leak"): {"b0": F(1, 2), "z": F(1, 2)},
        ("b0", "stay"): {"b1": F(1)},
        ("b0", "exit"): {"t": F(2, 3), "z": F(1, 3)},
        ("b1", "stay"): {"b0": F(1)},
        ("b1", "leak"): {"a0": F(1, 2), "t": F(1, 2)},
    }
    return make_game(states, trans, "a0")


def mixed_loop() -> Game:
    """A Maximizer and a Minimizer state bouncing between each other, both able to leave."""
    return make_game(
        [("s1", "max"), ("s2", "min"), ("t", "target"), ("z", "sink")],
        {
            ("s1", "stay"): {"s2": F(1)},
            ("s1", "out"): {"t": F(1, 2), "z": F(1, 2)},
            ("s2", "back"): {"s1": F(1)},
            ("s2", "out"): {"t": F(1, 4), "z": F(3, 4)},
        },
        "s1",
    )


def lp_fixtures() -> dict:
    """Named (game, program variant) pairs whose LP export is pinned by golden files."""
    from .transforms import to_cnf

    return {
        "coin_improved": (coin_game(), "improved"),
        "coin_condon": (to_cnf(coin_game(), 5).game, "condon"),
        "bigmec1_improved": (bigmec(1), "improved"),
        "mixed_loop_improved": (mixed_loop(), "improved"),
        "mutual_improved": (mutual_mecs(), "improved"),
    }
