"""Seeded random games for the cross-validation corpus."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .game import Game, make_game
from .graph import can_reach


@dataclass(frozen=True)
class GenConfig:
    n_states: int = 6  # including one target and one sink
    max_actions: int = 2
    max_successors: int = 3
    dyadic: bool = True
    max_bits: int = 3
    back_edge: float = 0.6


def _split(rng: random.Random, total: int, parts: int) -> list[int]:
    cuts = sorted(rng.sample(range(1, total), parts - 1))
    return [b - a for a, b in zip([0] + cuts, cuts + [total])]


def generate_random_game(config: GenConfig, seed: int) -> Game:
    """Random game over ``s0..s{k-1}`` plus target ``t`` and sink ``z``.

    Successors are drawn forward (higher index or absorbing) except with
    probability ``back_edge``, where any non-absorbing state may be chosen;
    back edges are what create end components.  A repair pass rewires the
    first successor of the first action of any state that cannot reach the
    target or the sink.
    """
    if config.n_states < 3:
        raise ValueError("need at least one non-absorbing state plus target and sink")
    rng = random.Random(seed)
    k = config.n_states - 2
    names = [f"s{i}" for i in range(k)]
    owners = [rng.choice(("max", "min")) for _ in range(k)]
    dists: list[list[dict[str, Fraction]]] = []
    for i in range(k):
        acts = []
        for _ in range(rng.randint(1, config.max_actions)):
            n_succ = rng.randint(1, config.max_successors)
            succ: list[str] = []
            for _ in range(n_succ):
                if rng.random() < config.back_edge:
                    pool = names
                else:
                    pool = names[i + 1:] + ["t", "z"]
                cand = rng.choice(pool)
                if cand not in succ:
                    succ.append(cand)
            if config.dyadic:
                bits = rng.randint(1, config.max_bits)
                while 2**bits < len(succ):
                    bits += 1
                denom = 2**bits
            else:
                denom = rng.randint(max(2, len(succ)), 7)
            if len(succ) == 1:
                weights = [denom]
            else:
                weights = _split(rng, denom, len(succ))
            acts.append({t: Fraction(w, denom) for t, w in zip(succ, weights)})
        dists.append(acts)

    while True:
        game = _assemble(names, owners, dists)
        ok = can_reach(game, game.absorbing)
        bad = [i for i in range(k) if i not in ok]
        if not bad:
            return game
        i = bad[0]
        first = dists[i][0]
        victim = sorted(first)[0]
        repl = rng.choice(("t", "z"))
        p = first.pop(victim)
        first[repl] = first.get(repl, Fraction(0)) + p


def _assemble(names, owners, dists) -> Game:
    states = [(n, o) for n, o in zip(names, owners)] + [("t", "target"), ("z", "sink")]
    trans = {}
    for n, acts in zip(names, dists):
        for j, d in enumerate(acts):
            trans[(n, f"a{j}")] = dict(d)
    return make_game(states, trans, names[0])


def corpus(count: int = 200, seed: int = 2024, max_states: int = 8, dyadic: bool = True, back_edge: float = 0.6) -> list[Game]:
    """The fixed cross-validation corpus: sizes cycle through 3..max_states."""
    games = []
    for i in range(count):
        n = 3 + i % (max_states - 2)
        games.append(generate_random_game(GenConfig(n_states=n, dyadic=dyadic, back_edge=back_edge), seed * 100_003 + i))
    return games
