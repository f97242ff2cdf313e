from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgsolve.game import (
    Game, GameError, Kind, Owner, ParseError, Strategy, action_value, first_action_strategy,
    induce_mc, induce_mdp, is_chain, make_absorbing, make_game, parse_model, render_model,
)
from sgsolve.models import bigmec, coin_game
from sgsolve.graph import nontrivial_mecs

from conftest import random_games

COIN_TEXT = """sg
# fair coin
state s0 max
state t target
state z sink
init s0
action s0 a
trans s0 a t 1/2
trans s0 a z 0.5
"""


def test_parse_coin():
    g = parse_model(COIN_TEXT)
    assert g.n == 3
    s0, t = g.state_id("s0"), g.state_id("t")
    assert dict(g.dist(s0, "a"))[t] == F(1, 2)
    assert g.targets == {t}
    assert g.owners[s0] is Owner.MAX


def test_parse_rejects_short_distribution():
    text = COIN_TEXT.replace("0.5", "0.4")
    with pytest.raises(GameError, match="sums to 9/10"):
        parse_model(text)


def test_parse_error_has_line_number():
    with pytest.raises(ParseError) as exc:
        parse_model("sg\nstate a max\nfoo bar\n")
    assert exc.value.lineno == 3
    assert "line 3" in str(exc.value)


@pytest.mark.parametrize("text", [
    "state a max\n",
    "sg\nstate a wizard\n",
    "sg\nstate a max\nstate a min\n",
    "sg\nstate a max\nstate t target\ninit a\naction a x\ntrans a x t 3/0\n",
    "sg\nstate a max\nstate t target\ninit a\naction a x\ntrans a x q 1\n",
])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_model(text)


def test_bigmec_file_has_four_mec_states():
    g = parse_model(render_model(bigmec(2)))
    inner = nontrivial_mecs(g)
    assert len(inner) == 1
    assert len(inner[0].states) == 4
    assert all(g.owners[s] is Owner.MAX for s in inner[0].states)


def test_absorbing_states_get_self_loops():
    g = coin_game()
    for s in g.absorbing:
        assert g.delta[s] == (((s, F(1)),),)
        assert g.owners[s] is None


@pytest.mark.parametrize("bad", [
    dict(delta=(((1, F(1, 2)), (2, F(1, 2))), (((1, F(1)),),), (((2, F(1)),),))),
    dict(actions=(("a", "a"),) + coin_game().actions[1:]),
])
def test_game_invariants_checked(bad):
    g = coin_game()
    with pytest.raises(GameError):
        Game(**{**dict(names=g.names, owners=g.owners, kinds=g.kinds, initial=g.initial,
                       actions=g.actions, delta=g.delta), **bad})


def test_action_value_examples():
    g = coin_game()
    v = (F(0), F(1), F(0))
    assert action_value(g, v, 0, "a") == F(1, 2)
    g2 = make_game(
        [("s", "max"), ("x", "min"), ("y", "min"), ("t", "target"), ("z", "sink")],
        {("s", "a"): {"x": F(1, 3), "y": F(2, 3)}, ("s", "b"): {"t": 1},
         ("x", "a"): {"t": 1}, ("y", "a"): {"z": 1}},
        "s",
    )
    v = [F(0), F(3, 4), F(0), F(1), F(0)]
    assert action_value(g2, v, 0, "a") == F(1, 4)
    assert action_value(g2, v, 0, "b") == v[3]
    assert action_value(g2, np.array([float(x) for x in v]), 0, "a") == pytest.approx(0.25)


@given(random_games(), st.fractions(0, 1))
def test_action_value_linear(game, c):
    vals = [F(s * 7 % 5, 4) if s not in game.absorbing else F(0) for s in range(game.n)]
    vals = [min(x, F(1)) for x in vals]
    scaled = [c * x for x in vals]
    for s in range(game.n):
        for a in game.actions[s]:
            assert action_value(game, scaled, s, a) == c * action_value(game, vals, s, a)


@given(random_games(max_actions=3))
def test_render_parse_roundtrip(game):
    assert parse_model(render_model(game)) == game


def test_induce_mc_identity_on_chain():
    g = coin_game()
    sg, tau = first_action_strategy(g, Owner.MAX), first_action_strategy(g, Owner.MIN)
    assert induce_mc(g, sg, tau) == g


@given(random_games())
def test_induce_restricts_and_is_idempotent(game):
    sg = Strategy(Owner.MAX, {s: game.actions[s][-1] for s in game.states_of(Owner.MAX)})
    tau = first_action_strategy(game, Owner.MIN)
    mc = induce_mc(game, sg, tau)
    assert is_chain(mc)
    for s, a in sg.choice.items():
        assert mc.actions[s] == (a,)
    assert induce_mc(mc, sg, tau) == mc
    mdp = induce_mdp(game, sg)
    assert induce_mdp(mdp, sg) == mdp
    for s in game.states_of(Owner.MIN):
        assert mdp.actions[s] == game.actions[s]


def test_induce_mdp_identity_without_maximizer():
    g = make_game([("s", "min"), ("t", "target"), ("z", "sink")],
                  {("s", "a"): {"t": 1}, ("s", "b"): {"z": 1}}, "s")
    assert induce_mdp(g, Strategy(Owner.MAX, {})) == g


def test_strategy_domain_checked():
    g = coin_game()
    with pytest.raises(GameError):
        induce_mdp(g, Strategy(Owner.MAX, {}))
    with pytest.raises(GameError):
        induce_mdp(g, Strategy(Owner.MAX, {0: "nope"}))


def test_make_absorbing():
    g = make_absorbing(coin_game(), [0], Kind.TARGET)
    assert g.targets == {0, 1}
    assert g.owners[0] is None
