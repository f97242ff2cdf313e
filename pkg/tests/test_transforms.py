import warnings
from fractions import Fraction as F

import pytest
from hypothesis import given

from sgsolve.game import GameError, Owner, induce_mc, make_game
from sgsolve.generate import GenConfig, generate_random_game
from sgsolve.graph import is_stopping, nontrivial_mecs
from sgsolve.linalg import absorption_system
from sgsolve.models import bigmec, coin_game
from sgsolve.oracle import _strategies, chain_reachability, enumerate_solve
from sgsolve.transforms import (
    cnf_violations, eliminate_single_action_state, identity, is_2act, is_half_probs, is_no1act,
    to_2act, to_cnf, to_half_probs, to_no1act, to_stopping, undo_half_probs,
)

from conftest import random_games


def _original_values(result):
    vals = enumerate_solve(result.game).values
    return tuple(result.original_values(vals))


def _many_actions(k, owner="max"):
    trans = {("s", f"a{i}"): {"t": F(i, k + 1), "z": F(k + 1 - i, k + 1)} for i in range(1, k + 1)}
    return make_game([("s", owner), ("t", "target"), ("z", "sink")], trans, "s")


def test_2act_identity():
    g = coin_game()
    r = to_2act(g)
    assert r.game == g
    assert r.origin_map == (0, 1, 2)


def test_2act_three_actions():
    g = _many_actions(3)
    r = to_2act(g)
    assert r.game.n == g.n + 1
    aux = g.n
    assert r.game.actions[0] == ("a1", f"to_{r.game.names[aux]}")
    assert r.game.actions[aux] == ("a2", "a3")
    assert r.origin_map[aux] is None
    assert _original_values(r) == enumerate_solve(g).values


def test_2act_four_actions_balanced():
    g = _many_actions(4, "min")
    r = to_2act(g)
    assert r.game.n == g.n + 2
    assert is_2act(r.game)
    assert all(r.game.owners[s] is Owner.MIN for s in (0, 3, 4))
    assert _original_values(r) == enumerate_solve(g).values


def test_no1act_rules():
    g = make_game(
        [("p", "max"), ("q", "min"), ("r", "max"), ("t", "target"), ("z", "sink")],
        {("p", "a"): {"q": 1}, ("q", "a"): {"r": 1}, ("r", "a"): {"t": 1}, ("r", "b"): {"z": 1}},
        "p",
    )
    r = to_no1act(g)
    assert r.game.dist(0, "no1act") == ((4, F(1)),)
    assert r.game.dist(1, "no1act") == ((3, F(1)),)
    assert r.game.actions[2] == ("a", "b")
    assert is_no1act(r.game)
    assert _original_values(r) == enumerate_solve(g).values


def test_half_probs_examples():
    g = coin_game()
    assert to_half_probs(g).game == g
    g = make_game([("s", "max"), ("x", "max"), ("y", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "a"): {"x": F(1, 4), "y": F(3, 4)}, ("x", "a"): {"t": 1}, ("y", "a"): {"z": 1}}, "s")
    r = to_half_probs(g)
    aux = g.n
    assert r.game.delta[0][0] == ((2, F(1, 2)), (aux, F(1, 2)))
    assert r.game.delta[aux][0] == ((1, F(1, 2)), (2, F(1, 2)))
    assert is_half_probs(r.game)
    assert _original_values(r) == enumerate_solve(g).values


def test_half_probs_rejects_non_dyadic():
    g = make_game([("s", "max"), ("t", "target"), ("z", "sink")], {("s", "a"): {"t": F(1, 3), "z": F(2, 3)}}, "s")
    with pytest.raises(GameError, match="non-dyadic"):
        to_half_probs(g)


def test_stopping_self_loop_m2():
    g = make_game([("s", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "spin"): {"s": 1}, ("s", "go"): {"t": 1}}, "s")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = to_stopping(g, 2)
    h = r.game
    assert is_stopping(h)
    head = h.delta[0][0][0][0]
    chain = [s for s in range(h.n) if r.origin_map[s] is None and s not in h.absorbing]
    # one pass from the chain head: back to s with 3/4, into the sink with 1/4
    x = absorption_system(chain, lambda s: h.delta[s][0], {min(h.sinks): F(1)})
    assert x[head] == F(1, 4)


def test_stopping_acyclic_identity():
    g = coin_game()
    assert to_stopping(g, 5).game == g


def test_stopping_warns_on_short_chain():
    with pytest.warns(UserWarning):
        to_stopping(bigmec(1), 3)


def test_eliminate_examples():
    g = make_game([("s", "max"), ("v", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "a"): {"v": 1}, ("v", "a"): {"t": F(1, 2), "z": F(1, 2)}}, "s")
    h = eliminate_single_action_state(g, 1)
    assert h.names == ("s", "t", "z")
    assert h.delta[0][0] == ((1, F(1, 2)), (2, F(1, 2)))
    g = make_game([("s", "max"), ("v", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "a"): {"v": F(1, 2), "t": F(1, 2)}, ("v", "a"): {"t": 1}}, "s")
    h = eliminate_single_action_state(g, 1)
    assert h.delta[0][0] == ((1, F(1)),)


def test_eliminate_preconditions():
    g = bigmec(1)
    with pytest.raises(GameError):
        eliminate_single_action_state(g, g.state_id("m0"))
    with pytest.raises(GameError):
        eliminate_single_action_state(g, g.state_id("t"))


@given(random_games(max_states=6))
def test_eliminate_preserves_values(game):
    cands = [s for s in range(game.n) if len(game.actions[s]) == 1 and s not in game.absorbing
             and s != game.initial and all(t != s for t, _ in game.delta[s][0])]
    if not cands:
        return
    v = cands[0]
    before = enumerate_solve(game).values
    after = enumerate_solve(eliminate_single_action_state(game, v)).values
    assert after == before[:v] + before[v + 1:]


@pytest.mark.parametrize("probs", [(F(1, 4), F(3, 4)), (F(1, 8), F(5, 8), F(1, 4)), (F(3, 16), F(13, 16))])
def test_undo_half_probs_roundtrip(probs):
    succ = ["t", "z", "x"][: len(probs)]
    g = make_game([("s", "max"), ("x", "min"), ("t", "target"), ("z", "sink")],
                  {("s", "a"): dict(zip(succ, probs)), ("s", "b"): {"x": 1},
                   ("x", "a"): {"t": F(1, 2), "z": F(1, 2)}, ("x", "b"): {"s": 1}}, "s")
    r = to_half_probs(g)
    assert r.game.n > g.n
    back = undo_half_probs(r)
    assert back == g
    assert enumerate_solve(back).values == enumerate_solve(g).values


@given(random_games(max_actions=3))
def test_forward_transforms_preserve_values(game):
    ref = enumerate_solve(game).values
    for tf in (to_2act, to_no1act, to_half_probs):
        assert _original_values(tf(game)) == ref


@given(random_games(max_states=6))
def test_cnf_composition(game):
    r = to_cnf(game, 2 * game.n - 1)
    assert cnf_violations(r.game) == []
    assert r.origin_map[: game.n] == tuple(range(game.n))
    assert r.n_original == game.n


def _optimal_sigmas(game, n_orig):
    sigmas, taus = _strategies(game, Owner.MAX), _strategies(game, Owner.MIN)
    inner = []
    for sg in sigmas:
        rows = [chain_reachability(induce_mc(game, sg, tu)) for tu in taus]
        inner.append(tuple(min(r[i] for r in rows) for i in range(game.n)))
    best = tuple(max(v[i] for v in inner) for i in range(game.n))
    return {tuple(sorted((s, a) for s, a in sg.choice.items() if s < n_orig))
            for sg, v in zip(sigmas, inner) if v == best}


def test_stopping_preserves_optimal_strategies(games):
    small = [g for g in games if g.n <= 5 and nontrivial_mecs(g)][:25]
    assert small
    for g in small:
        r = to_stopping(g, 2 * (g.n - 1) + 1)
        assert _optimal_sigmas(r.game, g.n) == _optimal_sigmas(g, g.n)


def test_identity_result():
    r = identity(coin_game())
    assert r.n_original == 3
    assert r.original_values([1, 2, 3]) == [1, 2, 3]


def test_non_dyadic_generator_fails_half_probs():
    g = generate_random_game(GenConfig(n_states=6, dyadic=False), 11)
    if all(p.denominator & (p.denominator - 1) == 0 for ds in g.delta for d in ds for _, p in d):
        pytest.skip("draw happened to be dyadic")
    with pytest.raises(GameError):
        to_half_probs(g)
