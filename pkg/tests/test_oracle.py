from fractions import Fraction as F

import numpy as np
import pytest

from sgsolve.game import Owner, action_values, induce_mdp, make_game, recover_strategies
from sgsolve.models import bigmec, coin_game, mutual_mecs
from sgsolve.oracle import EnumerationCapExceeded, chain_reachability, enumerate_solve


def test_coin():
    assert enumerate_solve(coin_game()).values[0] == F(1, 2)


def test_target_or_sink_choice():
    g = make_game([("s", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "a"): {"t": 1}, ("s", "b"): {"z": 1}}, "s")
    res = enumerate_solve(g)
    assert res.values[0] == 1
    assert res.sigma[0] == "a"


def test_bigmec_three():
    assert enumerate_solve(bigmec(3)).values[0] == F(2, 5)


def test_mutual_mecs():
    assert enumerate_solve(mutual_mecs()).values[:4] == (F(1, 3), F(1, 3), F(2, 3), F(2, 3))


def test_chain_absorbing_cases():
    g = make_game([("t", "target"), ("z", "sink")], {}, "t")
    assert chain_reachability(g) == (1, 0)
    g = make_game([("a", "max"), ("b", "max"), ("z", "sink")],
                  {("a", "x"): {"b": 1}, ("b", "x"): {"a": F(1, 2), "z": F(1, 2)}}, "a")
    assert chain_reachability(g) == (0, 0, 0)


def test_chain_loop_hand_solved():
    # x = y/2, y = 1/2 + x/2  =>  x = 1/3, y = 2/3
    g = make_game(
        [("s", "max"), ("s2", "max"), ("t", "target"), ("z", "sink")],
        {("s", "a"): {"s2": F(1, 2), "z": F(1, 2)}, ("s2", "a"): {"t": F(1, 2), "s": F(1, 2)}},
        "s",
    )
    vals = chain_reachability(g)
    assert vals[:2] == (F(1, 3), F(2, 3))
    P = np.zeros((4, 4))
    for s in range(4):
        for t, p in g.delta[s][0]:
            P[s, t] = float(p)
    x = np.array([0.0, 0.0, 1.0, 0.0])
    for _ in range(10**6 // 1000):
        x = np.linalg.matrix_power(P, 1000) @ x
    assert x[:2] == pytest.approx([1 / 3, 2 / 3], abs=1e-12)


def test_cap():
    with pytest.raises(EnumerationCapExceeded):
        enumerate_solve(bigmec(3), cap=10)


def test_minmax_equals_maxmin(games):
    for g in games[:100]:
        res = enumerate_solve(g, check_minmax=True)
        assert res.values == res.minmax_values


def test_oracle_fixed_point(games, oracles):
    for g, res in zip(games, oracles):
        v = res.values
        for s in range(g.n):
            if g.owners[s] is None:
                continue
            vals = action_values(g, v, s)
            assert v[s] == (max(vals) if g.owners[s] is Owner.MAX else min(vals))


def test_recovered_strategies_are_optimal(games, oracles):
    for g, res in list(zip(games, oracles))[:120]:
        sigma, tau = recover_strategies(g, res.values)
        assert enumerate_solve(induce_mdp(g, sigma)).values == res.values
        floats = np.array([float(v) for v in res.values])
        assert recover_strategies(g, floats)[0] == sigma


def test_recovered_strategy_breaks_ring_tie():
    g = bigmec(3)
    sigma, _ = recover_strategies(g, enumerate_solve(g).values)
    assert sigma[g.state_id("m5")] == "exit"
