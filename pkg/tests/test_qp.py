import pathlib
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from sgsolve.game import GameError, Owner, make_game
from sgsolve.graph import nontrivial_mecs
from sgsolve.models import bigmec, coin_game, lp_fixtures, mixed_loop, mutual_mecs
from sgsolve.oracle import EnumerationCapExceeded, enumerate_solve
from sgsolve.qp import (
    AffineExpr, build_condon_qp, build_improved_qp, complete_assignment, enumerate_local_strategy_pairs,
    export_lp, mec_reach_probabilities, verify_solution,
)
from sgsolve.transforms import to_2act, to_cnf

import lp_eval
from conftest import random_games

GOLDEN = pathlib.Path(__file__).parent / "golden"


def _two_exits(p=F(1)):
    return make_game([("s", "max"), ("t", "target"), ("z", "sink")],
                     {("s", "a"): {"t": p, "z": 1 - p} if p != 1 else {"t": 1}, ("s", "b"): {"z": 1}}, "s")


def _restricted(game, choice):
    """The game with the given per-state actions forced."""
    acts = list(game.actions)
    dists = list(game.delta)
    for s, a in choice.items():
        i = game.action_index(s, a)
        acts[s], dists[s] = (a,), (game.delta[s][i],)
    return game.replace(actions=tuple(acts), delta=tuple(dists))


def test_affine_expr():
    e = AffineExpr.build({0: F(1, 2), 1: F(0)}, F(1))
    assert e.terms == ((0, F(1, 2)),)
    assert (e - AffineExpr.var(0)).evaluate([F(1)]) == F(1, 2)
    assert e.scale(2).evaluate([F(1)]) == 3


def test_condon_single_state():
    qp = build_condon_qp(_two_exits())
    assert len(qp.linear) == 2
    assert len(qp.objective) == 1


def test_condon_counts_on_transformed_coin():
    g = to_cnf(coin_game(), 5).game
    qp = build_condon_qp(g)
    two = sum(1 for s in range(g.n) if len(g.actions[s]) == 2)
    assert len(qp.linear) + len(qp.fixed) == 2 * two + len(g.targets) + len(g.sinks)


def test_condon_rejects_non_normal_form():
    with pytest.raises(GameError, match="Stopping"):
        build_condon_qp(to_2act(bigmec(1)).game)


def test_condon_oracle_values_feasible(games):
    checked = 0
    for g in games:
        if g.n > 5 or nontrivial_mecs(g):
            continue
        h = to_cnf(g, 2 * g.n - 1).game
        try:
            vals = enumerate_solve(h, cap=2**14).values
        except EnumerationCapExceeded:
            continue
        rep = verify_solution(build_condon_qp(h), vals)
        assert rep.feasible and rep.objective <= 1e-9
        checked += 1
    assert checked >= 10


def test_improved_acyclic():
    g = make_game([("s", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "a"): {"t": F(1, 2), "z": F(1, 2)}, ("s", "b"): {"t": F(1, 4), "z": F(3, 4)}}, "s")
    qp = build_improved_qp(g)
    assert not qp.selects and qp.stats["mecs"] == 0
    rep = verify_solution(qp, enumerate_solve(g).values)
    assert rep.feasible and rep.objective == 0


def test_improved_bigmec1_max_selects():
    g = bigmec(1)
    qp = build_improved_qp(g)
    assert {s.kind for s in qp.selects} == {"max"}
    assert len(qp.selects) == 2
    rep = verify_solution(qp, enumerate_solve(g).values)
    assert rep.feasible and rep.objective == 0


def test_improved_mixed_loop_four_pairs():
    g = mixed_loop()
    qp = build_improved_qp(g)
    assert qp.stats["strategy_pairs"] == 4 <= 2 ** 2
    assert sum(s.kind == "min" for s in qp.selects) == 4
    rep = verify_solution(qp, enumerate_solve(g).values)
    assert rep.feasible and rep.objective == 0


def test_improved_needs_2act():
    g = make_game([("s", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "a"): {"t": 1}, ("s", "b"): {"z": 1}, ("s", "c"): {"s": 1}}, "s")
    with pytest.raises(GameError):
        build_improved_qp(g)


def test_pair_cap():
    with pytest.raises(GameError, match="cap"):
        build_improved_qp(mixed_loop(), pair_cap=3)


def test_reach_probabilities_examples():
    g = mixed_loop()
    (mec,) = nontrivial_mecs(g)
    stay = mec_reach_probabilities(g, mec, {0: "stay"}, {1: "back"})
    assert stay == {0: {}, 1: {}}
    out = mec_reach_probabilities(g, mec, {0: "out"}, {1: "back"})
    assert out[0] == {2: F(1, 2), 3: F(1, 2)}
    assert out[1] == out[0]
    # s1 <-> s2 where s2 leaks half of its mass to an exit e
    loop = make_game(
        [("s1", "max"), ("s2", "max"), ("e", "target"), ("z", "sink")],
        {("s1", "go"): {"s2": 1}, ("s1", "drop"): {"z": 1},
         ("s2", "go"): {"s1": F(1, 2), "e": F(1, 2)}, ("s2", "back"): {"s1": 1}},
        "s1",
    )
    (mec,) = nontrivial_mecs(loop)
    probs = mec_reach_probabilities(loop, mec, {0: "go", 1: "go"}, {})
    assert probs == {0: {2: F(1)}, 1: {2: F(1)}}


def test_local_pairs():
    g = make_game([("s", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "spin"): {"s": 1}, ("s", "go"): {"t": 1}}, "s")
    (mec,) = nontrivial_mecs(g)
    assert len(enumerate_local_strategy_pairs(g, mec)) == 2
    g = mixed_loop()
    (mec,) = nontrivial_mecs(g)
    pairs = enumerate_local_strategy_pairs(g, mec)
    assert pairs == [({0: "stay"}, {1: "back"}), ({0: "stay"}, {1: "out"}),
                     ({0: "out"}, {1: "back"}), ({0: "out"}, {1: "out"})]
    assert pairs == enumerate_local_strategy_pairs(g, mec)


def test_verify_examples():
    qp = build_improved_qp(coin_game())
    rep = verify_solution(qp, [0.5, 0.5, 0.5])
    assert not rep.feasible
    assert any(name == "fix:v1" and r == 0.5 for name, r in rep.residuals)
    g = _two_exits(F(1, 2))
    qp = build_condon_qp(g)
    good = enumerate_solve(g).values
    assert verify_solution(qp, good).objective == 0
    bad = [good[0] + F(1, 10)] + list(good[1:])
    assert verify_solution(qp, bad).objective > 0


def test_improved_sound_on_corpus(games, oracles):
    for g, res in zip(games, oracles):
        rep = verify_solution(build_improved_qp(g), res.values)
        assert rep.feasible and rep.objective <= 1e-9


@given(random_games())
def test_exit_dependency(game):
    vals_cache = {}
    for mec in nontrivial_mecs(game):
        for sg, tu in enumerate_local_strategy_pairs(game, mec)[:6]:
            probs = mec_reach_probabilities(game, mec, sg, tu)
            key = tuple(sorted({**sg, **tu}.items()))
            if key not in vals_cache:
                vals_cache[key] = enumerate_solve(_restricted(game, {**sg, **tu})).values
            v = vals_cache[key]
            for s in mec.states:
                assert sum((p * v[e] for e, p in probs[s].items()), F(0)) == v[s]


def _local_exit_reachable(game, mec, choice):
    reach = set()
    changed = True
    while changed:
        changed = False
        for s in mec.states:
            if s not in reach and any(t not in mec.states or t in reach for t in game.post(s, choice[s])):
                reach.add(s)
                changed = True
    return reach == set(mec.states)


@given(random_games())
def test_reach_probability_rows(game):
    for mec in nontrivial_mecs(game):
        for sg, tu in enumerate_local_strategy_pairs(game, mec):
            probs = mec_reach_probabilities(game, mec, sg, tu)
            leaves = _local_exit_reachable(game, mec, {**sg, **tu})
            for s in mec.states:
                total = sum(probs[s].values(), F(0))
                assert 0 <= total <= 1
                if leaves:
                    assert total == 1


@given(random_games(), st.integers(0, 2**32 - 1))
def test_big_m_faithful(game, seed):
    qp = build_improved_qp(game)
    if not qp.selects:
        return
    truth = complete_assignment(qp, enumerate_solve(game).values)
    assert lp_eval.some_binary_completion(
        lp_eval.read_constraints(export_lp(qp)), [float(v) for v in truth], qp.var_names
    )
    rng = random.Random(seed)
    text = export_lp(qp)
    cons = [c for c in lp_eval.read_constraints(text) if c[0].startswith("s")]
    x = [rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]) for _ in range(qp.n_vars)]
    for i, v in qp.fixed.items():
        x[i] = float(v)
    exact = complete_assignment(qp, [F(v).limit_denominator(8) for v in x[: qp.n_states]])
    xf = [float(v) for v in exact]
    direct = all(xf[s.var] == float(s.target(exact)) for s in qp.selects)
    assert direct == lp_eval.some_binary_completion(cons, xf, qp.var_names)
    # knock one select off its target: the encoding must reject it
    sel = rng.choice(qp.selects)
    moved = list(xf)
    moved[sel.var] = 1.0 - moved[sel.var] if moved[sel.var] != 0.5 else 0.0
    if moved[sel.var] != float(sel.target(exact)):
        assert not lp_eval.some_binary_completion(cons, moved, qp.var_names)


def test_big_m_two_binaries_per_pair():
    g = make_game([("s", "max"), ("t", "target"), ("z", "sink")],
                  {("s", "spin"): {"s": 1}, ("s", "go"): {"t": F(1, 2), "z": F(1, 2)}}, "s")
    qp = build_improved_qp(g)
    assert len(qp.selects) == 1 and len(qp.selects[0].exprs) == 1
    assert lp_eval.binaries(export_lp(qp)) == ["b0"]
    assert len(lp_eval.binaries(export_lp(build_improved_qp(bigmec(1))))) == 4


@pytest.mark.parametrize("name", sorted(lp_fixtures()))
def test_lp_golden(name):
    game, variant = lp_fixtures()[name]
    qp = build_condon_qp(game) if variant == "condon" else build_improved_qp(game)
    text = export_lp(qp)
    assert text == (GOLDEN / f"{name}.lp").read_text()
    assert export_lp(qp) == text


def test_golden_set_has_selects():
    assert "Binaries" in (GOLDEN / "mixed_loop_improved.lp").read_text()


def test_mutual_mecs_improved_oracle():
    g = mutual_mecs()
    rep = verify_solution(build_improved_qp(g), enumerate_solve(g).values)
    assert rep.feasible and rep.objective == 0
    assert Owner.MIN in {g.owners[s] for s in range(g.n)}
