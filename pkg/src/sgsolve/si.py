"""Strategy iteration: proper initial strategies, greedy improvement, MEC-ordered solving."""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .game import Game, Kind, Owner, Strategy, action_values, induce_mdp, make_absorbing, make_game
from .graph import (
    _attractor,
    accessible_states,
    attractor_strategy,
    improper_components,
    mec_decomposition,
    mec_postorder,
    nontrivial_mecs,
    prob0_states,
)
from .mdp import ViConfig, min_best_response, unguaranteed_vi
from .result import SolveResult

QUANTUM = 10**12


@dataclass(frozen=True)
class SiConfig:
    init: str = "vi"  # "attractor" | "vi"
    vi_epsilon: float = 1e-6
    opponent: str = "policy_iteration"  # "policy_iteration" | "vi"
    opponent_precision: float = 1e-8
    topological: bool = False
    record_trace: bool = False

    def __post_init__(self):
        if self.init not in ("attractor", "vi"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.opponent not in ("policy_iteration", "vi"):
            raise ValueError(f"unknown opponent {self.opponent!r}")
        if not (self.vi_epsilon > 0 and self.opponent_precision > 0):
            raise ValueError("precisions must be positive")

    @property
    def exact(self) -> bool:
        return self.opponent == "policy_iteration"


def _argmax(vals: list) -> int:
    return vals.index(max(vals))


def repair_to_proper(game: Game, sigma: Strategy) -> tuple[Strategy, set[int]]:
    """Switch states inside improper end components to their attractor action.

    Rounds repeat until the strategy is proper; each round touches only the
    states of end components that avoid targets and sinks.
    """
    _, witness = _attractor(game, game.absorbing)
    choice = dict(sigma.choice)
    repaired: set[int] = set()
    while True:
        bad = improper_components(game, Strategy(Owner.MAX, choice))
        if not bad:
            return Strategy(Owner.MAX, choice), repaired
        progress = False
        for mec in bad:
            for s in mec.states:
                if game.owners[s] is Owner.MAX and choice[s] != witness[s]:
                    choice[s] = witness[s]
                    repaired.add(s)
                    progress = True
        if not progress:
            # a Minimizer-held component; no Maximizer choice can fix it
            attractor_strategy(game)
            raise AssertionError("improper strategy without repairable states")


def initial_strategy_from_estimates(game: Game, estimates) -> Strategy:
    """Greedy Maximizer strategy for the estimates (ties to the first action), made proper."""
    if len(estimates) != game.n:
        raise ValueError("estimate vector has wrong length")
    choice = {s: game.actions[s][_argmax(action_values(game, estimates, s))] for s in game.states_of(Owner.MAX)}
    return repair_to_proper(game, Strategy(Owner.MAX, choice))[0]


def _improve(game: Game, sigma: Strategy, lb, tol) -> Strategy:
    """Greedy update that keeps the incumbent action unless another is strictly better."""
    choice = {}
    for s in game.states_of(Owner.MAX):
        vals = action_values(game, lb, s)
        cur = vals[game.action_index(s, sigma[s])]
        best = max(vals)
        choice[s] = game.actions[s][vals.index(best)] if best > cur + tol else sigma[s]
    return Strategy(Owner.MAX, choice)


def _complete_strategies(game: Game, pre: Game, sigma: Strategy, tau: Strategy, zero) -> tuple[Strategy, Strategy]:
    """Extend strategies of the preprocessed game to the states turned into sinks."""
    smax = dict(sigma.choice)
    smin = dict(tau.choice)
    for s in zero:
        if game.owners[s] is Owner.MAX:
            smax[s] = game.actions[s][0]
        elif game.owners[s] is Owner.MIN:
            smin[s] = next(a for a, d in zip(game.actions[s], game.delta[s]) if all(t in zero for t, _ in d))
    return Strategy(Owner.MAX, smax), Strategy(Owner.MIN, smin)


def solve_si(game: Game, config: SiConfig = SiConfig()) -> SolveResult:
    """Strategy iteration from a proper initial strategy.

    States where the Minimizer can avoid all targets are turned into sinks
    first; in the remaining game a proper strategy always exists.
    """
    if config.topological:
        return topological_si(game, config)
    t0 = time.perf_counter()
    zero = prob0_states(game)
    pre = make_absorbing(game, zero)
    if config.init == "attractor":
        sigma = attractor_strategy(pre)
    else:
        est = unguaranteed_vi(pre, ViConfig(config.vi_epsilon)).values
        sigma = initial_strategy_from_estimates(pre, est)

    mode = config.opponent
    tol = 0 if config.exact else config.opponent_precision
    trace = []
    lb_prev = None
    tau_prev = None
    iterations = 0
    while True:
        iterations += 1
        mdp = induce_mdp(pre, sigma)
        lb, tau = min_best_response(
            mdp, mode, config.opponent_precision, init_values=lb_prev, init_policy=tau_prev
        )
        if config.record_trace:
            trace.append((sigma, lb))
        new_sigma = _improve(pre, sigma, lb, tol)
        if new_sigma == sigma:
            break
        sigma, lb_prev, tau_prev = new_sigma, lb, tau

    smax, smin = _complete_strategies(game, pre, sigma, tau, zero)
    values = tuple(lb) if config.exact else np.asarray(lb, dtype=float)
    return SolveResult(
        values=values,
        maximizer_strategy=smax,
        minimizer_strategy=smin,
        method="si",
        guarantee="exact" if config.exact else "unguaranteed",
        stats={"iterations": iterations, "mdp_solves": iterations, "zero_states": len(zero),
               "wall_time": time.perf_counter() - t0},
        trace=trace,
    )


# -- topological variant -------------------------------------------------


def _quantize(v, exact: bool) -> Fraction:
    if exact:
        return Fraction(v)
    q = Fraction(float(v)).limit_denominator(QUANTUM)
    return min(max(q, Fraction(0)), Fraction(1))


def frozen_subgame(game: Game, unknown: list[int], solved: dict[int, object], exact: bool) -> tuple[Game, list[int]]:
    """Sub-game over ``unknown`` with solved successors replaced by weighted exits.

    Each solved successor with value v becomes a one-action state moving to a
    fresh target with probability v and to a fresh sink otherwise.  Returns the
    sub-game and the original id of each of its first ``len(unknown)`` states.
    """
    top, bot = "__top", "__bot"
    local = {s: game.names[s] for s in unknown}
    states = [(game.names[s], game.owners[s].value) for s in unknown]
    trans: dict[tuple[str, str], dict[str, Fraction]] = {}
    frozen_names: dict[int, str] = {}
    frozen_trans = {}

    def ref(t: int) -> str:
        if t in local:
            return local[t]
        v = _quantize(solved[t], exact)
        if v == 1:
            return top
        if v == 0:
            return bot
        if t not in frozen_names:
            name = f"__frozen_{game.names[t]}"
            frozen_names[t] = name
            frozen_trans[(name, "exit")] = {top: v, bot: 1 - v}
        return frozen_names[t]

    for s in unknown:
        for a, d in zip(game.actions[s], game.delta[s]):
            out: dict[str, Fraction] = {}
            for t, p in d:
                r = ref(t)
                out[r] = out.get(r, Fraction(0)) + p
            trans[(game.names[s], a)] = out
    for t, name in frozen_names.items():
        states.append((name, "max"))
    trans.update(frozen_trans)
    states += [(top, "target"), (bot, "sink")]
    return make_game(states, trans, game.names[unknown[0]]), list(unknown)


def topological_si(game: Game, config: SiConfig = SiConfig()) -> SolveResult:
    """Solve MEC by MEC in DFS post-order, each over its accessible closure."""
    t0 = time.perf_counter()
    sub_config = SiConfig(config.init, config.vi_epsilon, config.opponent, config.opponent_precision, False)
    exact = config.exact
    mecs = mec_decomposition(game)
    order = mec_postorder(game, mecs)
    solved: dict[int, object] = {}
    for s in game.targets:
        solved[s] = Fraction(1) if exact else 1.0
    for s in game.sinks:
        solved[s] = Fraction(0) if exact else 0.0
    smax: dict[int, str] = {}
    smin: dict[int, str] = {}
    sub_solves: list[list[int]] = []
    iterations = 0

    def run(unknown: list[int]):
        nonlocal iterations
        sub, ids = frozen_subgame(game, unknown, solved, exact)
        res = solve_si(sub, sub_config)
        iterations += res.stats["iterations"]
        sub_solves.append(list(unknown))
        for i, s in enumerate(ids):
            solved[s] = res.values[i]
            if game.owners[s] is Owner.MAX:
                smax[s] = res.maximizer_strategy[i]
            else:
                smin[s] = res.minimizer_strategy[i]

    nontrivial = {id(m) for m in nontrivial_mecs(game, mecs)}
    for i in order:
        mec = mecs[i]
        if id(mec) not in nontrivial or all(s in solved for s in mec.states):
            continue
        closure = accessible_states(game, mec.states)
        unknown = sorted(s for s in closure if s not in solved)
        run(unknown)
    rest = sorted(s for s in range(game.n) if s not in solved)
    if rest:
        run(rest)

    if exact:
        values = tuple(Fraction(solved[s]) for s in range(game.n))
    else:
        values = np.array([float(solved[s]) for s in range(game.n)])
    return SolveResult(
        values=values,
        maximizer_strategy=Strategy(Owner.MAX, smax),
        minimizer_strategy=Strategy(Owner.MIN, smin),
        method="si-topological",
        guarantee="exact" if exact else "unguaranteed",
        stats={"iterations": iterations, "sub_solves": sub_solves, "mdp_solves": iterations,
               "wall_time": time.perf_counter() - t0},
    )
