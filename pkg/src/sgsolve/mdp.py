"""Single-player solving: Minimizer best responses and unguaranteed value iteration."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .game import Game, GameError, Owner, Strategy, recover_strategies
from .graph import prob0_states
from .linalg import absorption_system
from .result import SolveResult


@dataclass(frozen=True)
class ViConfig:
    epsilon: float = 1e-6
    max_iterations: int = 1_000_000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass
class ViResult:
    values: np.ndarray
    iterations: int
    converged: bool


class _Compiled:
    """Game as one sparse row per (state, action), grouped by state."""

    def __init__(self, game: Game):
        rows, cols, data = [], [], []
        starts = []
        r = 0
        for s in range(game.n):
            starts.append(r)
            for d in game.delta[s]:
                for t, p in d:
                    rows.append(r)
                    cols.append(t)
                    data.append(float(p))
                r += 1
        self.matrix = sp.csr_matrix((data, (rows, cols)), shape=(r, game.n))
        self.starts = np.array(starts, dtype=np.intp)
        self.is_min = np.array([o is Owner.MIN for o in game.owners])

    def bellman(self, values: np.ndarray) -> np.ndarray:
        av = self.matrix @ values
        hi = np.maximum.reduceat(av, self.starts)
        lo = np.minimum.reduceat(av, self.starts)
        return np.where(self.is_min, lo, hi)


def initial_vector(game: Game) -> np.ndarray:
    v = np.zeros(game.n)
    v[list(game.targets)] = 1.0
    return v


def unguaranteed_vi(game: Game, config: ViConfig = ViConfig(), init: np.ndarray | None = None) -> ViResult:
    """Jacobi Bellman iteration from below; stops once the largest update is below epsilon.

    The stopping rule gives no error bound on the result, only a lower bound
    on the true values (provided ``init`` is one).
    """
    comp = _Compiled(game)
    v = initial_vector(game) if init is None else np.array(init, dtype=float)
    for it in range(1, config.max_iterations + 1):
        nv = comp.bellman(v)
        delta = float(np.max(np.abs(nv - v))) if len(v) else 0.0
        v = nv
        if delta < config.epsilon:
            return ViResult(v, it, True)
    return ViResult(v, config.max_iterations, False)


def _iterate_to_precision(game: Game, v: np.ndarray, precision: float, max_iterations: int = 10_000_000) -> np.ndarray:
    """Bellman iteration until the update and its geometric tail estimate are below ``precision``.

    The tail estimate delta * rho / (1 - rho), with rho the ratio of the last
    two updates, approximates the distance still to go; it is not a bound.
    """
    comp = _Compiled(game)
    prev = None
    for _ in range(max_iterations):
        nv = comp.bellman(v)
        delta = float(np.max(np.abs(nv - v))) if len(v) else 0.0
        v = nv
        if delta == 0.0:
            break
        if prev is not None and delta < precision:
            rho = min(delta / prev, 1.0 - 1e-12)
            if delta * rho / (1.0 - rho) < precision:
                break
        prev = delta
    return v


def vi_iterates(game: Game, iterations: int) -> list[np.ndarray]:
    """The first ``iterations`` Bellman iterates, starting vector included."""
    comp = _Compiled(game)
    out = [initial_vector(game)]
    for _ in range(iterations):
        out.append(comp.bellman(out[-1]))
    return out


def _argmin_strategy(game: Game, values: Sequence, zero: frozenset[int] = frozenset()) -> Strategy:
    choice = {}
    for s in game.states_of(Owner.MIN):
        if s in zero:
            # keep the play inside the zero region
            choice[s] = next(a for a, d in zip(game.actions[s], game.delta[s]) if all(t in zero for t, _ in d))
            continue
        vals = [sum(float(p) * values[t] if isinstance(values, np.ndarray) else p * values[t] for t, p in d)
                for d in game.delta[s]]
        choice[s] = game.actions[s][vals.index(min(vals))]
    return Strategy(Owner.MIN, choice)


def _check_mdp(mdp: Game) -> None:
    for s in mdp.states_of(Owner.MAX):
        if len(mdp.actions[s]) != 1:
            raise GameError(f"Maximizer state {mdp.names[s]} is not fixed in the induced MDP")


def evaluate_min_policy(mdp: Game, tau: Strategy, zero: frozenset[int]) -> tuple[Fraction, ...]:
    """Exact reachability of the chain induced by ``tau``, with ``zero`` pinned to 0."""
    unknown = [s for s in range(mdp.n) if s not in zero and s not in mdp.absorbing]

    def dist_of(s):
        if mdp.owners[s] is Owner.MIN:
            return mdp.dist(s, tau[s])
        return mdp.delta[s][0]

    x = absorption_system(unknown, dist_of, {t: Fraction(1) for t in mdp.targets})
    out = [Fraction(0)] * mdp.n
    for t in mdp.targets:
        out[t] = Fraction(1)
    for s, v in x.items():
        out[s] = v
    return tuple(out)


def min_best_response(
    mdp: Game,
    mode: str = "policy_iteration",
    precision: float = 1e-8,
    init_values: np.ndarray | None = None,
    init_policy: Strategy | None = None,
):
    """Minimal reachability values of an induced MDP and a Minimizer strategy attaining them.

    ``mode="policy_iteration"`` is exact (Fraction values); ``mode="vi"``
    iterates from below (or from ``init_values``, which must be a lower bound)
    to ``precision``.
    """
    _check_mdp(mdp)
    zero = prob0_states(mdp)
    if mode == "vi":
        v0 = initial_vector(mdp) if init_values is None else np.maximum(np.asarray(init_values, float), 0.0)
        values = _iterate_to_precision(mdp, v0, precision)
        values[list(zero)] = 0.0
        return values, _argmin_strategy(mdp, values, zero)
    if mode != "policy_iteration":
        raise ValueError(f"unknown mode {mode!r}")

    choice = {}
    for s in mdp.states_of(Owner.MIN):
        if s in zero:
            choice[s] = next(a for a, d in zip(mdp.actions[s], mdp.delta[s]) if all(t in zero for t, _ in d))
        elif init_policy is not None and s in init_policy.choice:
            choice[s] = init_policy[s]
        else:
            choice[s] = mdp.actions[s][0]
    while True:
        tau = Strategy(Owner.MIN, dict(choice))
        values = evaluate_min_policy(mdp, tau, zero)
        switched = False
        for s in mdp.states_of(Owner.MIN):
            if s in zero:
                continue
            vals = [sum((p * values[t] for t, p in d), Fraction(0)) for d in mdp.delta[s]]
            best = min(vals)
            if best < vals[mdp.action_index(s, choice[s])]:
                choice[s] = mdp.actions[s][vals.index(best)]
                switched = True
        if not switched:
            return values, tau


def action_dominance_check(
    game: Game, s: int, bounds: Mapping[str, tuple[float, float]]
) -> str | None:
    """Return the action whose lower bound beats every other action's upper bound."""
    for a in game.actions[s]:
        if a not in bounds:
            raise KeyError(f"no bounds for action {a!r} at {game.names[s]}")
    for a in game.actions[s]:
        lo = bounds[a][0]
        if all(lo > bounds[b][1] for b in game.actions[s] if b != a):
            return a
    return None


def solve_vi(game: Game, config: ViConfig = ViConfig()) -> SolveResult:
    """Whole-game value iteration wrapped as a result; the values carry no error bound."""
    res = unguaranteed_vi(game, config)
    smax, smin = recover_strategies(game, res.values)
    return SolveResult(
        values=res.values,
        maximizer_strategy=smax,
        minimizer_strategy=smin,
        method="vi",
        guarantee="unguaranteed",
        success=True,
        stats={"iterations": res.iterations, "converged": res.converged, "epsilon": config.epsilon},
    )
