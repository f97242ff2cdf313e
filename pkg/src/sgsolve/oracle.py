"""Exact ground truth by exhaustive enumeration of pure memoryless strategies.

Deliberately naive: no pruning, no shared code with the solvers it checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .game import Game, GameError, Owner, Strategy, induce_mc, is_chain

DEFAULT_CAP = 2**22


class EnumerationCapExceeded(RuntimeError):
    pass


def _dense_solve(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


def chain_reachability(chain: Game) -> tuple[Fraction, ...]:
    """P(eventually reach a target) per state of a single-action game."""
    if not is_chain(chain):
        raise GameError("chain_reachability needs exactly one action per state")
    n = chain.n
    succ = [[t for t, _ in chain.delta[s][0]] for s in range(n)]
    reach = set(chain.targets)
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if s not in reach and any(t in reach for t in succ[s]):
                reach.add(s)
                changed = True
    unknown = [s for s in range(n) if s in reach and s not in chain.targets]
    pos = {s: i for i, s in enumerate(unknown)}
    k = len(unknown)
    a = [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]
    b = [Fraction(0)] * k
    for s in unknown:
        i = pos[s]
        for t, p in chain.delta[s][0]:
            if t in chain.targets:
                b[i] += p
            elif t in pos:
                a[i][pos[t]] -= p
    x = _dense_solve(a, b) if k else []
    out = [Fraction(0)] * n
    for s in chain.targets:
        out[s] = Fraction(1)
    for s, i in pos.items():
        out[s] = x[i]
    return tuple(out)


def _strategies(game: Game, player: Owner) -> list[Strategy]:
    states = game.states_of(player)
    return [
        Strategy(player, dict(zip(states, combo)))
        for combo in itertools.product(*(game.actions[s] for s in states))
    ]


@dataclass(frozen=True)
class OracleResult:
    values: tuple[Fraction, ...]
    sigma: Strategy
    tau: Strategy
    minmax_values: tuple[Fraction, ...] | None = None


def enumerate_solve(game: Game, cap: int = DEFAULT_CAP, check_minmax: bool = False) -> OracleResult:
    """Values as max over sigma of min over tau of exact chain reachability.

    ``cap`` bounds the number of strategy pairs.  With ``check_minmax`` the
    min-max order is computed as well and returned for comparison.
    """
    sigmas = _strategies(game, Owner.MAX)
    taus = _strategies(game, Owner.MIN)
    if len(sigmas) * len(taus) > cap:
        raise EnumerationCapExceeded(f"{len(sigmas) * len(taus)} strategy pairs exceed cap {cap}")

    table = [[chain_reachability(induce_mc(game, sg, tu)) for tu in taus] for sg in sigmas]
    n = game.n
    inner = [tuple(min(row[j][s] for j in range(len(taus))) for s in range(n)) for row in table]
    values = tuple(max(vec[s] for vec in inner) for s in range(n))

    best = next(i for i, vec in enumerate(inner) if vec == values)
    resp = next(j for j in range(len(taus)) if table[best][j] == inner[best])

    minmax = None
    if check_minmax:
        outer = [tuple(max(table[i][j][s] for i in range(len(sigmas))) for s in range(n)) for j in range(len(taus))]
        minmax = tuple(min(vec[s] for vec in outer) for s in range(n))
    return OracleResult(values, sigmas[best], taus[resp], minmax)
