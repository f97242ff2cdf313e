"""Simple stochastic games with exact rational transition probabilities.

A game is stored as dense integer state ids in declaration order.  Targets and
sinks are absorbing: each carries exactly one action, ``loop``, which is a
probability-1 self-loop.  Non-absorbing states are owned by the Maximizer or
the Minimizer.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

LOOP = "loop"

Distribution = tuple[tuple[int, Fraction], ...]


class GameError(ValueError):
    """A game violates one of its structural invariants."""


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class Owner(enum.Enum):
    MAX = "max"
    MIN = "min"

    @property
    def opponent(self) -> "Owner":
        return Owner.MIN if self is Owner.MAX else Owner.MAX


class Kind(enum.Enum):
    NORMAL = "normal"
    TARGET = "target"
    SINK = "sink"


@dataclass(frozen=True)
class Game:
    """Immutable simple stochastic game.

    ``owners[s]`` is None exactly for targets and sinks.  ``delta[s][i]`` is
    the sparse distribution of the i-th action ``actions[s][i]``, sorted by
    successor id.
    """

    names: tuple[str, ...]
    owners: tuple[Owner | None, ...]
    kinds: tuple[Kind, ...]
    initial: int
    actions: tuple[tuple[str, ...], ...]
    delta: tuple[tuple[Distribution, ...], ...]

    def __post_init__(self):
        n = len(self.names)
        if n == 0:
            raise GameError("game has no states")
        if not (len(self.owners) == len(self.kinds) == len(self.actions) == len(self.delta) == n):
            raise GameError("per-state tables have inconsistent lengths")
        if len(set(self.names)) != n:
            raise GameError("state names are not unique")
        if not 0 <= self.initial < n:
            raise GameError(f"initial state {self.initial} out of range")
        for s in range(n):
            name = self.names[s]
            acts = self.actions[s]
            if self.kinds[s] is Kind.NORMAL:
                if self.owners[s] is None:
                    raise GameError(f"state {name} has no owner")
            else:
                if self.owners[s] is not None:
                    raise GameError(f"absorbing state {name} must not have an owner")
                if acts != (LOOP,) or self.delta[s] != (((s, Fraction(1)),),):
                    raise GameError(f"absorbing state {name} must have exactly one self-loop action")
            if not acts:
                raise GameError(f"state {name} has no actions")
            if len(set(acts)) != len(acts):
                raise GameError(f"state {name} has duplicate action ids")
            if len(self.delta[s]) != len(acts):
                raise GameError(f"state {name}: one distribution per action required")
            for a, dist in zip(acts, self.delta[s]):
                if not dist:
                    raise GameError(f"distribution at ({name},{a}) is empty")
                succs = [t for t, _ in dist]
                if succs != sorted(set(succs)):
                    raise GameError(f"distribution at ({name},{a}) is not sorted/unique")
                for t, p in dist:
                    if not 0 <= t < n:
                        raise GameError(f"distribution at ({name},{a}) names unknown state {t}")
                    if not isinstance(p, Fraction) or not 0 < p <= 1:
                        raise GameError(f"distribution at ({name},{a}) has probability {p} outside (0,1]")
                total = sum((p for _, p in dist), Fraction(0))
                if total != 1:
                    raise GameError(f"distribution at ({name},{a}) sums to {total}")

    # -- basic queries ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.names)

    @cached_property
    def targets(self) -> frozenset[int]:
        return frozenset(s for s, k in enumerate(self.kinds) if k is Kind.TARGET)

    @cached_property
    def sinks(self) -> frozenset[int]:
        return frozenset(s for s, k in enumerate(self.kinds) if k is Kind.SINK)

    @cached_property
    def absorbing(self) -> frozenset[int]:
        return self.targets | self.sinks

    def states_of(self, player: Owner) -> list[int]:
        return [s for s in range(self.n) if self.owners[s] is player]

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: s for s, name in enumerate(self.names)}

    def state_id(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown state {name!r}") from None

    def action_index(self, s: int, a: str) -> int:
        if not 0 <= s < self.n:
            raise KeyError(f"unknown state {s}")
        try:
            return self.actions[s].index(a)
        except ValueError:
            raise KeyError(f"action {a!r} not available at {self.names[s]}") from None

    def dist(self, s: int, a: str) -> Distribution:
        return self.delta[s][self.action_index(s, a)]

    def post(self, s: int, a: str) -> tuple[int, ...]:
        return tuple(t for t, _ in self.dist(s, a))

    @cached_property
    def successors(self) -> tuple[frozenset[int], ...]:
        """All successors of each state, under any action."""
        return tuple(frozenset(t for d in ds for t, _ in d) for ds in self.delta)

    @cached_property
    def predecessors(self) -> tuple[frozenset[int], ...]:
        pred: list[set[int]] = [set() for _ in range(self.n)]
        for s, succ in enumerate(self.successors):
            for t in succ:
                pred[t].add(s)
        return tuple(frozenset(p) for p in pred)

    @cached_property
    def float_delta(self) -> tuple[tuple[tuple[np.ndarray, np.ndarray], ...], ...]:
        """Distributions as (successor index array, float probability array)."""
        return tuple(
            tuple(
                (np.array([t for t, _ in d], dtype=np.intp), np.array([float(p) for _, p in d]))
                for d in ds
            )
            for ds in self.delta
        )

    def replace(self, **changes) -> "Game":
        fields_ = dict(
            names=self.names,
            owners=self.owners,
            kinds=self.kinds,
            initial=self.initial,
            actions=self.actions,
            delta=self.delta,
        )
        fields_.update(changes)
        return Game(**fields_)


@dataclass(frozen=True)
class Strategy:
    """Pure memoryless strategy: one action name per owned non-absorbing state."""

    player: Owner
    choice: Mapping[int, str] = field(hash=False)

    def __getitem__(self, s: int) -> str:
        return self.choice[s]

    def check(self, game: Game) -> None:
        domain = set(game.states_of(self.player))
        if set(self.choice) != domain:
            missing = sorted(domain - set(self.choice))
            extra = sorted(set(self.choice) - domain)
            raise GameError(f"{self.player.value} strategy domain mismatch (missing {missing}, extra {extra})")
        for s, a in self.choice.items():
            if a not in game.actions[s]:
                raise GameError(f"strategy picks unavailable action {a!r} at {game.names[s]}")

    def named(self, game: Game) -> dict[str, str]:
        return {game.names[s]: a for s, a in sorted(self.choice.items())}


def first_action_strategy(game: Game, player: Owner) -> Strategy:
    return Strategy(player, {s: game.actions[s][0] for s in game.states_of(player)})


# -- construction helpers ------------------------------------------------


def make_game(
    states: Sequence[tuple[str, str]],
    transitions: Mapping[tuple[str, str], Mapping[str, Fraction | int | str]],
    initial: str | None = None,
) -> Game:
    """Build a game from ``(name, role)`` pairs and ``{(state, action): {succ: prob}}``.

    ``role`` is one of max/min/target/sink.  Actions keep their insertion order
    in ``transitions``.
    """
    names = [name for name, _ in states]
    index = {name: i for i, name in enumerate(names)}
    owners: list[Owner | None] = []
    kinds: list[Kind] = []
    for name, role in states:
        if role in ("max", "min"):
            owners.append(Owner(role))
            kinds.append(Kind.NORMAL)
        elif role in ("target", "sink"):
            owners.append(None)
            kinds.append(Kind(role))
        else:
            raise GameError(f"unknown role {role!r} for state {name}")
    acts: list[list[str]] = [[] for _ in names]
    dists: list[list[Distribution]] = [[] for _ in names]
    for (sname, a), succ in transitions.items():
        s = index[sname]
        acts[s].append(a)
        dists[s].append(tuple(sorted((index[t], Fraction(p)) for t, p in succ.items())))
    for s, k in enumerate(kinds):
        if k is not Kind.NORMAL:
            if acts[s]:
                raise GameError(f"absorbing state {names[s]} must not declare actions")
            acts[s] = [LOOP]
            dists[s] = [((s, Fraction(1)),)]
    return Game(
        names=tuple(names),
        owners=tuple(owners),
        kinds=tuple(kinds),
        initial=index[initial] if initial is not None else 0,
        actions=tuple(tuple(a) for a in acts),
        delta=tuple(tuple(d) for d in dists),
    )


# -- .sg text format -----------------------------------------------------

_PROB_RE = re.compile(r"^(\d+/\d+|\d+(\.\d+)?|\.\d+)$")


def _parse_prob(tok: str, lineno: int) -> Fraction:
    if not _PROB_RE.match(tok):
        raise ParseError(lineno, f"malformed probability {tok!r}")
    try:
        return Fraction(tok)
    except ZeroDivisionError:
        raise ParseError(lineno, f"zero denominator in {tok!r}") from None


def parse_model(text: str) -> Game:
    """Parse ``.sg`` text into a validated game."""
    header_seen = False
    roles: dict[str, str] = {}
    order: list[str] = []
    initial: str | None = None
    actions: dict[str, list[str]] = {}
    trans: dict[tuple[str, str], dict[str, Fraction]] = {}
    deferred: list[tuple[int, str]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if not header_seen:
            if tok != ["sg"]:
                raise ParseError(lineno, "expected 'sg' header")
            header_seen = True
            continue
        kw = tok[0]
        if kw == "state":
            if len(tok) != 3:
                raise ParseError(lineno, "expected 'state <id> <max|min|target|sink>'")
            name, role = tok[1], tok[2]
            if role not in ("max", "min", "target", "sink"):
                raise ParseError(lineno, f"unknown state role {role!r}")
            if name in roles:
                raise ParseError(lineno, f"state {name} declared twice")
            roles[name] = role
            order.append(name)
            actions[name] = []
        elif kw == "init":
            if len(tok) != 2:
                raise ParseError(lineno, "expected 'init <id>'")
            if initial is not None:
                raise ParseError(lineno, "initial state declared twice")
            initial = tok[1]
            deferred.append((lineno, tok[1]))
        elif kw == "action":
            if len(tok) != 3:
                raise ParseError(lineno, "expected 'action <state-id> <action-name>'")
            s, a = tok[1], tok[2]
            if s not in roles:
                raise ParseError(lineno, f"action for undeclared state {s}")
            if roles[s] in ("target", "sink"):
                raise ParseError(lineno, f"absorbing state {s} cannot declare actions")
            if a in actions[s]:
                raise ParseError(lineno, f"action {a} declared twice at {s}")
            actions[s].append(a)
            trans[(s, a)] = {}
        elif kw == "trans":
            if len(tok) != 5:
                raise ParseError(lineno, "expected 'trans <state-id> <action-name> <succ-id> <prob>'")
            s, a, t = tok[1], tok[2], tok[3]
            if (s, a) not in trans:
                raise ParseError(lineno, f"transition for undeclared action ({s},{a})")
            p = _parse_prob(tok[4], lineno)
            if p == 0:
                raise ParseError(lineno, "zero-probability transitions must be omitted")
            if t in trans[(s, a)]:
                raise ParseError(lineno, f"duplicate successor {t} at ({s},{a})")
            trans[(s, a)][t] = p
            deferred.append((lineno, t))
        else:
            raise ParseError(lineno, f"unknown keyword {kw!r}")

    if not header_seen:
        raise ParseError(1, "expected 'sg' header")
    for lineno, name in deferred:
        if name not in roles:
            raise ParseError(lineno, f"unknown state {name}")
    if initial is None:
        raise ParseError(len(text.splitlines()) or 1, "missing 'init' line")
    for s in order:
        if roles[s] in ("max", "min") and not actions[s]:
            raise GameError(f"state {s} has no actions")
        for a in actions[s]:
            if not trans[(s, a)]:
                raise GameError(f"distribution at ({s},{a}) is empty")
    return make_game([(s, roles[s]) for s in order], trans, initial)


def _fmt_prob(p: Fraction) -> str:
    return str(p)


def render_model(game: Game) -> str:
    """Canonical ``.sg`` text: states ascending, actions in order, reduced fractions."""
    lines = ["sg"]
    for s in range(game.n):
        role = game.owners[s].value if game.owners[s] is not None else game.kinds[s].value
        lines.append(f"state {game.names[s]} {role}")
    lines.append(f"init {game.names[game.initial]}")
    for s in range(game.n):
        if game.kinds[s] is not Kind.NORMAL:
            continue
        for a, d in zip(game.actions[s], game.delta[s]):
            lines.append(f"action {game.names[s]} {a}")
            for t, p in d:
                lines.append(f"trans {game.names[s]} {a} {game.names[t]} {_fmt_prob(p)}")
    return "\n".join(lines) + "\n"


# -- values and restrictions ---------------------------------------------


def action_value(game: Game, values: Sequence, s: int, a: str):
    """One-step expected value of ``a`` at ``s`` in the number type of ``values``."""
    d = game.dist(s, a)
    if isinstance(values, np.ndarray):
        idx, probs = game.float_delta[s][game.action_index(s, a)]
        return float(probs @ values[idx])
    total = Fraction(0) if isinstance(values[0], Fraction) else 0.0
    for t, p in d:
        total += (p if isinstance(total, Fraction) else float(p)) * values[t]
    return total


def action_values(game: Game, values: Sequence, s: int) -> list:
    return [action_value(game, values, s, a) for a in game.actions[s]]


def _restrict(game: Game, strategies: Sequence[Strategy]) -> Game:
    acts = list(game.actions)
    dists = list(game.delta)
    for strat in strategies:
        strat.check(game)
        for s, a in strat.choice.items():
            i = game.action_index(s, a)
            acts[s] = (a,)
            dists[s] = (game.delta[s][i],)
    return game.replace(actions=tuple(acts), delta=tuple(dists))


def induce_mdp(game: Game, sigma: Strategy) -> Game:
    """Fix the Maximizer's choices; Minimizer states keep all actions."""
    if sigma.player is not Owner.MAX:
        raise GameError("induce_mdp expects a Maximizer strategy")
    return _restrict(game, [sigma])


def induce_mc(game: Game, sigma: Strategy, tau: Strategy) -> Game:
    """Fix both players' choices, leaving a Markov chain."""
    if sigma.player is not Owner.MAX or tau.player is not Owner.MIN:
        raise GameError("induce_mc expects (Maximizer, Minimizer) strategies")
    return _restrict(game, [sigma, tau])


def is_chain(game: Game) -> bool:
    return all(len(a) == 1 for a in game.actions)


def make_absorbing(game: Game, states, kind: Kind = Kind.SINK) -> Game:
    """Turn ``states`` into targets or sinks (self-loop, no owner)."""
    states = set(states) - game.absorbing
    if not states:
        return game
    owners = list(game.owners)
    kinds = list(game.kinds)
    acts = list(game.actions)
    dists = list(game.delta)
    for s in states:
        owners[s] = None
        kinds[s] = kind
        acts[s] = (LOOP,)
        dists[s] = (((s, Fraction(1)),),)
    return game.replace(owners=tuple(owners), kinds=tuple(kinds), actions=tuple(acts), delta=tuple(dists))


def recover_strategies(game: Game, values, tol: float = 1e-7) -> tuple[Strategy, Strategy]:
    """Optimal strategies read off a value vector.

    The Minimizer takes any action attaining the minimum.  Value-optimal
    Maximizer actions can tie with actions that stay inside an end component
    forever, so the Maximizer picks, among its optimal actions, one that makes
    progress towards the targets: a backward search through the game where
    both players are restricted to their optimal actions.  States of value
    zero keep their first optimal action.  ``tol`` is the tie tolerance for
    float values; rational values are compared exactly.
    """
    exact = len(values) and isinstance(values[0], Fraction)
    eps = 0 if exact else tol
    optimal: list[list[str]] = []
    for s in range(game.n):
        owner = game.owners[s]
        if owner is None:
            optimal.append(list(game.actions[s]))
            continue
        vals = action_values(game, values, s)
        best = max(vals) if owner is Owner.MAX else min(vals)
        optimal.append([a for a, v in zip(game.actions[s], vals) if abs(v - best) <= eps])

    smin = {s: optimal[s][0] for s in game.states_of(Owner.MIN)}
    smax: dict[int, str] = {}
    done = set(game.targets)
    frontier = True
    while frontier:
        frontier = False
        for s in range(game.n):
            if s in done or game.owners[s] is None:
                continue
            hits = [a for a in optimal[s] if any(t in done for t in game.post(s, a))]
            if game.owners[s] is Owner.MAX and hits:
                smax[s] = hits[0]
            elif game.owners[s] is Owner.MIN and len(hits) == len(optimal[s]):
                pass
            else:
                continue
            done.add(s)
            frontier = True
    for s in game.states_of(Owner.MAX):
        smax.setdefault(s, optimal[s][0])
    return Strategy(Owner.MAX, smax), Strategy(Owner.MIN, smin)
