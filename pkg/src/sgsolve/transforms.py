"""Rewrites towards Condon's normal form and the value-preserving reductions back.

Every forward transform keeps original states at their ids and appends
auxiliary states after them, so ``origin_map[i] == i`` for original states and
``None`` for auxiliary ones.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .game import LOOP, Distribution, Game, GameError, Kind, Owner
from .graph import is_stopping, nontrivial_mecs


@dataclass(frozen=True)
class TransformResult:
    game: Game
    origin_map: tuple[int | None, ...]
    # auxiliary state -> original state whose structure it encodes
    aux_parent: dict[int, int] = field(default_factory=dict, hash=False)

    @property
    def n_original(self) -> int:
        return sum(o is not None for o in self.origin_map)

    def original_values(self, values):
        return [values[i] for i, o in enumerate(self.origin_map) if o is not None]


class _Builder:
    """Mutable copy of a game that only appends states."""

    def __init__(self, game: Game):
        self.names = list(game.names)
        self.owners = list(game.owners)
        self.kinds = list(game.kinds)
        self.actions = [list(a) for a in game.actions]
        self.delta = [list(d) for d in game.delta]
        self.initial = game.initial
        self.n0 = game.n
        self.parent: dict[int, int] = {}
        self._taken = set(self.names)

    def add_state(self, base: str, owner: Owner | None, kind: Kind = Kind.NORMAL, parent: int | None = None) -> int:
        name = base
        k = 1
        while name in self._taken:
            name = f"{base}_{k}"
            k += 1
        self._taken.add(name)
        self.names.append(name)
        self.owners.append(owner)
        self.kinds.append(kind)
        if kind is Kind.NORMAL:
            self.actions.append([])
            self.delta.append([])
        else:
            s = len(self.names) - 1
            self.actions.append([LOOP])
            self.delta.append([((s, Fraction(1)),)])
        s = len(self.names) - 1
        if parent is not None:
            self.parent[s] = parent
        return s

    def absorbing_of(self, kind: Kind) -> int:
        for s, k in enumerate(self.kinds):
            if k is kind:
                return s
        return self.add_state(f"__{kind.value}", None, kind)

    def build(self) -> TransformResult:
        game = Game(
            names=tuple(self.names),
            owners=tuple(self.owners),
            kinds=tuple(self.kinds),
            initial=self.initial,
            actions=tuple(tuple(a) for a in self.actions),
            delta=tuple(tuple(d) for d in self.delta),
        )
        origin = tuple(i if i < self.n0 else None for i in range(game.n))
        return TransformResult(game, origin, dict(self.parent))


def _dist(items) -> Distribution:
    merged: dict[int, Fraction] = {}
    for t, p in items:
        merged[t] = merged.get(t, Fraction(0)) + p
    return tuple(sorted((t, p) for t, p in merged.items() if p))


def identity(game: Game) -> TransformResult:
    return TransformResult(game, tuple(range(game.n)), {})


# -- predicates ----------------------------------------------------------


def is_2act(game: Game) -> bool:
    return all(len(a) <= 2 for a in game.actions)


def is_half_probs(game: Game) -> bool:
    return all(p in (Fraction(1, 2), Fraction(1)) for ds in game.delta for d in ds for _, p in d)


def is_no1act(game: Game) -> bool:
    return all(len(game.actions[s]) != 1 or s in game.absorbing for s in range(game.n))


def cnf_violations(game: Game) -> list[str]:
    """Names of the Condon-normal-form requirements the game violates."""
    out = []
    if not is_2act(game):
        out.append("2Act")
    if not is_half_probs(game):
        out.append("HalfProbs")
    if not is_stopping(game):
        out.append("Stopping")
    if not is_no1act(game):
        out.append("No1Act")
    return out


# -- forward transforms --------------------------------------------------


def to_2act(game: Game) -> TransformResult:
    """Split states with more than two actions into a tree of same-owner states.

    A group of k actions keeps the first k//2 on the left and the rest on the
    right; a group of one action is that action, larger groups become an
    auxiliary state.  Three actions give ``{a1, ->aux}``, ``aux = {a2, a3}``.
    """
    b = _Builder(game)
    for s in range(game.n):
        if len(game.actions[s]) <= 2:
            continue
        items = list(zip(game.actions[s], game.delta[s]))
        counter = [0]

        def node(group):
            # returns (action name, distribution) for one branch of the parent
            if len(group) == 1:
                return group[0]
            counter[0] += 1
            aux = b.add_state(f"{game.names[s]}__2act{counter[0]}", game.owners[s], parent=s)
            fill(aux, group)
            return (f"to_{b.names[aux]}", ((aux, Fraction(1)),))

        def fill(state, group):
            k = len(group)
            left, right = group[: k // 2], group[k // 2:]
            branches = [node(left), node(right)] if k > 2 else group
            b.actions[state] = [a for a, _ in branches]
            b.delta[state] = [d for _, d in branches]

        fill(s, items)
    return b.build()


def to_no1act(game: Game) -> TransformResult:
    """Give every single-action state a second action that never helps its owner."""
    b = _Builder(game)
    for s in range(game.n):
        if s in game.absorbing or len(game.actions[s]) != 1:
            continue
        if game.owners[s] is Owner.MAX:
            dest = b.absorbing_of(Kind.SINK)
        else:
            dest = b.absorbing_of(Kind.TARGET)
        name = "no1act"
        while name in b.actions[s]:
            name += "_"
        b.actions[s].append(name)
        b.delta[s].append(((dest, Fraction(1)),))
    return b.build()


def _dyadic_bits(p: Fraction) -> int | None:
    q = p.denominator
    if q & (q - 1):
        return None
    return q.bit_length() - 1


def to_half_probs(game: Game, max_bits: int = 32) -> TransformResult:
    """Encode dyadic distributions with binary trees of one-action auxiliary states.

    The distribution is laid out as 2**depth equally likely leaves, successors
    in id order; every subtree whose leaves share one successor collapses to
    that successor.
    """
    b = _Builder(game)
    for s in range(game.n):
        for i, (a, d) in enumerate(zip(game.actions[s], game.delta[s])):
            if all(p in (Fraction(1, 2), Fraction(1)) for _, p in d):
                continue
            depth = 0
            for t, p in d:
                bits = _dyadic_bits(p)
                if bits is None or bits > max_bits:
                    raise GameError(
                        f"non-dyadic probability {p} at ({game.names[s]},{a})->{game.names[t]}"
                        if bits is None else
                        f"probability {p} at ({game.names[s]},{a}) needs more than {max_bits} bits"
                    )
                depth = max(depth, bits)
            # cumulative leaf boundaries
            bounds = []
            acc = 0
            for t, p in d:
                acc += int(p * 2**depth)
                bounds.append((acc, t))
            counter = [0]

            def owner_at(lo: int) -> int:
                return next(t for hi, t in bounds if lo < hi)

            def subtree(lo: int, hi: int) -> int:
                first, last = owner_at(lo), owner_at(hi - 1)
                if first == last:
                    return first
                counter[0] += 1
                aux = b.add_state(f"{game.names[s]}__{a}__h{counter[0]}", game.owners[s], parent=s)
                b.actions[aux] = ["h"]
                b.delta[aux] = [split(lo, hi)]
                return aux

            def split(lo: int, hi: int) -> Distribution:
                mid = (lo + hi) // 2
                half = Fraction(1, 2)
                return _dist([(subtree(lo, mid), half), (subtree(mid, hi), half)])

            b.delta[s][i] = split(0, 2**depth)
    return b.build()


def to_stopping(game: Game, m: int, mec_only: bool = True) -> TransformResult:
    """Route actions through a chain of m states that leaks 2**-m to a sink.

    Chain state k moves with probability 1/2 to the original distribution and
    1/2 to chain state k+1; the last chain state sends its second half to a
    sink.  Non-Dirac distributions are carried by one shared auxiliary state.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if m <= 2 * (game.n - 1):
        warnings.warn(f"m={m} does not satisfy m > 2(|S|-1) = {2 * (game.n - 1)}", stacklevel=2)
    if mec_only:
        affected = sorted({s for mec in nontrivial_mecs(game) for s in mec.states})
    else:
        affected = [s for s in range(game.n) if s not in game.absorbing]
    if not affected:
        return identity(game)
    b = _Builder(game)
    sink = b.absorbing_of(Kind.SINK)
    half = Fraction(1, 2)
    for s in affected:
        for i, (a, d) in enumerate(zip(game.actions[s], game.delta[s])):
            base = f"{game.names[s]}__{a}"
            if len(d) == 1:
                onward = d[0][0]
            else:
                onward = b.add_state(f"{base}__d", game.owners[s], parent=s)
                b.actions[onward] = ["d"]
                b.delta[onward] = [d]
            chain = [b.add_state(f"{base}__e{k}", game.owners[s], parent=s) for k in range(1, m + 1)]
            for k, c in enumerate(chain):
                nxt = chain[k + 1] if k + 1 < m else sink
                b.actions[c] = ["e"]
                b.delta[c] = [_dist([(onward, half), (nxt, half)])]
            b.delta[s][i] = ((chain[0], Fraction(1)),)
    return b.build()


def to_cnf(game: Game, m: int, mec_only: bool = True, max_bits: int = 64) -> TransformResult:
    """to_no1act . to_2act . to_half_probs . to_stopping, with composed origin maps."""
    result = identity(game)
    for step in (
        lambda g: to_stopping(g, m, mec_only),
        lambda g: to_half_probs(g, max_bits),
        to_2act,
        to_no1act,
    ):
        result = compose(result, step(result.game))
    return result


def compose(first: TransformResult, second: TransformResult) -> TransformResult:
    origin = tuple(first.origin_map[o] if o is not None else None for o in second.origin_map)
    parent = dict(first.aux_parent)
    for s, p in second.aux_parent.items():
        orig = first.origin_map[p]
        parent[s] = orig if orig is not None else first.aux_parent.get(p, p)
    return TransformResult(second.game, origin, parent)


# -- backward reductions -------------------------------------------------


def eliminate_single_action_state(game: Game, v: int) -> Game:
    """Remove a one-action state by routing its incoming mass to its successors.

    Every transition ``(w, a) -> v`` with probability q is replaced by
    ``q * delta(v, t)`` towards each successor t of v.  State ids above v
    shift down by one.
    """
    if not 0 <= v < game.n:
        raise GameError(f"unknown state {v}")
    if v in game.absorbing:
        raise GameError(f"cannot eliminate absorbing state {game.names[v]}")
    if v == game.initial:
        raise GameError(f"cannot eliminate the initial state {game.names[v]}")
    if len(game.actions[v]) != 1:
        raise GameError(f"state {game.names[v]} has {len(game.actions[v])} actions, expected 1")
    dv = game.delta[v][0]
    if any(t == v for t, _ in dv):
        raise GameError(f"state {game.names[v]} can lead back to itself")

    def shift(t: int) -> int:
        return t - 1 if t > v else t

    delta = []
    for s in range(game.n):
        if s == v:
            continue
        new_ds = []
        for d in game.delta[s]:
            q = dict(d).get(v)
            items = [(t, p) for t, p in d if t != v]
            if q is not None:
                items += [(t, q * p) for t, p in dv]
            new_ds.append(_dist((shift(t), p) for t, p in items))
        delta.append(tuple(new_ds))
    keep = [s for s in range(game.n) if s != v]
    return Game(
        names=tuple(game.names[s] for s in keep),
        owners=tuple(game.owners[s] for s in keep),
        kinds=tuple(game.kinds[s] for s in keep),
        initial=shift(game.initial),
        actions=tuple(game.actions[s] for s in keep),
        delta=tuple(delta),
    )


def undo_half_probs(result: TransformResult) -> Game:
    """Eliminate every auxiliary one-action state of a transform result.

    Auxiliary states sit after the original ones, so eliminating them from the
    highest id down leaves original ids untouched.
    """
    game = result.game
    for v in sorted((i for i, o in enumerate(result.origin_map) if o is None), reverse=True):
        if v in game.absorbing:
            raise GameError(f"auxiliary state {game.names[v]} is absorbing and cannot be eliminated")
        game = eliminate_single_action_state(game, v)
    return game
