"""Structural analysis: end components, attractors, properness, MEC ordering."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from .game import Game, GameError, Owner, Strategy, induce_mdp


@dataclass(frozen=True)
class Mec:
    """A maximal end component.

    ``staying_actions[s]`` are the actions of ``s`` whose successors all lie in
    ``states``; every other action of a member state is an exiting pair.
    """

    states: frozenset[int]
    staying_actions: dict[int, tuple[str, ...]] = field(hash=False)
    exiting_pairs: tuple[tuple[int, str], ...]
    exit_states: frozenset[int]

    def owners(self, game: Game) -> set[Owner | None]:
        return {game.owners[s] for s in self.states}

    def is_absorbing(self, game: Game) -> bool:
        return len(self.states) == 1 and next(iter(self.states)) in game.absorbing

    def classify(self, game: Game) -> str:
        """One of ``absorbing``, ``max``, ``min`` or ``mixed``."""
        if self.is_absorbing(game):
            return "absorbing"
        owners = self.owners(game)
        if owners == {Owner.MAX}:
            return "max"
        if owners == {Owner.MIN}:
            return "min"
        return "mixed"


def _sccs(nodes: Iterable[int], edges: dict[int, set[int]]) -> list[frozenset[int]]:
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    for s, succ in edges.items():
        g.add_edges_from((s, t) for t in succ)
    return [frozenset(c) for c in nx.strongly_connected_components(g)]


def mec_decomposition(game: Game) -> list[Mec]:
    """All maximal end components, sorted by smallest member id.

    Iterative SCC refinement: drop actions that leave their SCC, drop states
    left without actions, recompute SCCs, until nothing changes.
    """
    alive = set(range(game.n))
    allowed: dict[int, list[int]] = {s: list(range(len(game.actions[s]))) for s in alive}

    while True:
        edges = {s: {t for i in allowed[s] for t, _ in game.delta[s][i]} for s in alive}
        comp_of = {}
        for comp in _sccs(alive, edges):
            for s in comp:
                comp_of[s] = comp
        changed = False
        for s in list(alive):
            keep = [i for i in allowed[s] if all(t in comp_of[s] for t, _ in game.delta[s][i])]
            if len(keep) != len(allowed[s]):
                allowed[s] = keep
                changed = True
        dead = [s for s in alive if not allowed[s]]
        if dead:
            alive.difference_update(dead)
            changed = True
        if not changed:
            break

    mecs = []
    for comp in _sccs(alive, {s: {t for i in allowed[s] for t, _ in game.delta[s][i]} for s in alive}):
        staying = {s: tuple(game.actions[s][i] for i in allowed[s]) for s in sorted(comp)}
        exiting = []
        exits: set[int] = set()
        for s in sorted(comp):
            for i, a in enumerate(game.actions[s]):
                if i in allowed[s]:
                    continue
                exiting.append((s, a))
                exits.update(t for t, _ in game.delta[s][i] if t not in comp)
        mecs.append(Mec(comp, staying, tuple(exiting), frozenset(exits)))
    mecs.sort(key=lambda m: min(m.states))
    return mecs


def nontrivial_mecs(game: Game, mecs: list[Mec] | None = None) -> list[Mec]:
    """MECs that are not a single target or sink."""
    if mecs is None:
        mecs = mec_decomposition(game)
    return [m for m in mecs if not m.is_absorbing(game)]


def is_stopping(game: Game) -> bool:
    return not nontrivial_mecs(game)


# -- reachability and attractors -----------------------------------------


def accessible_states(game: Game, sources: Iterable[int]) -> frozenset[int]:
    """Forward closure of ``sources`` under all actions."""
    seen = set(sources)
    queue = deque(seen)
    while queue:
        s = queue.popleft()
        for t in game.successors[s]:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return frozenset(seen)


def can_reach(game: Game, goal: Iterable[int]) -> frozenset[int]:
    """States with a graph path into ``goal``."""
    seen = set(goal)
    queue = deque(seen)
    while queue:
        t = queue.popleft()
        for s in game.predecessors[t]:
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return frozenset(seen)


def dead_states(game: Game) -> frozenset[int]:
    """States with no path to a target under any strategy pair."""
    return frozenset(range(game.n)) - can_reach(game, game.targets)


def _attractor(game: Game, goal: Iterable[int]) -> tuple[dict[int, int], dict[int, str]]:
    """Layered positive attractor of ``goal`` for the Maximizer.

    A Maximizer state joins once some action hits the current set with positive
    probability, a Minimizer state once all of its actions do.  Returns the
    layer of every attracted state and, for Maximizer states, the first action
    (in declaration order) that witnessed its entry.
    """
    layer = {s: 0 for s in goal}
    witness: dict[int, str] = {}
    frontier = sorted(layer)
    depth = 0
    while frontier:
        depth += 1
        current = set(layer)
        candidates = sorted({p for t in frontier for p in game.predecessors[t]} - current)
        added = []
        for s in candidates:
            hits = [any(t in current for t, _ in d) for d in game.delta[s]]
            owner = game.owners[s]
            if owner is Owner.MAX and any(hits):
                witness[s] = game.actions[s][hits.index(True)]
                added.append(s)
            elif owner is Owner.MIN and all(hits):
                added.append(s)
        for s in added:
            layer[s] = depth
        frontier = added
    return layer, witness


def prob0_states(game: Game) -> frozenset[int]:
    """States from which the Minimizer can keep the play away from all targets."""
    layer, _ = _attractor(game, game.targets)
    return frozenset(range(game.n)) - frozenset(layer)


def attractor_layers(game: Game) -> dict[int, int]:
    return _attractor(game, game.absorbing)[0]


def attractor_strategy(game: Game) -> Strategy:
    """Proper Maximizer strategy from a backwards BFS over targets and sinks."""
    layer, witness = _attractor(game, game.absorbing)
    missing = sorted(set(range(game.n)) - set(layer))
    if missing:
        names = [game.names[s] for s in missing]
        raise GameError(f"states cannot be forced into targets/sinks: {names}")
    return Strategy(Owner.MAX, {s: witness[s] for s in game.states_of(Owner.MAX)})


def improper_components(game: Game, sigma: Strategy) -> list[Mec]:
    """End components of ``game[sigma]`` that avoid all targets and sinks."""
    return nontrivial_mecs(induce_mdp(game, sigma))


def is_proper(game: Game, sigma: Strategy) -> bool:
    """True iff targets or sinks are reached almost surely against every Minimizer."""
    return not improper_components(game, sigma)


def mec_postorder(game: Game, mecs: list[Mec]) -> list[int]:
    """DFS post-order of the MEC quotient graph from the initial state.

    Non-MEC states are kept as their own quotient nodes so that paths through
    them still connect MECs.  MECs unreachable from the initial state follow
    in index order.  Because the quotient uses every action, mutually
    reachable MECs can occur and the order is then not a topological sort.
    """
    node_of = {}
    for i, m in enumerate(mecs):
        for s in m.states:
            node_of[s] = ("mec", i)
    for s in range(game.n):
        node_of.setdefault(s, ("state", s))
    members: dict[tuple, list[int]] = {}
    for s in range(game.n):
        members.setdefault(node_of[s], []).append(s)

    def children(node):
        out = set()
        for s in members[node]:
            for t in game.successors[s]:
                if node_of[t] != node:
                    out.add(node_of[t])
        return sorted(out, key=lambda x: (x[0] != "mec", x[1]))

    order: list[int] = []
    visited = set()
    start = node_of[game.initial]
    visited.add(start)
    stack = [(start, iter(children(start)))]
    while stack:
        node, it = stack[-1]
        nxt = next((c for c in it if c not in visited), None)
        if nxt is None:
            stack.pop()
            if node[0] == "mec":
                order.append(node[1])
            continue
        visited.add(nxt)
        stack.append((nxt, iter(children(nxt))))
    order.extend(i for i in range(len(mecs)) if ("mec", i) not in visited)
    return order
