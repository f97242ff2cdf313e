"""Quadratic programs whose zero-objective feasible points are the game values.

Two builders: Condon's program for games in his normal form, and the
improved program that accepts any 2Act game.  The improved program pins end
components through max/min selection constraints built from exit
probabilities, so it needs neither the stopping assumption nor the
half-probability and No1Act rewrites.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .game import Game, GameError, Owner
from .graph import Mec, mec_decomposition, nontrivial_mecs
from .linalg import absorption_system
from .transforms import cnf_violations, is_2act

DEFAULT_PAIR_CAP = 2**20


@dataclass(frozen=True)
class AffineExpr:
    """``constant + sum(coef * x[var])`` with distinct vars and nonzero coefficients."""

    constant: Fraction = Fraction(0)
    terms: tuple[tuple[int, Fraction], ...] = ()

    @staticmethod
    def build(coefs: dict[int, Fraction] | Iterable[tuple[int, Fraction]], constant=Fraction(0)) -> "AffineExpr":
        acc: dict[int, Fraction] = {}
        items = coefs.items() if isinstance(coefs, dict) else coefs
        for v, c in items:
            acc[v] = acc.get(v, Fraction(0)) + Fraction(c)
        return AffineExpr(Fraction(constant), tuple(sorted((v, c) for v, c in acc.items() if c != 0)))

    @staticmethod
    def var(v: int) -> "AffineExpr":
        return AffineExpr(Fraction(0), ((v, Fraction(1)),))

    @staticmethod
    def const(c) -> "AffineExpr":
        return AffineExpr(Fraction(c), ())

    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        return AffineExpr.build(list(self.terms) + list(other.terms), self.constant + other.constant)

    def __sub__(self, other: "AffineExpr") -> "AffineExpr":
        return self + other.scale(-1)

    def scale(self, c) -> "AffineExpr":
        c = Fraction(c)
        return AffineExpr.build([(v, c * k) for v, k in self.terms], c * self.constant)

    def evaluate(self, x: Sequence):
        if len(x) and isinstance(x[0], Fraction):
            return self.constant + sum((k * x[v] for v, k in self.terms), Fraction(0))
        return float(self.constant) + sum(float(k) * float(x[v]) for v, k in self.terms)

    @property
    def variables(self) -> set[int]:
        return {v for v, _ in self.terms}


@dataclass(frozen=True)
class LinearConstraint:
    lhs: AffineExpr
    rel: str  # "<=", "=", ">="
    rhs: AffineExpr
    label: str

    def residual(self, x) -> float:
        d = float(self.lhs.evaluate(x) - self.rhs.evaluate(x))
        if self.rel == "<=":
            return max(0.0, d)
        if self.rel == ">=":
            return max(0.0, -d)
        return abs(d)


@dataclass(frozen=True)
class SelectConstraint:
    """``x[var] = max(exprs)`` or ``min(exprs)``."""

    var: int
    kind: str  # "max" | "min"
    exprs: tuple[AffineExpr, ...]
    label: str

    def target(self, x):
        vals = [e.evaluate(x) for e in self.exprs]
        return max(vals) if self.kind == "max" else min(vals)


@dataclass
class QuadraticProgram:
    """Variables ``0..n_states-1`` are state values; auxiliary variables follow."""

    game: Game
    variant: str
    var_names: list[str]
    fixed: dict[int, Fraction] = field(default_factory=dict)
    linear: list[LinearConstraint] = field(default_factory=list)
    selects: list[SelectConstraint] = field(default_factory=list)
    objective: list[tuple[AffineExpr, AffineExpr]] = field(default_factory=list)
    objective_states: list[int] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return self.game.n

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def aux_variables(self) -> list[int]:
        return list(range(self.n_states, self.n_vars))

    def add_aux(self, name: str) -> int:
        self.var_names.append(name)
        return len(self.var_names) - 1


def _action_expr(game: Game, s: int, i: int) -> AffineExpr:
    return AffineExpr.build([(t, p) for t, p in game.delta[s][i]])


def _base_program(game: Game, variant: str) -> QuadraticProgram:
    qp = QuadraticProgram(game, variant, [f"v{s}" for s in range(game.n)])
    for s in sorted(game.targets):
        qp.fixed[s] = Fraction(1)
    for s in sorted(game.sinks):
        qp.fixed[s] = Fraction(0)
    return qp


def _add_choice_state(qp: QuadraticProgram, s: int) -> None:
    game = qp.game
    v = AffineExpr.var(s)
    rel = ">=" if game.owners[s] is Owner.MAX else "<="
    exprs = [_action_expr(game, s, i) for i in range(len(game.actions[s]))]
    for a, e in zip(game.actions[s], exprs):
        qp.linear.append(LinearConstraint(v, rel, e, f"{game.names[s]}:{a}"))
    qp.objective.append((v - exprs[0], v - exprs[1]))
    qp.objective_states.append(s)


def build_condon_qp(game: Game) -> QuadraticProgram:
    """Condon's program; the game must satisfy all four normal-form requirements."""
    bad = cnf_violations(game)
    if bad:
        raise GameError(f"game violates Condon's normal form: {', '.join(bad)}")
    qp = _base_program(game, "condon")
    for s in range(game.n):
        if s not in game.absorbing:
            _add_choice_state(qp, s)
    return qp


# -- end-component helpers -------------------------------------------------


def enumerate_local_strategy_pairs(game: Game, mec: Mec, cap: int | None = None):
    """All (sigma_T, tau_T) pairs on the MEC's states, Maximizer choices outermost.

    Each side is the lexicographic product of the per-state action lists in
    id order; the returned list has prod |Av(s)| entries.
    """
    states = sorted(mec.states)
    maxs = [s for s in states if game.owners[s] is Owner.MAX]
    mins = [s for s in states if game.owners[s] is Owner.MIN]
    total = 1
    for s in states:
        total *= len(game.actions[s])
    if cap is not None and total > cap:
        raise GameError(f"MEC with {len(states)} states has {total} local strategy pairs, cap is {cap}")
    sigmas = [dict(zip(maxs, c)) for c in itertools.product(*(game.actions[s] for s in maxs))]
    taus = [dict(zip(mins, c)) for c in itertools.product(*(game.actions[s] for s in mins))]
    return [(sg, tu) for sg in sigmas for tu in taus]


def mec_reach_probabilities(game: Game, mec: Mec, sigma_t: dict, tau_t: dict) -> dict[int, dict[int, Fraction]]:
    """Absorption probabilities into each exit state when the MEC plays (sigma_t, tau_t).

    Exits are treated as absorbing; MEC states that cannot reach any exit
    under the fixed choices get all-zero rows.
    """
    maxs = {s for s in mec.states if game.owners[s] is Owner.MAX}
    mins = {s for s in mec.states if game.owners[s] is Owner.MIN}
    if set(sigma_t) != maxs or set(tau_t) != mins:
        raise GameError("local strategies must cover exactly the MEC's states of each player")
    choice = {**sigma_t, **tau_t}
    dist = {s: game.dist(s, choice[s]) for s in mec.states}

    # states with a path to some exit under the fixed choices
    reach: set[int] = set()
    changed = True
    while changed:
        changed = False
        for s in mec.states:
            if s not in reach and any(t not in mec.states or t in reach for t, _ in dist[s]):
                reach.add(s)
                changed = True
    transient = sorted(reach)
    exits = sorted({t for s in transient for t, _ in dist[s] if t not in mec.states})
    out: dict[int, dict[int, Fraction]] = {s: {} for s in sorted(mec.states)}
    for e in exits:
        x = absorption_system(transient, lambda s: dist[s], {e: Fraction(1)})
        for s, p in x.items():
            if p:
                out[s][e] = p
    return out


def build_improved_qp(game: Game, mecs: list[Mec] | None = None, pair_cap: int = DEFAULT_PAIR_CAP) -> QuadraticProgram:
    """Improved program for any 2Act game, stopping or not."""
    if not is_2act(game):
        raise GameError("improved QP needs every state to have at most two actions (apply to_2act)")
    if mecs is None:
        mecs = mec_decomposition(game)
    inner = nontrivial_mecs(game, mecs)
    interior = {s for m in inner for s in m.states}
    qp = _base_program(game, "improved")
    n_pairs = 0

    for s in range(game.n):
        if s in game.absorbing or s in interior:
            continue
        if len(game.actions[s]) == 2:
            _add_choice_state(qp, s)
        else:
            qp.linear.append(
                LinearConstraint(AffineExpr.var(s), "=", _action_expr(game, s, 0), f"{game.names[s]}:{game.actions[s][0]}")
            )

    for k, mec in enumerate(inner):
        kind = mec.classify(game)
        states = sorted(mec.states)
        exits = [_action_expr(game, s, game.action_index(s, a)) for s, a in mec.exiting_pairs]
        if kind == "min" or not exits:
            for s in states:
                qp.linear.append(LinearConstraint(AffineExpr.var(s), "=", AffineExpr.const(0), f"mec{k}_zero:{game.names[s]}"))
        elif kind == "max":
            for s in states:
                qp.selects.append(SelectConstraint(s, "max", tuple(exits), f"mec{k}_bestexit:{game.names[s]}"))
        else:
            pairs = enumerate_local_strategy_pairs(game, mec, pair_cap)
            n_pairs += len(pairs)
            by_sigma: dict[tuple, list] = {}
            for sg, tu in pairs:
                probs = mec_reach_probabilities(game, mec, sg, tu)
                by_sigma.setdefault(tuple(sorted(sg.items())), []).append(probs)
            tops: dict[int, list[AffineExpr]] = {s: [] for s in states}
            for j, (sg, prob_list) in enumerate(by_sigma.items()):
                for s in states:
                    y = qp.add_aux(f"y{k}_{j}_{s}")
                    exprs = tuple(AffineExpr.build(probs[s]) for probs in prob_list)
                    qp.selects.append(SelectConstraint(y, "min", exprs, f"mec{k}_sigma{j}:{game.names[s]}"))
                    tops[s].append(AffineExpr.var(y))
            for s in states:
                qp.selects.append(SelectConstraint(s, "max", tuple(tops[s]), f"mec{k}_maxmin:{game.names[s]}"))
    qp.stats = {"mecs": len(inner), "strategy_pairs": n_pairs, "interior_states": len(interior)}
    return qp


# -- verification ----------------------------------------------------------


@dataclass
class QpSolutionReport:
    feasible: bool
    max_violation: float
    objective: float
    residuals: list[tuple[str, float]]


def complete_assignment(qp: QuadraticProgram, values: Sequence) -> list:
    """Extend state values with auxiliary values defined by their select constraints."""
    x = list(values)
    if len(x) == qp.n_vars:
        return x
    if len(x) != qp.n_states:
        raise ValueError(f"expected {qp.n_states} or {qp.n_vars} values, got {len(x)}")
    zero = Fraction(0) if x and isinstance(x[0], Fraction) else 0.0
    x += [zero] * (qp.n_vars - qp.n_states)
    for sel in qp.selects:
        if sel.var >= qp.n_states:
            x[sel.var] = sel.target(x)
    return x


def objective_value(qp: QuadraticProgram, x: Sequence):
    return sum((a.evaluate(x) * b.evaluate(x) for a, b in qp.objective), Fraction(0) if isinstance(x[0], Fraction) else 0.0)


def _gap(a, b) -> float:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return abs(float(a - b))
    return abs(float(a) - float(b))


def verify_solution(qp: QuadraticProgram, values: Sequence, tol: float = 1e-8) -> QpSolutionReport:
    """Evaluate every constraint and the objective at ``values``."""
    x = complete_assignment(qp, values)
    residuals: list[tuple[str, float]] = []
    for i, v in enumerate(x):
        fv = float(v)
        residuals.append((f"bound:{qp.var_names[i]}", max(0.0, -fv, fv - 1.0)))
    for i, c in qp.fixed.items():
        residuals.append((f"fix:{qp.var_names[i]}", _gap(x[i], c)))
    for con in qp.linear:
        residuals.append((con.label, con.residual(x)))
    for sel in qp.selects:
        residuals.append((sel.label, _gap(x[sel.var], sel.target(x))))
    worst = max((r for _, r in residuals), default=0.0)
    return QpSolutionReport(worst <= tol, worst, float(objective_value(qp, x)), residuals)


# -- LP export -------------------------------------------------------------


def _num(q) -> str:
    s = repr(float(q))
    return s[:-2] if s.endswith(".0") else s


def _terms(items: list[tuple[Fraction, str]]) -> str:
    parts = []
    for c, text in items:
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = _num(abs(c))
        body = f"{mag} {text}" if text else mag
        parts.append(f"{sign} {body}" if parts or sign == "-" else body)
    return " ".join(parts) if parts else "0"


def _row(qp: QuadraticProgram, expr: AffineExpr, extra: Iterable[tuple[Fraction, str]] = ()) -> str:
    items = [(k, qp.var_names[v]) for v, k in expr.terms] + list(extra)
    return _terms(items)


def export_lp(qp: QuadraticProgram) -> str:
    """CPLEX-LP text of the program; select constraints become big-M binaries with M = 1."""
    names = qp.var_names
    out = [f"\\ sgsolve {qp.variant} program"]
    for s in range(qp.n_states):
        out.append(f"\\ {names[s]} = {qp.game.names[s]}")

    lin: dict[int, Fraction] = {}
    quad: dict[tuple[int, int], Fraction] = {}
    const = Fraction(0)
    for a, b in qp.objective:
        const += a.constant * b.constant
        for v, k in b.terms:
            lin[v] = lin.get(v, Fraction(0)) + a.constant * k
        for v, k in a.terms:
            lin[v] = lin.get(v, Fraction(0)) + b.constant * k
        for (i, ki), (j, kj) in itertools.product(a.terms, b.terms):
            key = (min(i, j), max(i, j))
            quad[key] = quad.get(key, Fraction(0)) + ki * kj
    obj_items = [(c, names[v]) for v, c in sorted(lin.items())]
    quad_items = [(2 * c, f"{names[i]} ^ 2" if i == j else f"{names[i]} * {names[j]}") for (i, j), c in sorted(quad.items())]
    has_lin = any(c != 0 for c, _ in obj_items)
    has_quad = any(c != 0 for c, _ in quad_items)
    line = " obj: " + (_terms(obj_items) if has_lin or not has_quad else "")
    if has_quad:
        line += (" + " if has_lin else "") + "[ " + _terms(quad_items) + " ] / 2"
    if const:
        line += f" {'-' if const < 0 else '+'} {_num(abs(const))}"
    out += ["Minimize", line, "Subject To"]

    for i, c in sorted(qp.fixed.items()):
        out.append(f" fix_{names[i]}: {names[i]} = {_num(c)}")
    rel_map = {"<=": "<=", ">=": ">=", "=": "="}
    for k, con in enumerate(qp.linear):
        diff = con.lhs - con.rhs
        out.append(f" c{k}: {_row(qp, diff)} {rel_map[con.rel]} {_num(-diff.constant)}")

    binaries: list[str] = []
    for k, sel in enumerate(qp.selects):
        v = AffineExpr.var(sel.var)
        bs = []
        for i, e in enumerate(sel.exprs):
            b = f"b{len(binaries)}"
            binaries.append(b)
            bs.append(b)
            diff = v - e
            if sel.kind == "max":
                out.append(f" s{k}_ge{i}: {_row(qp, diff)} >= {_num(-diff.constant)}")
                out.append(f" s{k}_le{i}: {_row(qp, diff, [(Fraction(1), b)])} <= {_num(1 - diff.constant)}")
            else:
                out.append(f" s{k}_le{i}: {_row(qp, diff)} <= {_num(-diff.constant)}")
                out.append(f" s{k}_ge{i}: {_row(qp, diff, [(Fraction(-1), b)])} >= {_num(-1 - diff.constant)}")
        out.append(f" s{k}_one: {_terms([(Fraction(1), b) for b in bs])} = 1")

    out.append("Bounds")
    for v in names:
        out.append(f" 0 <= {v} <= 1")
    if binaries:
        out.append("Binaries")
        out.append(" " + " ".join(binaries))
    out.append("End")
    return "\n".join(out) + "\n"
