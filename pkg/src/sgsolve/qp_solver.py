"""Certifying local solver for the programs built in :mod:`sgsolve.qp`.

Projected descent on a penalised objective with max/min branches fixed
between re-resolutions, followed by an active-set polish: each objective pair
contributes the equation of its currently smaller factor and each select
constraint its currently chosen branch, giving a square linear system.  A
point is only reported as a solution after ``verify_solution`` accepts it
with objective at most ``tolerance``.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .game import Game, make_absorbing, recover_strategies
from .graph import dead_states
from .mdp import ViConfig, unguaranteed_vi
from .qp import QuadraticProgram, build_improved_qp, complete_assignment, verify_solution
from .result import SolveResult
from .transforms import identity, is_2act, to_2act


@dataclass(frozen=True)
class QpSolverConfig:
    tolerance: float = 1e-9
    feasibility_tolerance: float = 1e-8
    max_iterations: int = 100_000
    restarts: int = 16
    step: float = 0.5
    penalty: float = 10.0
    penalty_growth: float = 1.5
    penalty_max: float = 1e6
    seed: int = 0
    select_every: int = 50
    stall_window: int = 500
    stall_ratio: float = 1e-12
    polish: bool = True
    warm_start: tuple | None = None

    def __post_init__(self):
        if not (self.tolerance > 0 and self.feasibility_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


def worker_count() -> int:
    """Worker cap from SGSOLVE_THREADS: unset means 1, 0 means one per CPU."""
    raw = os.environ.get("SGSOLVE_THREADS", "1")
    n = int(raw)
    return n if n > 0 else (os.cpu_count() or 1)


class _Dense:
    """The program as dense float arrays."""

    def __init__(self, qp: QuadraticProgram):
        nv = qp.n_vars
        self.nv = nv

        def vec(expr):
            row = np.zeros(nv)
            for v, k in expr.terms:
                row[v] += float(k)
            return row, float(expr.constant)

        self.fix_idx = np.array(sorted(qp.fixed), dtype=np.intp)
        self.fix_val = np.array([float(qp.fixed[i]) for i in sorted(qp.fixed)])

        eq_rows, eq_rhs, le_rows, le_rhs = [], [], [], []
        for con in qp.linear:
            r, c = vec(con.lhs - con.rhs)
            if con.rel == "=":
                eq_rows.append(r)
                eq_rhs.append(-c)
            elif con.rel == "<=":
                le_rows.append(r)
                le_rhs.append(-c)
            else:
                le_rows.append(-r)
                le_rhs.append(c)
        self.E = np.array(eq_rows).reshape(-1, nv)
        self.e = np.array(eq_rhs)
        self.G = np.array(le_rows).reshape(-1, nv)
        self.g = np.array(le_rhs)

        self.sel = []
        for s in qp.selects:
            rows = [vec(e) for e in s.exprs]
            A = np.array([r for r, _ in rows]).reshape(-1, nv)
            c = np.array([k for _, k in rows])
            self.sel.append((s.var, 1.0 if s.kind == "max" else -1.0, A, c))

        pa = [vec(a) for a, _ in qp.objective]
        pb = [vec(b) for _, b in qp.objective]
        self.PA = np.array([r for r, _ in pa]).reshape(-1, nv)
        self.pa = np.array([k for _, k in pa])
        self.PB = np.array([r for r, _ in pb]).reshape(-1, nv)
        self.pb = np.array([k for _, k in pb])

    def objective(self, x):
        return float(np.dot(self.PA @ x + self.pa, self.PB @ x + self.pb))

    def branches(self, x):
        return [int(np.argmax(sign * (A @ x + c))) for _, sign, A, c in self.sel]

    def penalty_grad(self, x, branch, mu):
        fa = self.PA @ x + self.pa
        fb = self.PB @ x + self.pb
        val = float(fa @ fb)
        grad = self.PA.T @ fb + self.PB.T @ fa
        pen = 0.0
        r = self.E @ x - self.e
        pen += float(r @ r)
        gp = 2 * self.E.T @ r
        q = np.maximum(self.G @ x - self.g, 0.0)
        pen += float(q @ q)
        gp += 2 * self.G.T @ q
        for (var, sign, A, c), k in zip(self.sel, branch):
            vals = A @ x + c
            d = x[var] - vals[k]
            pen += d * d
            gp[var] += 2 * d
            gp -= 2 * d * A[k]
            # the selected variable may not fall on the wrong side of any branch
            w = np.maximum(sign * (vals - x[var]), 0.0)
            pen += float(w @ w)
            gp += 2 * sign * (A.T @ w)
            gp[var] -= 2 * sign * w.sum()
        return val + mu * pen, grad + mu * gp

    def violation(self, x, branch) -> float:
        """Largest violation of the linear pieces of the current branch."""
        worst = 0.0
        if len(self.e):
            worst = max(worst, float(np.max(np.abs(self.E @ x - self.e))))
        if len(self.g):
            worst = max(worst, float(np.max(self.G @ x - self.g)))
        for (var, sign, A, c), k in zip(self.sel, branch):
            worst = max(worst, abs(float(x[var] - (A[k] @ x + c[k]))))
        return worst

    def project(self, x, branch, sweeps=3):
        """Averaged projections onto the linear pieces of the current branch."""
        for _ in range(sweeps):
            x[self.fix_idx] = self.fix_val
            if len(self.e):
                r = self.E @ x - self.e
                nrm = np.einsum("ij,ij->i", self.E, self.E)
                ok = nrm > 0
                x -= (self.E[ok].T @ (r[ok] / nrm[ok])) / max(1, ok.sum())
            if len(self.g):
                q = np.maximum(self.G @ x - self.g, 0.0)
                nrm = np.einsum("ij,ij->i", self.G, self.G)
                ok = (nrm > 0) & (q > 0)
                if ok.any():
                    x -= (self.G[ok].T @ (q[ok] / nrm[ok])) / ok.sum()
            for (var, sign, A, c), k in zip(self.sel, branch):
                row = -A[k].copy()
                row[var] += 1.0
                d = x[var] - (A[k] @ x + c[k])
                nrm = row @ row
                if nrm > 0:
                    x -= 0.5 * d / nrm * row
            np.clip(x, 0.0, 1.0, out=x)
        x[self.fix_idx] = self.fix_val
        return x

    def polish(self, x):
        """Solve the square system of currently active equations."""
        rows, rhs = [], []
        for i, v in zip(self.fix_idx, self.fix_val):
            r = np.zeros(self.nv)
            r[i] = 1.0
            rows.append(r)
            rhs.append(v)
        rows.extend(self.E)
        rhs.extend(self.e)
        fa = self.PA @ x + self.pa
        fb = self.PB @ x + self.pb
        for k in range(len(fa)):
            if abs(fa[k]) <= abs(fb[k]):
                rows.append(self.PA[k])
                rhs.append(-self.pa[k])
            else:
                rows.append(self.PB[k])
                rhs.append(-self.pb[k])
        for (var, sign, A, c), k in zip(self.sel, self.branches(x)):
            r = -A[k].copy()
            r[var] += 1.0
            rows.append(r)
            rhs.append(c[k])
        M = np.array(rows).reshape(-1, self.nv)
        sol, *_ = np.linalg.lstsq(M, np.array(rhs), rcond=None)
        return np.clip(sol, 0.0, 1.0)


def _certify(qp, x, config):
    rep = verify_solution(qp, list(x), config.feasibility_tolerance)
    ok = rep.feasible and rep.objective <= config.tolerance
    return ok, rep


def _score(rep) -> tuple:
    # feasible points first, then by objective; infeasible ones by violation
    if rep.feasible:
        return (0, rep.objective)
    return (1, rep.max_violation)


def _run_start(qp: QuadraticProgram, dense: _Dense, x: np.ndarray, config: QpSolverConfig):
    """One descent from ``x``; returns (success, point, report, iterations)."""
    mu = config.penalty
    best = None
    branch = dense.branches(x)
    x = dense.project(x.copy(), branch)
    hist = []
    for it in range(1, config.max_iterations + 1):
        if it % config.select_every == 0:
            branch = dense.branches(x)
            if config.polish:
                xp = dense.polish(x)
                ok, rep = _certify(qp, xp, config)
                if ok:
                    return True, xp, rep, it
                score = _score(rep)
                if best is None or score < best[0]:
                    best = (score, xp, rep)
            if dense.violation(x, branch) > config.feasibility_tolerance:
                grown = min(mu * config.penalty_growth, config.penalty_max)
                if grown != mu:
                    mu = grown
                    hist.clear()
        val, grad = dense.penalty_grad(x, branch, mu)
        eta = config.step / np.sqrt(1.0 + it / config.select_every)
        gn = np.linalg.norm(grad)
        if gn > 0:
            x = x - eta * grad / max(1.0, gn)
        np.clip(x, 0.0, 1.0, out=x)
        x = dense.project(x, branch)
        hist.append(val)
        if len(hist) > config.stall_window:
            old = hist[-config.stall_window - 1]
            if old - val <= config.stall_ratio * max(abs(old), 1e-300):
                break
    ok, rep = _certify(qp, x, config)
    if ok:
        return True, x, rep, it
    score = _score(rep)
    if best is None or score < best[0]:
        best = (score, x, rep)
    return False, best[1], best[2], it


def _start_point(qp: QuadraticProgram, k: int, config: QpSolverConfig) -> np.ndarray:
    if k == 0 and config.warm_start is not None:
        ws = [min(max(float(v), 0.0), 1.0) for v in config.warm_start]
        return np.array(complete_assignment(qp, ws), dtype=float)
    rng = np.random.default_rng(config.seed + k)
    return rng.uniform(0.05, 0.95, size=qp.n_vars)


def solve_qp(qp: QuadraticProgram, config: QpSolverConfig = QpSolverConfig()) -> SolveResult:
    """Run restarts until one certifies; restart 0 uses the warm start if given.

    Restarts are evaluated in batches of ``worker_count()``; the accepted
    success is always the one with the smallest restart index, so the result
    does not depend on the worker count.
    """
    t0 = time.perf_counter()
    dense = _Dense(qp)
    workers = worker_count()
    outcomes = {}
    winner = None
    total_iters = 0

    def job(k):
        return _run_start(qp, dense, _start_point(qp, k, config), config)

    k = 0
    while k < config.restarts and winner is None:
        batch = list(range(k, min(k + workers, config.restarts)))
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(job, batch))
        else:
            results = [job(batch[0])]
        for idx, res in zip(batch, results):
            outcomes[idx] = res
            total_iters += res[3]
            if res[0] and winner is None:
                winner = idx
        k = batch[-1] + 1

    if winner is not None:
        ok, x, rep, _ = outcomes[winner]
    else:
        idx = min(outcomes, key=lambda i: (outcomes[i][2].objective + outcomes[i][2].max_violation, i))
        ok, x, rep, _ = outcomes[idx]
    values = np.asarray(x[: qp.n_states], dtype=float)
    smax, smin = recover_strategies(qp.game, values)
    return SolveResult(
        values=values,
        maximizer_strategy=smax,
        minimizer_strategy=smin,
        method=f"qp-{qp.variant}",
        guarantee="epsilon" if ok else "unguaranteed",
        success=ok,
        stats={
            "objective": rep.objective,
            "max_violation": rep.max_violation,
            "restarts_used": len(outcomes),
            "accepted_restart": winner,
            "iterations": total_iters,
            "wall_time": time.perf_counter() - t0,
            "worst_residuals": sorted(rep.residuals, key=lambda r: -r[1])[:5] if not ok else [],
        },
    )


def warm_start_values(game: Game, epsilon: float = 1e-6, max_iterations: int = 1_000_000) -> np.ndarray:
    """Unguaranteed value iteration on the whole game; a lower bound, maybe QP-infeasible."""
    return unguaranteed_vi(game, ViConfig(epsilon, max_iterations)).values


def solve_game_qp(
    game: Game,
    config: QpSolverConfig = QpSolverConfig(),
    preprocess: bool = True,
    warm_start: str | None = None,
) -> SolveResult:
    """Full pipeline: dead states to sinks, 2Act if needed, improved program, local solve."""
    base = make_absorbing(game, dead_states(game)) if preprocess else game
    tr = identity(base) if is_2act(base) else to_2act(base)
    qp = build_improved_qp(tr.game)
    if warm_start == "vi":
        ws = warm_start_values(base, 1e-6)
        full = [ws[o] if o is not None else ws[tr.aux_parent[i]] for i, o in enumerate(tr.origin_map)]
        config = replace(config, warm_start=tuple(full))
    elif warm_start is not None:
        raise ValueError(f"unknown warm start {warm_start!r}")
    res = solve_qp(qp, config)
    values = np.array([res.values[i] for i, o in enumerate(tr.origin_map) if o is not None])
    smax, smin = recover_strategies(game, values)
    res.values = values
    res.maximizer_strategy, res.minimizer_strategy = smax, smin
    res.stats.update(qp.stats)
    res.stats["warm_start"] = warm_start
    return res
