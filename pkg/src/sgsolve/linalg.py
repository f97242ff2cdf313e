"""Exact rational linear solves for absorbing-chain computations."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence


class SingularSystemError(ArithmeticError):
    pass


def solve_sparse(rows: Sequence[Mapping[int, Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    """Solve ``A x = b`` exactly, ``A`` given as one ``{column: coefficient}`` dict per row.

    Gauss-Jordan elimination with the first nonzero pivot in each column;
    with exact arithmetic no pivoting strategy is needed for stability.
    """
    n = len(rows)
    work = [dict(r) for r in rows]
    b = [Fraction(v) for v in rhs]
    if len(b) != n:
        raise ValueError("row/rhs length mismatch")
    pivot_row_of: dict[int, int] = {}
    used = [False] * n
    for col in range(n):
        piv = next((i for i in range(n) if not used[i] and work[i].get(col, 0) != 0), None)
        if piv is None:
            raise SingularSystemError(f"no pivot in column {col}")
        used[piv] = True
        pivot_row_of[col] = piv
        prow = work[piv]
        inv = 1 / prow[col]
        for k in list(prow):
            prow[k] *= inv
        b[piv] *= inv
        for i in range(n):
            if i == piv:
                continue
            f = work[i].get(col)
            if not f:
                continue
            row = work[i]
            for k, v in prow.items():
                nv = row.get(k, 0) - f * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
            b[i] -= f * b[piv]
    return [b[pivot_row_of[col]] for col in range(n)]


def absorption_system(
    transient: Sequence[int],
    dist_of,
    reward: Mapping[int, Fraction],
) -> dict[int, Fraction]:
    """Solve ``x(s) = sum_t P(s,t) x(t)`` over ``transient`` states.

    ``dist_of(s)`` yields ``(t, p)`` pairs; successors outside ``transient``
    contribute ``reward.get(t, 0)``.  The caller guarantees the transient
    states leave almost surely, so ``I - Q`` is nonsingular.
    """
    pos = {s: i for i, s in enumerate(transient)}
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    for s in transient:
        row: dict[int, Fraction] = {pos[s]: Fraction(1)}
        c = Fraction(0)
        for t, p in dist_of(s):
            j = pos.get(t)
            if j is None:
                c += p * reward.get(t, 0)
            else:
                row[j] = row.get(j, 0) - p
                if row[j] == 0:
                    del row[j]
        rows.append(row)
        rhs.append(c)
    x = solve_sparse(rows, rhs)
    return {s: x[i] for s, i in pos.items()}
