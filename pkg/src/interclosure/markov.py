"""Finite Markov chains and the one-step joint distribution.

Kernels are column-stochastic: ``P[x', x] = p(x'|x)``.  Arrays are indexed
from 0; states handed to or returned from user-facing helpers (maps,
partitions, witness tables, error messages) are 1-based.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    ColumnSumViolation,
    DimensionMismatch,
    InputError,
    NegativeEntry,
    NonSquare,
    NonUniqueStationary,
    NumericalFailure,
    UnknownVariable,
)

STOCHASTIC_TOL = 1e-9


def parse_entry(value):
    """Turn a file/user entry into a ``Fraction`` when it is exact, else a float.

    Accepts ints, ``Fraction`` and strings like ``"3/6"`` or ``"0.25"``.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return float(value)


def _freeze(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """Validated column-stochastic kernel.

    ``exact`` holds the entries as Fractions when every input entry was
    exact (ints, Fractions or fraction strings); it is ``None`` otherwise.
    """

    entries: np.ndarray
    exact: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", _freeze(self.entries))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def apply(self, p):
        return self.entries @ np.asarray(p, dtype=float)

    def to_rows(self):
        """Rows ``x'`` as fraction strings (exact mode) or floats."""
        if self.exact is not None:
            return [[_fraction_str(v) for v in row] for row in self.exact]
        return [[float(v) for v in row] for row in self.entries]


def _fraction_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def validate_stochastic_matrix(entries, tol: float = STOCHASTIC_TOL) -> StochasticMatrix:
    """Validate a square array of probabilities with columns summing to one."""
    if isinstance(entries, StochasticMatrix):
        return entries
    if isinstance(entries, np.ndarray) and entries.dtype.kind in "fiu":
        return _validate_float(entries.astype(float), tol)
    rows = [list(r) for r in entries]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise NonSquare(f"expected a square matrix, got row lengths {[len(r) for r in rows]}")
    parsed = [[parse_entry(v) for v in r] for r in rows]
    if not all(isinstance(v, Fraction) for r in parsed for v in r):
        return _validate_float(np.array([[float(v) for v in r] for r in parsed]), tol)
    for i, r in enumerate(parsed):
        for j, v in enumerate(r):
            if v < 0:
                raise NegativeEntry(i + 1, j + 1, v)
    for j in range(n):
        total = sum(parsed[i][j] for i in range(n))
        if total != 1:
            raise ColumnSumViolation(j + 1, total)
    return StochasticMatrix(
        np.array([[float(v) for v in r] for r in parsed]),
        tuple(tuple(r) for r in parsed),
    )


def _validate_float(arr: np.ndarray, tol: float) -> StochasticMatrix:
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise NonSquare(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("kernel contains non-finite entries")
    neg = np.argwhere(arr < 0)
    if len(neg):
        i, j = neg[0]
        raise NegativeEntry(int(i) + 1, int(j) + 1, float(arr[i, j]))
    sums = arr.sum(axis=0)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if len(bad):
        raise ColumnSumViolation(int(bad[0]) + 1, float(sums[bad[0]]))
    return StochasticMatrix(arr)


@dataclass(frozen=True, eq=False)
class Distribution:
    p: np.ndarray
    full_support: bool = True
    exact: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", _freeze(self.p))

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.p, dtype=dtype)

    def __getitem__(self, i):
        return self.p[i]

    def __len__(self):
        return self.n


def _support_components(P: StochasticMatrix):
    # edge x -> x' whenever p(x'|x) > 0; csgraph wants adjacency[from, to]
    adj = (np.asarray(P) > 0).T.astype(np.int8)
    return connected_components(adj, directed=True, connection="strong")


def is_irreducible(P) -> bool:
    """True iff the directed support graph of ``P`` is strongly connected."""
    P = validate_stochastic_matrix(P)
    ncomp, _ = _support_components(P)
    return ncomp == 1


def closed_classes(P) -> list[list[int]]:
    """Closed communicating classes (1-based state lists)."""
    P = validate_stochastic_matrix(P)
    ncomp, labels = _support_components(P)
    support = np.asarray(P) > 0
    out = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        # closed iff no probability leaves the class
        leaving = support[:, members].copy()
        leaving[members, :] = False
        if not leaving.any():
            out.append([int(i) + 1 for i in members])
    return out


def _solve_exact(A, b):
    """Gauss-Jordan elimination over Fractions; ``None`` when singular."""
    n = len(A)
    M = [list(row) + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def stationary_distribution(P, exact: bool | None = None) -> Distribution:
    """Unique stationary distribution of ``P``.

    Solves ``(P - I) pi = 0`` with one (redundant) equation replaced by the
    normalisation ``sum(pi) = 1``.  With ``exact`` (default: whenever ``P``
    carries exact entries) the solve runs over Fractions.

    Raises ``NonUniqueStationary`` when the chain has more than one closed
    class.
    """
    P = validate_stochastic_matrix(P)
    classes = closed_classes(P)
    if len(classes) != 1:
        raise NonUniqueStationary(classes)
    n = P.n
    if exact is None:
        exact = P.exact is not None
    if exact and P.exact is not None:
        A = [[P.exact[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
        A[-1] = [Fraction(1)] * n
        b = [Fraction(0)] * (n - 1) + [Fraction(1)]
        sol = _solve_exact(A, b)
        if sol is None:
            raise NumericalFailure("singular stationary system in exact mode")
        p = np.array([float(v) for v in sol])
        return Distribution(p, bool(all(v > 0 for v in sol)), tuple(sol))

    A = np.asarray(P) - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        p = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    if not np.all(np.isfinite(p)) or p.min() < -1e-9:
        raise NumericalFailure(f"stationary solve produced {p}")
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    return Distribution(p, bool(np.all(p > 0)))


def power_iteration(P, tol: float = 1e-15, max_iter: int = 100_000) -> np.ndarray:
    """Stationary distribution by iterating the lazy chain ``(I + P) / 2``.

    The lazy chain shares the stationary distribution of ``P`` and is
    aperiodic, so this converges for periodic chains as well.
    """
    P = np.asarray(validate_stochastic_matrix(P))
    n = P.shape[0]
    lazy = 0.5 * (np.eye(n) + P)
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = lazy @ p
        nxt /= nxt.sum()
        if np.abs(nxt - p).max() < tol:
            return nxt
        p = nxt
    raise NumericalFailure("power iteration did not converge")


def prime(name: str) -> str:
    return name + "'"


@dataclass(frozen=True, eq=False)
class JointTable:
    """Dense joint distribution over named discrete variables.

    ``table`` has one axis per entry of ``variables`` (same order).
    """

    variables: tuple
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "table", _freeze(self.table))
        if len(set(self.variables)) != len(self.variables):
            raise DimensionMismatch(f"duplicate variables {self.variables}")
        if self.table.ndim != len(self.variables):
            raise DimensionMismatch(
                f"{len(self.variables)} variables for a {self.table.ndim}-d table"
            )

    @property
    def cards(self) -> dict:
        return dict(zip(self.variables, self.table.shape))

    @property
    def mass(self) -> float:
        return float(self.table.sum())

    def __contains__(self, name):
        return name in self.variables

    def require(self, *names, error=UnknownVariable):
        missing = [v for v in names if v not in self.variables]
        if missing:
            raise error(f"variables {missing} not in joint {self.variables}")

    def marginal(self, keep: Sequence[str]) -> np.ndarray:
        """Marginal array with axes in the order of ``keep``."""
        keep = tuple(keep)
        self.require(*keep)
        if len(set(keep)) != len(keep):
            raise DimensionMismatch(f"duplicate variables in {keep}")
        drop = tuple(i for i, v in enumerate(self.variables) if v not in keep)
        arr = self.table.sum(axis=drop) if drop else self.table
        remaining = [v for v in self.variables if v in keep]
        return np.transpose(arr, [remaining.index(v) for v in keep])

    def marginalize(self, keep: Sequence[str]) -> "JointTable":
        keep = tuple(keep)
        return JointTable(keep, self.marginal(keep))

    def prob(self, **states) -> float:
        """Probability of a (partial) 1-based assignment, e.g. ``prob(X=1, M_=2)``.

        Primed names are spelled with a trailing underscore.
        """
        names = {k[:-1] + "'" if k.endswith("_") else k: v for k, v in states.items()}
        arr = self.marginal(tuple(names))
        return float(arr[tuple(v - 1 for v in names.values())])


def two_step_joint(P, channels, stationary=None) -> JointTable:
    """Joint over ``(X, X', Y1, Y1', ...)`` for one step of the chain.

    p = p(x) p(x'|x) prod_i pi_i(y_i|x) pi_i(y_i'|x').

    ``channels`` is a mapping ``name -> Channel`` (or a sequence, named
    ``Y1, Y2, ...``).  Anything exposing ``entries[y, x]`` works.
    """
    P = validate_stochastic_matrix(P)
    n = P.n
    if stationary is None:
        stationary = stationary_distribution(P)
    px = np.asarray(stationary, dtype=float)
    if px.shape != (n,):
        raise DimensionMismatch(f"stationary has {px.shape[0]} states, kernel has {n}")
    if not isinstance(channels, Mapping):
        channels = {f"Y{i + 1}": ch for i, ch in enumerate(channels)}
    if len(channels) > 10:
        raise DimensionMismatch("at most 10 channels are supported")

    letters = iter(string.ascii_letters[2:])
    operands = [px, "a", np.asarray(P), "ba"]
    variables = ["X", "X'"]
    out = "ab"
    for name, ch in channels.items():
        pi = np.asarray(ch.entries, dtype=float)
        if pi.ndim != 2 or pi.shape[1] != n:
            raise DimensionMismatch(f"channel {name} has input cardinality {pi.shape}, need {n}")
        y, y2 = next(letters), next(letters)
        operands += [pi, y + "a", pi, y2 + "b"]
        variables += [name, prime(name)]
        out += y + y2
    arrays, subs = operands[0::2], operands[1::2]
    table = np.einsum(",".join(subs) + "->" + out, *arrays)
    return JointTable(tuple(variables), table)


def marginalize(joint: JointTable, keep) -> JointTable:
    return joint.marginalize(keep)
