"""High-level process channels and the geometry of their conditional families.

A channel ``pi(y|x)`` is stored as a ``(k, n)`` array indexed ``[y, x]``.
Maps, partitions and states exposed to callers are 1-based.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InputError,
    NotDeterministic,
    OutOfRangeValue,
    StateSpaceMismatch,
)
from .markov import STOCHASTIC_TOL, JointTable

DELTA_TOL = 1e-10
DEDUP_TOL = 1e-10
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Channel:
    """Conditional distribution ``pi(y|x)``; ``entries[y, x]``.

    ``map`` is the 1-based function ``f`` for deterministic channels.
    ``unreachable`` lists 1-based inputs whose column is identically zero;
    only Bayesian inverses produce those.
    """

    entries: np.ndarray
    map: tuple | None = None
    unreachable: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2:
            raise DimensionMismatch(f"channel must be 2-d, got shape {a.shape}")
        if np.any(a < 0):
            raise InputError("channel has negative entries")
        sums = a.sum(axis=0)
        for x in range(a.shape[1]):
            if x + 1 in self.unreachable:
                if sums[x] != 0:
                    raise InputError(f"unreachable column {x + 1} carries mass")
            elif abs(sums[x] - 1.0) > STOCHASTIC_TOL:
                raise InputError(f"channel column {x + 1} sums to {sums[x]:.12g}")
        if self.map is not None:
            f = tuple(int(v) for v in self.map)
            if len(f) != a.shape[1] or any(a[y - 1, x] != 1.0 for x, y in enumerate(f)):
                raise InputError("channel map disagrees with its entries")
            object.__setattr__(self, "map", f)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "unreachable", frozenset(self.unreachable))

    @property
    def n(self) -> int:
        """Input cardinality."""
        return self.entries.shape[1]

    @property
    def k(self) -> int:
        """Output cardinality."""
        return self.entries.shape[0]

    @property
    def deterministic(self) -> bool:
        return self.map is not None

    def column(self, x: int) -> np.ndarray:
        return self.entries[:, x - 1]


def channel_from_function(f: Sequence[int], n: int | None = None, k: int | None = None) -> Channel:
    """Delta channel of a 1-based map ``f: {1..n} -> {1..k}``."""
    f = [int(v) for v in f]
    n = len(f) if n is None else n
    k = max(f, default=0) if k is None else k
    if len(f) != n:
        raise OutOfRangeValue(f"map has {len(f)} values for {n} states")
    bad = [(x + 1, y) for x, y in enumerate(f) if not 1 <= y <= k]
    if bad:
        raise OutOfRangeValue(f"map values out of range 1..{k}: {bad}")
    pi = np.zeros((k, n))
    pi[np.array(f) - 1, np.arange(n)] = 1.0
    return Channel(pi, tuple(f))


def bayesian_inverse(ch: Channel, px) -> Channel:
    """Reverse channel ``pi†(x|y) = pi(y|x) p(x) / p(y)``, zero where ``pi(y|x) = 0``.

    Outputs with ``p(y) = 0`` come back as zero columns listed in
    ``unreachable``.
    """
    px = np.asarray(px, dtype=float)
    if px.shape != (ch.n,):
        raise DimensionMismatch(f"distribution over {px.shape} states, channel has {ch.n}")
    weighted = ch.entries * px[None, :]
    py = weighted.sum(axis=1)
    inv = np.zeros((ch.n, ch.k))
    unreachable = set()
    for y in range(ch.k):
        if py[y] > 0:
            inv[:, y] = np.where(ch.entries[y] > 0, weighted[y] / py[y], 0.0)
        else:
            unreachable.add(y + 1)
    return Channel(inv, unreachable=frozenset(unreachable))


def is_deterministic(ch: Channel, tol: float = DELTA_TOL) -> tuple[bool, tuple | None]:
    """Whether every column is a delta within ``tol``; returns the 1-based map too."""
    if ch.map is not None:
        return True, ch.map
    f = []
    for x in range(ch.n):
        col = ch.entries[:, x]
        y = int(np.argmax(col))
        rest = np.delete(col, y)
        if col[y] < 1.0 - tol or (rest.size and rest.max() > tol):
            return False, None
        f.append(y + 1)
    return True, tuple(f)


def conditional_family(joint: JointTable, target: str, given: str) -> list:
    """The vectors ``p(target | given = b)`` for every ``b`` of positive mass.

    Returns ``[(b, vector), ...]`` with 1-based ``b``.
    """
    joint.require(target, given)
    if target == given:
        k = joint.cards[target]
        pb = joint.marginal([given])
        return [(b + 1, np.eye(k)[b]) for b in range(k) if pb[b] > 0]
    pab = joint.marginal([target, given])
    pb = pab.sum(axis=0)
    return [(b + 1, pab[:, b] / pb[b]) for b in range(pab.shape[1]) if pb[b] > 0]


def convex_membership(point, generators, tol: float = MEMBERSHIP_TOL) -> bool:
    """Whether ``point`` is a convex combination of ``generators`` (within ``tol``).

    Decided by phase-one simplex over the constraints
    ``G c = point, sum(c) = 1, c >= 0``.
    """
    point = np.asarray(point, dtype=float)
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    if G.size == 0:
        return False
    if G.shape[1] != point.shape[0]:
        raise DimensionMismatch(
            f"generators have dimension {G.shape[1]}, point has {point.shape[0]}"
        )
    A = np.vstack([G.T, np.ones(G.shape[0])])
    b = np.append(point, 1.0)
    return phase_one(A, b) <= tol


def phase_one(A, b, eps: float = 1e-12) -> float:
    """Minimal total artificial slack for ``A x = b, x >= 0``.

    Dense tableau simplex with Bland's rule (smallest-index entering and
    leaving variables), which cannot cycle.  Zero means feasible.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, k = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(k, k + m))
    cost = np.zeros(k + m + 1)
    cost[:k] = -A.sum(axis=0)
    cost[-1] = -b.sum()
    for _ in range(50 * (k + m) + 100):
        entering = next((j for j in range(k + m) if cost[j] < -eps), None)
        if entering is None:
            break
        col = T[:, entering]
        rows = [i for i in range(m) if col[i] > eps]
        if not rows:
            # unbounded direction cannot occur for a bounded-below objective
            break
        ratios = [T[i, -1] / col[i] for i in rows]
        best = min(ratios)
        leave = min(
            (i for i, r in zip(rows, ratios) if r <= best + eps),
            key=lambda i: basis[i],
        )
        T[leave] /= T[leave, entering]
        for i in range(m):
            if i != leave and T[i, entering] != 0:
                T[i] -= T[i, entering] * T[leave]
        cost -= cost[entering] * T[leave]
        basis[leave] = entering
    return max(0.0, -cost[-1])


@dataclass(frozen=True)
class ExtremePoint:
    vector: tuple
    witnesses: frozenset


@dataclass(frozen=True)
class ExtremeSet:
    """Extreme points of the hull of a finite family, each with its witness states.

    ``level_sets`` maps every distinct family vector to the states that
    produce it, extreme or not.
    """

    points: tuple
    level_sets: tuple = ()

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def vectors(self) -> np.ndarray:
        return np.array([p.vector for p in self.points])

    def witness_sets(self) -> list:
        return [set(p.witnesses) for p in self.points]

    def same_as(self, other: "ExtremeSet", tol: float = DEDUP_TOL) -> bool:
        """Set equality of the extreme vectors within ``tol`` (max-norm)."""
        if len(self) != len(other):
            return False
        a, b = self.vectors, other.vectors
        if a.size == 0:
            return True
        if a.shape != b.shape:
            return False
        return all(np.abs(b - v).max(axis=1).min() <= tol for v in a) and all(
            np.abs(a - v).max(axis=1).min() <= tol for v in b
        )

    def find(self, vector, tol: float = DEDUP_TOL):
        for p in self.points:
            if np.abs(np.asarray(p.vector) - vector).max() <= tol:
                return p
        return None


def _dedup(family, tol):
    groups: list[tuple[np.ndarray, set]] = []
    for state, vec in family:
        vec = np.asarray(vec, dtype=float)
        for rep, states in groups:
            if np.abs(rep - vec).max() <= tol:
                states.add(state)
                break
        else:
            groups.append((vec, {state}))
    return groups


def extreme_points(
    family, tol: float = DEDUP_TOL, membership_tol: float = MEMBERSHIP_TOL
) -> ExtremeSet:
    """Members of ``family`` that are not convex combinations of the other members.

    ``family`` is a list of ``(state, vector)`` pairs as produced by
    :func:`conditional_family`, or a bare list of vectors (states are then
    numbered from 1).
    """
    family = list(family)
    if family and not isinstance(family[0], tuple):
        family = [(i + 1, v) for i, v in enumerate(family)]
    groups = _dedup(family, tol)
    points = []
    for i, (vec, states) in enumerate(groups):
        others = [g[0] for j, g in enumerate(groups) if j != i]
        if not others or not convex_membership(vec, others, membership_tol):
            points.append(ExtremePoint(tuple(float(v) for v in vec), frozenset(states)))
    level_sets = tuple(
        (tuple(float(v) for v in vec), frozenset(states)) for vec, states in groups
    )
    return ExtremeSet(tuple(points), level_sets)


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks of 1-based states covering ``{1..n}``."""

    n: int
    blocks: tuple
    labels: tuple

    def __post_init__(self):
        blocks = tuple(frozenset(int(v) for v in b) for b in self.blocks)
        labels = tuple(self.labels)
        if len(blocks) != len(labels):
            raise InputError("one label per block required")
        if len(set(labels)) != len(labels):
            raise InputError(f"labels not distinct: {labels}")
        if any(not b for b in blocks):
            raise InputError("empty block")
        seen: set = set()
        for b in blocks:
            if seen & b:
                raise InputError(f"blocks overlap on {sorted(seen & b)}")
            seen |= b
        if seen != set(range(1, self.n + 1)):
            raise InputError(f"blocks do not cover 1..{self.n}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_map(cls, f: Sequence[int]) -> "Partition":
        labels = sorted(set(f))
        blocks = [frozenset(x + 1 for x, y in enumerate(f) if y == lab) for lab in labels]
        return cls(len(f), tuple(blocks), tuple(labels))

    def block(self, label) -> frozenset:
        return self.blocks[self.labels.index(label)]

    def as_lists(self) -> list:
        return [sorted(b) for b in self.blocks]

    def block_set(self) -> set:
        return set(self.blocks)


def induced_partition(ch: Channel) -> Partition:
    """Preimages ``f^-1(y)`` of reachable outputs, labelled by ``y``."""
    det, f = is_deterministic(ch)
    if not det:
        bad = next(
            x + 1 for x in range(ch.n)
            if not np.isclose(ch.entries[:, x].max(), 1.0, rtol=0, atol=DELTA_TOL)
        )
        raise NotDeterministic(bad, ch.entries[:, bad - 1].tolist())
    return Partition.from_map(f)


@dataclass(frozen=True)
class StepMap:
    """Deterministic map recovered from a conditional family (1-based)."""

    mapping: dict
    bijective: bool | None

    def __getitem__(self, state):
        return self.mapping[state]

    def as_tuple(self) -> tuple:
        return tuple(self.mapping[k] for k in sorted(self.mapping))


def recover_step_map(
    joint: JointTable, target: str, given: str, tol: float = DELTA_TOL
) -> StepMap:
    """Read off ``target = h(given)`` when every ``p(target|given)`` is a delta.

    Raises ``NotDeterministic`` naming the first offending state.
    """
    mapping = {}
    for state, vec in conditional_family(joint, target, given):
        y = int(np.argmax(vec))
        if vec[y] < 1.0 - tol:
            raise NotDeterministic(state, vec.tolist())
        mapping[state] = y + 1
    bijective = None
    kt, kg = joint.cards[target], joint.cards[given]
    if kt == kg:
        bijective = len(mapping) == kg and set(mapping.values()) == set(range(1, kt + 1))
    return StepMap(mapping, bijective)


class Relation(str, enum.Enum):
    COINCIDING = "coinciding"
    ORTHOGONAL = "orthogonal"
    INTERMEDIATE = "intermediate"


class PartitionRelation(NamedTuple):
    relation: Relation
    intersections: dict


def partition_relation(a: Partition, b: Partition) -> PartitionRelation:
    """Classify two partitions of the same state space.

    ``intersections`` is keyed by ``(label in a, label in b)``.
    """
    if a.n != b.n:
        raise StateSpaceMismatch(f"partitions over {a.n} and {b.n} states")
    inter = {
        (la, lb): frozenset(ba & bb)
        for la, ba in zip(a.labels, a.blocks)
        for lb, bb in zip(b.labels, b.blocks)
    }
    if a.block_set() == b.block_set():
        kind = Relation.COINCIDING
    elif all(inter.values()):
        kind = Relation.ORTHOGONAL
    else:
        kind = Relation.INTERMEDIATE
    return PartitionRelation(kind, inter)
