"""Forward construction of universes with strong interaction closure from S to M.

Given maps ``fM``, ``fS`` onto ``{1..k}`` and a bijection ``g``, column ``x`` of
the kernel may only put mass on the rows ``x'`` with ``fM(x') = g(fS(x))``.
Any such kernel has ``I(M':X'|S) = 0``; the builder fills the allowed entries,
insists on irreducibility and re-checks closure before handing the universe
back.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse.csgraph import connected_components

from .channels import channel_from_function, partition_relation, Partition, Relation
from .errors import (
    ClosureVerificationFailed,
    InfeasibleStructure,
    InputError,
    ReducibleAfterRetries,
)
from .markov import is_irreducible, parse_entry, validate_stochastic_matrix
from .measures import (
    CLOSURE_TOL,
    conditional_mutual_information,
    is_perfect_apparent_control,
    transfer_entropy,
)
from .universe import Universe, make_universe

FILL_KINDS = ("uniform", "dirichlet", "explicit")


@dataclass(frozen=True)
class Fill:
    kind: str = "dirichlet"
    alpha: float = 1.0
    values: tuple | None = None  # explicit kernel, rows x'

    def __post_init__(self):
        if self.kind not in FILL_KINDS:
            raise InputError(f"fill kind must be one of {FILL_KINDS}, got {self.kind!r}")
        if self.kind == "dirichlet" and not self.alpha > 0:
            raise InputError("Dirichlet concentration must be positive")
        if self.kind == "explicit":
            if self.values is None:
                raise InputError("explicit fill needs values")
            object.__setattr__(self, "values", tuple(tuple(r) for r in self.values))


@dataclass(frozen=True)
class BuildSpec:
    n: int
    fM: tuple
    fS: tuple
    g: tuple | None = None
    fill: Fill = field(default_factory=Fill)
    seed: int = 0
    require_perfect_control: bool = False
    max_retries: int = 100

    def __post_init__(self):
        object.__setattr__(self, "fM", tuple(int(v) for v in self.fM))
        object.__setattr__(self, "fS", tuple(int(v) for v in self.fS))
        if self.g is not None:
            object.__setattr__(self, "g", tuple(int(v) for v in self.g))

    @property
    def k(self) -> int:
        return max(self.fM)

    @property
    def gmap(self) -> tuple:
        return self.g if self.g is not None else tuple(range(1, self.k + 1))


def check_spec(spec: BuildSpec) -> int:
    """Validate a spec; returns the common alphabet size ``k``."""
    n = spec.n
    if n < 1 or len(spec.fM) != n or len(spec.fS) != n:
        raise InputError(f"fM and fS must both have n={n} entries")
    k = max(spec.fM)
    for name, f in (("fM", spec.fM), ("fS", spec.fS)):
        if min(f) < 1:
            raise InputError(f"{name} values must be 1-based")
        if set(f) != set(range(1, max(f) + 1)):
            missing = sorted(set(range(1, max(f) + 1)) - set(f))
            raise InfeasibleStructure(f"{name} is not surjective; empty blocks {missing}")
    if max(spec.fS) != k:
        raise InfeasibleStructure(f"|M| = {k} but |S| = {max(spec.fS)}")
    if sorted(spec.gmap) != list(range(1, k + 1)):
        raise InputError(f"g must be a bijection of 1..{k}, got {spec.gmap}")
    if spec.require_perfect_control:
        empty = [
            (s, m)
            for s in range(1, k + 1)
            for m in range(1, k + 1)
            if not any(a == s and b == m for a, b in zip(spec.fS, spec.fM))
        ]
        if empty:
            raise InfeasibleStructure(f"empty intersections (s, m): {empty}")
    return k


def allowed_support(spec: BuildSpec) -> np.ndarray:
    """Boolean mask ``[x', x]`` of entries the recipe leaves free."""
    g = spec.gmap
    fM = np.array(spec.fM)
    targets = np.array([g[s - 1] for s in spec.fS])
    return fM[:, None] == targets[None, :]


def _strongly_connected(mask: np.ndarray) -> bool:
    ncomp, _ = connected_components(mask.T.astype(np.int8), directed=True, connection="strong")
    return ncomp == 1


def _draw_column(rng, rows: np.ndarray, n: int, alpha: float) -> np.ndarray:
    col = np.zeros(n)
    col[rows] = rng.dirichlet(np.full(len(rows), alpha))
    return col


def _fill(spec: BuildSpec, mask: np.ndarray, rng):
    n = spec.n
    kind = spec.fill.kind
    if kind == "uniform":
        counts = mask.sum(axis=0)
        return [
            [Fraction(1, int(counts[j])) if mask[i, j] else Fraction(0) for j in range(n)]
            for i in range(n)
        ]
    if kind == "explicit":
        rows = [[parse_entry(v) for v in r] for r in spec.fill.values]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise InputError(f"explicit fill must be {n}x{n}")
        bad = [(i + 1, j + 1) for i in range(n) for j in range(n) if rows[i][j] != 0 and not mask[i, j]]
        if bad:
            raise InfeasibleStructure(f"explicit fill puts mass outside the allowed block at (x', x) = {bad}")
        return rows
    return np.column_stack(
        [_draw_column(rng, np.flatnonzero(mask[:, x]), n, spec.fill.alpha) for x in range(n)]
    )


def _closure_value(u: Universe) -> float:
    return conditional_mutual_information(u.joint, "M'", "X'", "S")


def build_universe(spec: BuildSpec) -> Universe:
    """Fill the block structure of ``spec`` and return a verified universe."""
    k = check_spec(spec)
    mask = allowed_support(spec)
    if not _strongly_connected(mask):
        raise ReducibleAfterRetries(0, "the block structure itself is reducible")
    rng = np.random.default_rng(spec.seed)
    attempts = spec.max_retries if spec.fill.kind == "dirichlet" else 1
    for attempt in range(1, max(attempts, 1) + 1):
        P = validate_stochastic_matrix(_fill(spec, mask, rng))
        if is_irreducible(P):
            break
    else:
        raise ReducibleAfterRetries(attempt)

    channels = {
        "S": channel_from_function(spec.fS, spec.n, k),
        "M": channel_from_function(spec.fM, spec.n, k),
    }
    u = make_universe(P, channels, spec.gmap, {"builder": "build_universe", "spec": spec_to_dict(spec)})
    value = _closure_value(u)
    if value > CLOSURE_TOL:
        raise ClosureVerificationFailed(f"I(M':X'|S) = {value!r} on a freshly built universe")
    return u


def build_perfect_control_universe(spec: BuildSpec) -> Universe:
    """Like :func:`build_universe`, but every ``(s, m)`` intersection must be occupied."""
    spec = dataclasses.replace(spec, require_perfect_control=True)
    u = build_universe(spec)
    if not is_perfect_apparent_control(u.joint, "S", "M"):
        raise ClosureVerificationFailed("perfect control expected on an orthogonal build")
    return u


_F = Fraction
EXAMPLE_P = (
    (_F(1, 3), 0, 0, _F(1, 3), 0, 0),
    (_F(1, 3), 0, 0, _F(1, 6), 0, 0),
    (_F(1, 3), 0, 0, _F(3, 6), 0, 0),
    (0, _F(1, 3), _F(1, 2), 0, _F(1, 4), _F(1, 2)),
    (0, _F(1, 3), _F(1, 4), 0, _F(1, 2), 0),
    (0, _F(1, 3), _F(1, 4), 0, _F(1, 4), _F(1, 2)),
)
EXAMPLE_FM = (1, 1, 1, 2, 2, 2)
EXAMPLE_FS = (1, 2, 2, 1, 2, 2)


def example_spec() -> BuildSpec:
    return BuildSpec(6, EXAMPLE_FM, EXAMPLE_FS, (1, 2), Fill("explicit", values=EXAMPLE_P))


def example_universe() -> Universe:
    """Six-state universe with two orthogonal partitions and perfect control."""
    return build_universe(example_spec())


def coinciding_universe(n: int, blocks, fill="dirichlet", seed: int = 0, g=None) -> Universe:
    """Universe where S and M induce the same partition ``blocks``.

    By default ``g`` shifts cyclically (block ``i`` feeds block ``i + 1``) so
    the chain is irreducible.
    """
    part = Partition(n, tuple(blocks), tuple(range(1, len(blocks) + 1)))
    f = [0] * n
    for label, block in zip(part.labels, part.blocks):
        for x in block:
            f[x - 1] = label
    k = len(part.blocks)
    if g is None:
        g = tuple(s % k + 1 for s in range(1, k + 1))
    if isinstance(fill, str):
        fill = Fill(fill)
    return build_universe(BuildSpec(n, tuple(f), tuple(f), tuple(g), fill, seed))


def maximize_control(spec: BuildSpec, iterations: int = 200, seed: int = 0, alpha: float = 1.0):
    """Hill-climb the transfer entropy S -> M over closure-preserving fills.

    Each move redraws one column from a symmetric Dirichlet over its allowed
    rows; the move is kept only if the chain stays irreducible and the score
    strictly improves.  Returns ``(best_universe, trace)`` where ``trace[i]``
    is the best score after ``i`` moves.
    """
    k = check_spec(spec)
    if partition_relation(
        Partition.from_map(spec.fM), Partition.from_map(spec.fS)
    ).relation is not Relation.ORTHOGONAL and k > 1:
        raise InfeasibleStructure("control search needs orthogonal current/future partitions")
    best = build_universe(spec)
    score = transfer_entropy(best.joint, "S", "M")
    trace = [score]
    mask = allowed_support(spec)
    rng = np.random.default_rng(seed)
    current = np.array(best.P)
    for _ in range(iterations):
        x = int(rng.integers(spec.n))
        cand = current.copy()
        cand[:, x] = _draw_column(rng, np.flatnonzero(mask[:, x]), spec.n, alpha)
        P = validate_stochastic_matrix(cand)
        if is_irreducible(P):
            u = make_universe(P, best.channels, best.g, best.provenance)
            te = transfer_entropy(u.joint, "S", "M")
            if te > score:
                best, score, current = u, te, cand
        trace.append(score)
    prov = dict(best.provenance, search={"iterations": iterations, "seed": seed, "alpha": alpha, "score": score})
    best = Universe(best.P, best.stationary, best.channels, best.g, prov)
    return best, trace


def spec_to_dict(spec: BuildSpec) -> dict:
    fill = {"kind": spec.fill.kind}
    if spec.fill.kind == "dirichlet":
        fill["alpha"] = spec.fill.alpha
    if spec.fill.kind == "explicit":
        fill["P"] = [[str(v) if isinstance(v, Fraction) else v for v in r] for r in spec.fill.values]
    return {
        "n": spec.n,
        "fM": list(spec.fM),
        "fS": list(spec.fS),
        "g": list(spec.gmap),
        "fill": fill,
        "seed": spec.seed,
        "perfect_control": spec.require_perfect_control,
        "max_retries": spec.max_retries,
    }


def spec_from_dict(d: dict) -> BuildSpec:
    try:
        fill_d = dict(d.get("fill") or {"kind": "dirichlet"})
        kind = fill_d.get("kind", "dirichlet")
        fill = Fill(kind, float(fill_d.get("alpha", 1.0)), fill_d.get("P", fill_d.get("values")))
        return BuildSpec(
            n=int(d["n"]),
            fM=tuple(d["fM"]),
            fS=tuple(d["fS"]),
            g=tuple(d["g"]) if d.get("g") is not None else None,
            fill=fill,
            seed=int(d.get("seed", 0)),
            require_perfect_control=bool(d.get("perfect_control", False)),
            max_retries=int(d.get("max_retries", 100)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed build spec: {exc!r}") from exc
