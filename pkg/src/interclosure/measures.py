"""Shannon quantities over :class:`~interclosure.markov.JointTable` objects.

All values are in bits.  Variables are referred to by name (``"M'"`` is the
next state of channel ``"M"``); wherever a set of variables is expected a
single name is accepted as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, MissingVariable, OverlappingVariables
from .markov import JointTable, prime

CLOSURE_TOL = 1e-10
EQUALITY_TOL = 1e-9


def _names(v) -> tuple:
    if v is None:
        return ()
    if isinstance(v, str):
        return (v,)
    return tuple(v)


def _h(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def entropy(joint: JointTable, variables, given=None) -> float:
    """``H(variables | given)``; plain entropy when ``given`` is empty."""
    variables, given = _names(variables), _names(given)
    if not variables:
        raise InputError("entropy needs at least one variable")
    if not given:
        return _h(joint.marginal(variables).ravel())
    both = variables + tuple(g for g in given if g not in variables)
    return _h(joint.marginal(both).ravel()) - _h(joint.marginal(given).ravel())


def _grouped(joint: JointTable, a, b, c) -> np.ndarray:
    """``p(a, b, c)`` reshaped to three flattened axes."""
    arr = joint.marginal(a + b + c)
    size = lambda vs: int(np.prod([joint.cards[v] for v in vs])) if vs else 1
    return arr.reshape(size(a), size(b), size(c))


def conditional_mutual_information(joint: JointTable, a, b, c=None) -> float:
    """``I(A:B|C)`` by direct summation over cells of positive mass.

    I = sum_{a,b,c} p(a,b,c) log2[ p(a,b,c) p(c) / (p(a,c) p(b,c)) ]
    """
    a, b, c = _names(a), _names(b), _names(c)
    _check_disjoint(a, b, c)
    joint.require(*(a + b + c))
    pabc = _grouped(joint, a, b, c)
    pc = pabc.sum(axis=(0, 1))
    pac = pabc.sum(axis=1)
    pbc = pabc.sum(axis=0)
    ia, ib, ic = np.nonzero(pabc)
    w = pabc[ia, ib, ic]
    ratio = w * pc[ic] / (pac[ia, ic] * pbc[ib, ic])
    return float((w * np.log2(ratio)).sum())


def cmi_entropy_form(joint: JointTable, a, b, c=None) -> float:
    """``H(A,C) + H(B,C) - H(A,B,C) - H(C)``; independent check on the direct sum."""
    a, b, c = _names(a), _names(b), _names(c)
    _check_disjoint(a, b, c)
    joint.require(*(a + b + c))
    hc = _h(joint.marginal(c).ravel()) if c else 0.0
    return (
        _h(joint.marginal(a + c).ravel())
        + _h(joint.marginal(b + c).ravel())
        - _h(joint.marginal(a + b + c).ravel())
        - hc
    )


def mutual_information(joint: JointTable, a, b) -> float:
    return conditional_mutual_information(joint, a, b)


def _check_disjoint(a, b, c):
    if not a or not b:
        raise InputError("mutual information needs two nonempty variable sets")
    sa, sb, sc = set(a), set(b), set(c)
    if sa & sb or sa & sc or sb & sc or len(a) + len(b) + len(c) != len(sa | sb | sc):
        raise OverlappingVariables(f"variable sets overlap: {a} / {b} / {c}")


@dataclass(frozen=True)
class MeasureReport:
    name: str
    value: float
    roles: dict = field(default_factory=dict)
    tol: float | None = None
    verdict: bool | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "roles": self.roles,
            "tol": self.tol,
            "verdict": self.verdict,
        }


def _need(joint, *names):
    joint.require(*names, error=MissingVariable)


def _strength(strength: str) -> str:
    if strength not in ("weak", "strong"):
        raise InputError(f"strength must be 'weak' or 'strong', got {strength!r}")
    return strength


def informational_closure(
    joint: JointTable, process: str = "Y", strength: str = "strong", tol: float = CLOSURE_TOL
) -> MeasureReport:
    """Weak ``I(Y':X|Y)`` or strong ``I(Y':X'|Y)`` informational closure of ``process``."""
    other = "X" if _strength(strength) == "weak" else "X'"
    _need(joint, "X", "X'", process, prime(process))
    value = conditional_mutual_information(joint, prime(process), other, process)
    return MeasureReport(
        f"{strength}_ic",
        value,
        {"process": process, "underlying": other},
        tol,
        value <= tol,
    )


def interaction_closure(
    joint: JointTable,
    source: str = "S",
    target: str = "M",
    strength: str = "strong",
    tol: float = CLOSURE_TOL,
) -> MeasureReport:
    """Strong ``I(Z':X'|Y)`` or weak ``I(Z':X|Y)`` interaction closure from ``source`` (Y) to ``target`` (Z)."""
    other = "X" if _strength(strength) == "weak" else "X'"
    _need(joint, "X", "X'", source, prime(target))
    value = conditional_mutual_information(joint, prime(target), other, source)
    return MeasureReport(
        f"{strength}_iac",
        value,
        {"from": source, "to": target, "underlying": other},
        tol,
        value <= tol,
    )


@dataclass(frozen=True)
class Equalities:
    """``I(Z':Y)``, ``I(Z':X)``, ``I(Z':X')`` and whether they agree."""

    i_source: float
    i_x: float
    i_xprime: float
    tol: float
    verdict: bool

    def values(self) -> tuple:
        return self.i_source, self.i_x, self.i_xprime

    def to_dict(self) -> dict:
        return {
            "I(Z':Y)": self.i_source,
            "I(Z':X)": self.i_x,
            "I(Z':X')": self.i_xprime,
            "tol": self.tol,
            "verdict": self.verdict,
        }


def interaction_equalities(
    joint: JointTable, source: str = "S", target: str = "M", tol: float = EQUALITY_TOL
) -> Equalities:
    _need(joint, "X", "X'", source, prime(target))
    zp = prime(target)
    vals = (
        mutual_information(joint, zp, source),
        mutual_information(joint, zp, "X"),
        mutual_information(joint, zp, "X'"),
    )
    verdict = max(vals) - min(vals) <= tol
    return Equalities(*vals, tol, verdict)


def transfer_entropy(joint: JointTable, source: str = "S", target: str = "M") -> float:
    """One-step transfer entropy ``I(Z':Y|Z)`` from ``source`` to ``target``.

    A process never transfers information to itself, so ``source == target``
    gives 0.
    """
    _need(joint, prime(target), source, target)
    if source == target:
        return 0.0
    return conditional_mutual_information(joint, prime(target), source, target)


def conditional_next_entropy(joint: JointTable, target: str = "M") -> float:
    """``H(Z'|Z)``, the ceiling of any transfer entropy into ``target``."""
    _need(joint, target, prime(target))
    return entropy(joint, prime(target), target)


@dataclass(frozen=True)
class PerfectControl:
    """Outcome of the perfect-apparent-control test.

    ``witnesses`` maps every ``(z, z')`` pair that can be forced to a
    steering state ``y``; ``missing`` lists the pairs that cannot.
    """

    holds: bool
    witnesses: dict
    missing: tuple = ()

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witnesses": [
                {"z": z, "z_next": zn, "y": y} for (z, zn), y in sorted(self.witnesses.items())
            ],
            "missing": [list(p) for p in self.missing],
        }


def is_perfect_apparent_control(
    joint: JointTable, source: str = "S", target: str = "M", tol: float = CLOSURE_TOL
) -> PerfectControl:
    """For every reachable ``z`` and every ``z'``, some ``y`` with ``p(z,y) > 0`` forces ``z'``.

    Only ``(z, y)`` pairs of positive probability are considered.
    """
    _need(joint, target, prime(target), source)
    if source == target:
        pzzn = joint.marginal([target, prime(target)])
        pzyzn = np.einsum("ab,ac->abc", np.eye(pzzn.shape[0]), pzzn)
    else:
        pzyzn = joint.marginal([target, source, prime(target)])
    pzy = pzyzn.sum(axis=2)
    kz, ky, _ = pzyzn.shape
    witnesses, missing = {}, []
    for z in range(kz):
        if pzy[z].sum() <= 0:
            continue
        for zn in range(kz):
            y = next(
                (y for y in range(ky) if pzy[z, y] > 0 and pzyzn[z, y, zn] / pzy[z, y] >= 1 - tol),
                None,
            )
            if y is None:
                missing.append((z + 1, zn + 1))
            else:
                witnesses[(z + 1, zn + 1)] = y + 1
    return PerfectControl(not missing, witnesses, tuple(missing))
