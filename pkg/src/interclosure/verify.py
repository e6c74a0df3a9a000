"""Executable checks of the structural claims about closed universes.

Every verifier takes a :class:`~interclosure.universe.Universe` with
channels ``S`` (source) and ``M`` (receiver) and returns a
:class:`VerificationReport`.  Implications are checked with the antecedent
at ``CLOSURE_TOL`` and the consequent at the looser ``CONSEQUENT_TOL``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .builder import BuildSpec, Fill, build_universe
from .channels import (
    Partition,
    bayesian_inverse,
    conditional_family,
    extreme_points,
    is_deterministic,
    partition_relation,
    recover_step_map,
)
from .errors import (
    AssumptionViolated,
    InfeasibleStructure,
    MapRecoveryFailed,
    NotDeterministic,
    PreconditionNotMet,
    ReducibleAfterRetries,
)
from .markov import JointTable
from .measures import (
    CLOSURE_TOL,
    EQUALITY_TOL,
    conditional_mutual_information as cmi,
    conditional_next_entropy,
    entropy,
    interaction_equalities,
    is_perfect_apparent_control,
    mutual_information,
    transfer_entropy,
)
from .universe import Universe, universe_to_dict

CONSEQUENT_TOL = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    tol: float | None = None
    claim: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "claim": self.claim,
            "tol": self.tol,
            "values": _jsonable(self.values),
        }


@dataclass
class VerificationReport:
    name: str
    checks: list = field(default_factory=list)
    counterexample: dict | None = None
    status: str = ""  # "pass" | "fail" | "skipped"
    message: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if all(c.passed for c in self.checks) else "fail"

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    @property
    def failed_checks(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "status": self.status,
            "checks": [c.to_dict() for c in self.checks],
        }
        if self.message:
            d["message"] = self.message
        if self.counterexample is not None:
            d["counterexample"] = _jsonable(self.counterexample)
        return d


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _finish(name, checks, u, joint=None, violations=None) -> VerificationReport:
    report = VerificationReport(name, checks)
    if not report.passed:
        report.counterexample = _counterexample(u, report.failed_checks, joint, violations)
    return report


def _counterexample(u, failed, joint=None, violations=None) -> dict:
    payload = {
        "universe": universe_to_dict(u),
        "failed": [c.name for c in failed],
        "claims": [c.claim for c in failed],
    }
    if violations:
        payload["violations"] = violations
    if joint is not None and joint is not u.joint:
        payload["joint"] = {"variables": list(joint.variables), "table": joint.table.tolist()}
    return payload


def _joint(u: Universe, joint: JointTable | None) -> JointTable:
    return u.joint if joint is None else joint


def _implication(name, claim, antecedent, consequent, values):
    return Check(name, (not antecedent) or consequent, dict(values, applies=antecedent), CONSEQUENT_TOL, claim)


def verify_closure_hierarchy(u: Universe, joint: JointTable | None = None) -> VerificationReport:
    """Chain rule, strong-implies-weak closure and the d-separation zeros."""
    j = _joint(u, joint)
    total = cmi(j, "M'", ["X", "X'"], "S")
    strong = cmi(j, "M'", "X'", "S")
    dsep = cmi(j, "M'", "X", ["X'", "S"])
    weak = cmi(j, "M'", "X", "S")
    checks = [
        Check(
            "chain_rule",
            abs(total - (strong + dsep)) <= CLOSURE_TOL,
            {"I(M':X,X'|S)": total, "I(M':X'|S)": strong, "I(M':X|X',S)": dsep},
            CLOSURE_TOL,
            "I(M':X,X'|S) = I(M':X'|S) + I(M':X|X',S)",
        ),
        _implication(
            "strong_implies_weak_interaction",
            "I(M':X'|S) = 0 implies I(M':X|S) = 0",
            strong <= CLOSURE_TOL,
            weak <= CONSEQUENT_TOL,
            {"strong": strong, "weak": weak},
        ),
    ]
    for proc in ("S", "M"):
        if proc not in j:
            continue
        s_ic = cmi(j, proc + "'", "X'", proc)
        w_ic = cmi(j, proc + "'", "X", proc)
        checks.append(
            _implication(
                f"strong_implies_weak_informational_{proc}",
                f"I({proc}':X'|{proc}) = 0 implies I({proc}':X|{proc}) = 0",
                s_ic <= CLOSURE_TOL,
                w_ic <= CONSEQUENT_TOL,
                {"strong": s_ic, "weak": w_ic},
            )
        )
    checks.append(
        Check(
            "d_separation_next",
            dsep <= CLOSURE_TOL,
            {"I(M':X|X',S)": dsep},
            CLOSURE_TOL,
            "{X', S} d-separates M' from X: I(M':X|X',S) = 0",
        )
    )
    other = cmi(j, "M'", "S", "X")
    checks.append(
        Check(
            "d_separation_current",
            other <= CLOSURE_TOL,
            {"I(M':S|X)": other},
            CLOSURE_TOL,
            "X d-separates M' from S: I(M':S|X) = 0",
        )
    )
    return _finish("closure_hierarchy", checks, u, j)


def verify_mi_equalities(u: Universe, joint: JointTable | None = None) -> VerificationReport:
    """Under strong closure ``I(M':S) = I(M':X) = I(M':X')``."""
    j = _joint(u, joint)
    strong = cmi(j, "M'", "X'", "S")
    if strong > CLOSURE_TOL:
        raise PreconditionNotMet(f"strong interaction closure fails: I(M':X'|S) = {strong:.6g}")
    eq = interaction_equalities(j, "S", "M", EQUALITY_TOL)
    checks = [
        Check(
            "mutual_information_equalities",
            eq.verdict,
            eq.to_dict(),
            EQUALITY_TOL,
            "I(M':S) = I(M':X) = I(M':X')",
        )
    ]
    return _finish("mi_equalities", checks, u, j)


def _exactly_zero(u: Universe, row: int, col: int) -> bool:
    if u.P.exact is not None:
        return u.P.exact[row][col] == 0
    return u.P.entries[row, col] == 0.0


def verify_support_conditions(u: Universe, joint: JointTable | None = None) -> VerificationReport:
    """Exact zero pattern of ``p(x'|x)`` and of the Bayesian inverse of ``S``."""
    j = _joint(u, joint)
    fM = u.map_of("M")
    fS = u.map_of("S")
    if fM is None or fS is None:
        raise MapRecoveryFailed("support conditions need deterministic S and M channels")
    checks = []
    violations = {}
    try:
        fMn = recover_step_map(j, "M'", "X").mapping
        g = recover_step_map(j, "M'", "S").mapping
        checks.append(Check("maps_recovered", True, {"fM'": fMn, "g": g}, CLOSURE_TOL,
                            "p(m'|x) and p(m'|s) are deltas"))
    except NotDeterministic as exc:
        checks.append(Check("maps_recovered", False, {"state": exc.state, "vector": exc.vector},
                            CLOSURE_TOL, "p(m'|x) and p(m'|s) are deltas"))
        if u.g is None:
            raise MapRecoveryFailed(str(exc)) from exc
        # fall back to the declared structure so the zero pattern can still be audited
        g = {s: u.g[s - 1] for s in range(1, len(u.g) + 1)}
        fMn = {x: g[fS[x - 1]] for x in range(1, u.n + 1)}

    n = u.n
    bad_p = [
        (xn, x)
        for x in range(1, n + 1)
        for xn in range(1, n + 1)
        if fM[xn - 1] != fMn[x] and not _exactly_zero(u, xn - 1, x - 1)
    ]
    checks.append(Check(
        "kernel_support",
        not bad_p,
        {"violating_(x',x)": bad_p},
        0.0,
        "p(x'|x) = 0 unless f^M(x') = f^M'(x)",
    ))
    inv = bayesian_inverse(u.channel("S"), u.stationary)
    bad_inv = [
        (x, s)
        for s in g
        for x in range(1, n + 1)
        if fMn[x] != g[s] and inv.entries[x - 1, s - 1] != 0.0
    ]
    checks.append(Check(
        "inverse_support",
        not bad_inv,
        {"violating_(x,s)": bad_inv},
        0.0,
        "pi^S†(x|s) = 0 unless f^M'(x) = g(s)",
    ))
    composed = all(fMn[x] == g.get(fS[x - 1]) for x in range(1, n + 1))
    checks.append(Check(
        "future_map_factorises",
        composed,
        {"fM'": fMn, "g∘fS": {x: g.get(fS[x - 1]) for x in range(1, n + 1)}},
        0.0,
        "f^M' = g ∘ f^S",
    ))
    if bad_p:
        violations["kernel"] = bad_p
    if bad_inv:
        violations["inverse"] = bad_inv
    return _finish("support_conditions", checks, u, j, violations)


def _assumptions(u: Universe, j: JointTable):
    """Check the extreme-point assumptions; returns ``E(M|X)`` or raises."""
    broken = []
    zero = [x + 1 for x in range(u.n) if u.stationary.p[x] <= 0]
    if zero:
        broken.append(("full support", f"p(x) = 0 for x in {zero}"))
    strong = cmi(j, "M'", "X'", "S")
    if strong > CLOSURE_TOL:
        broken.append(("strong interaction closure", f"I(M':X'|S) = {strong:.6g}"))
    m = u.channel("M")
    e_mx = extreme_points([(x + 1, m.entries[:, x]) for x in range(u.n)])
    inner = [x + 1 for x in range(u.n) if e_mx.find(m.entries[:, x]) is None]
    if inner:
        broken.append(("receiver columns are extreme points", f"pi^M(.|x) not extreme for x in {inner}"))
    ks = u.channel("S").k
    if ks != len(e_mx):
        broken.append(("|S| = |E(M|X)|", f"|S| = {ks}, |E(M|X)| = {len(e_mx)}"))
    if broken:
        bullets = "; ".join(b for b, _ in broken)
        detail = "; ".join(d for _, d in broken)
        payload = {
            "universe": universe_to_dict(u),
            "assumptions": [{"assumption": b, "detail": d} for b, d in broken],
        }
        raise AssumptionViolated(bullets, detail, payload)
    return e_mx


def verify_extreme_set_equalities(u: Universe, joint: JointTable | None = None) -> VerificationReport:
    """``E(M|X) = E(M'|X') = E(M'|X) = E(M'|S)`` and the ``s`` <-> extreme point pairing."""
    j = _joint(u, joint)
    e_mx = _assumptions(u, j)
    sets = {
        "E(M'|X')": extreme_points(conditional_family(j, "M'", "X'")),
        "E(M'|X)": extreme_points(conditional_family(j, "M'", "X")),
        "E(M'|S)": extreme_points(conditional_family(j, "M'", "S")),
    }
    values = {"E(M|X)": [list(p.vector) for p in e_mx]}
    values.update({k: [list(p.vector) for p in v] for k, v in sets.items()})
    checks = [
        Check(f"E(M|X) == {name}", e_mx.same_as(es), values, 1e-10, f"E(M|X) = {name}")
        for name, es in sets.items()
    ]
    e_ms = sets["E(M'|S)"]
    ks = u.channel("S").k
    one_to_one = len(e_ms) == ks and all(len(p.witnesses) == 1 for p in e_ms)
    checks.append(Check(
        "one_to_one_s_extreme",
        one_to_one,
        {"witnesses": [sorted(p.witnesses) for p in e_ms], "|S|": ks},
        1e-10,
        "each s selects its own extreme point of C(M'|S)",
    ))
    return _finish("extreme_sets", checks, u, j)


def verify_partition_theorems(u: Universe, joint: JointTable | None = None) -> VerificationReport:
    """Partition relation versus apparent control."""
    j = _joint(u, joint)
    fM = u.map_of("M")
    strong = cmi(j, "M'", "X'", "S")
    if fM is None or strong > CLOSURE_TOL:
        return VerificationReport(
            "partition_theorems",
            [],
            status="skipped",
            message="needs a deterministic receiver and strong interaction closure",
        )
    checks = []
    s_det, _ = is_deterministic(u.channel("S"))
    full = bool(np.all(u.stationary.p > 0))
    same_size = u.channel("S").k == u.channel("M").k
    checks.append(_implication(
        "source_deterministic",
        "full support, |S| = |M| and closure imply a deterministic S",
        full and same_size,
        s_det,
        {"deterministic": s_det},
    ))
    te = transfer_entropy(j, "S", "M")
    h = conditional_next_entropy(j, "M")
    pc = is_perfect_apparent_control(j, "S", "M")
    try:
        fMn = recover_step_map(j, "M'", "X").as_tuple()
    except NotDeterministic as exc:
        checks.append(Check("future_partition", False, {"state": exc.state, "vector": exc.vector},
                            CLOSURE_TOL, "p(m'|x) is a delta"))
        return _finish("partition_theorems", checks, u, j)
    current, future = Partition.from_map(fM), Partition.from_map(fMn)
    rel = partition_relation(current, future)
    coinciding = current.block_set() == future.block_set()
    orthogonal = all(rel.intersections.values())
    base = {
        "transfer_entropy": te,
        "H(M'|M)": h,
        "relation": rel.relation.value,
        "perfect_control": pc.holds,
    }
    checks += [
        Check("te_below_ceiling", te <= h + CLOSURE_TOL, base, CLOSURE_TOL, "I(M':S|M) <= H(M'|M)"),
        _implication(
            "s_determines_next_m",
            "M' a function of S implies I(M':S|M) = H(M'|M)",
            cmi(j, "M'", "M", "S") <= CLOSURE_TOL and entropy(j, "M'", "S") <= CLOSURE_TOL,
            abs(te - h) <= CONSEQUENT_TOL,
            base,
        ),
        _implication(
            "coinciding_no_control",
            "coinciding partitions imply I(M':S|M) = 0",
            coinciding,
            te <= CLOSURE_TOL,
            base,
        ),
        _implication(
            "orthogonal_max_control",
            "orthogonal partitions imply I(M':S|M) = H(M'|M)",
            orthogonal,
            abs(te - h) <= CLOSURE_TOL,
            base,
        ),
        _implication(
            "orthogonal_perfect_control",
            "orthogonal partitions imply perfect apparent control",
            orthogonal,
            pc.holds,
            dict(base, witnesses=pc.witnesses, missing=pc.missing),
        ),
        _implication(
            "perfect_control_orthogonal",
            "perfect apparent control implies orthogonal partitions",
            pc.holds,
            orthogonal,
            base,
        ),
    ]
    return _finish("partition_theorems", checks, u, j)


VERIFIERS = {
    "closure_hierarchy": verify_closure_hierarchy,
    "mi_equalities": verify_mi_equalities,
    "support_conditions": verify_support_conditions,
    "extreme_sets": verify_extreme_set_equalities,
    "partition_theorems": verify_partition_theorems,
}


def run_verifier(name: str, u: Universe, joint: JointTable | None = None) -> VerificationReport:
    """Run one verifier, turning its documented errors into report entries."""
    try:
        return VERIFIERS[name](u, joint)
    except PreconditionNotMet as exc:
        return VerificationReport(name, [], status="skipped", message=str(exc))
    except AssumptionViolated as exc:
        rep = VerificationReport(name, [Check("assumptions", False, {"violated": exc.bullet, "detail": exc.detail})])
        rep.counterexample = exc.payload
        rep.message = str(exc)
        return rep
    except (MapRecoveryFailed, NotDeterministic) as exc:
        rep = VerificationReport(name, [Check("map_recovery", False, {"error": str(exc)})])
        rep.counterexample = _counterexample(u, rep.checks)
        rep.message = str(exc)
        return rep


def verify_all(u: Universe, joint: JointTable | None = None) -> list:
    return [run_verifier(name, u, joint) for name in VERIFIERS]


def _surjective_map(rng, n: int, k: int) -> list:
    f = list(range(1, k + 1)) + [int(v) for v in rng.integers(1, k + 1, size=n - k)]
    return [f[i] for i in rng.permutation(n)]


def random_spec(rng, n_range=(4, 12), k_range=(2, 3)) -> BuildSpec:
    """Random feasible-looking spec, mixing generic, orthogonal and coinciding layouts."""
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    n = int(rng.integers(max(n_range[0], k), n_range[1] + 1))
    layout = rng.choice(["generic", "orthogonal", "coinciding"])
    fM = _surjective_map(rng, n, k)
    if layout == "orthogonal" and n >= k * k:
        pairs = [(s, m) for s in range(1, k + 1) for m in range(1, k + 1)]
        pairs += [(int(a), int(b)) for a, b in rng.integers(1, k + 1, size=(n - k * k, 2))]
        order = rng.permutation(n)
        fS = [pairs[i][0] for i in order]
        fM = [pairs[i][1] for i in order]
    elif layout == "coinciding":
        h = [int(v) + 1 for v in rng.permutation(k)]
        fS = [h[m - 1] for m in fM]
    else:
        fS = _surjective_map(rng, n, k)
    g = tuple(int(v) + 1 for v in rng.permutation(k))
    alpha = float(rng.choice([0.5, 1.0, 2.0]))
    return BuildSpec(n, tuple(fM), tuple(fS), g, Fill("dirichlet", alpha), int(rng.integers(2**31)))


@dataclass
class SweepReport:
    count: int
    attempts: int
    seed: int
    per_verifier: dict
    failures: list
    skipped: dict

    @property
    def pass_rate(self) -> float:
        total = sum(v["passed"] + v["failed"] for v in self.per_verifier.values())
        passed = sum(v["passed"] for v in self.per_verifier.values())
        return passed / total if total else 1.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "attempts": self.attempts,
            "seed": self.seed,
            "pass_rate": self.pass_rate,
            "per_verifier": self.per_verifier,
            "skipped": self.skipped,
            "failures": _jsonable(self.failures),
        }


def sweep(count: int, n_range=(4, 12), k_range=(2, 3), seed: int = 0, archive_dir=None) -> SweepReport:
    """Build ``count`` random universes and run every verifier on each.

    Specs whose block structure is reducible are redrawn and do not count.
    Failing universes are written to ``archive_dir`` when given.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    per = {name: {"passed": 0, "failed": 0} for name in VERIFIERS}
    skipped = {name: 0 for name in VERIFIERS}
    failures = []
    built = attempts = 0
    while built < count:
        attempts += 1
        spec = random_spec(rng, n_range, k_range)
        try:
            u = build_universe(spec)
        except (ReducibleAfterRetries, InfeasibleStructure):
            continue
        built += 1
        for rep in verify_all(u):
            if rep.status == "skipped":
                skipped[rep.name] += 1
            per[rep.name]["passed" if rep.passed else "failed"] += 1
            if not rep.passed:
                entry = {"index": built, "verifier": rep.name, "report": rep.to_dict()}
                if archive_dir is not None:
                    path = Path(archive_dir) / f"counterexample_{built:05d}_{rep.name}.json"
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(json.dumps(_jsonable(rep.counterexample["universe"]), indent=2))
                    entry["archived"] = str(path)
                failures.append(entry)
    return SweepReport(count, attempts, seed, per, failures, skipped)
