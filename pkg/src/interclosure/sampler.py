"""Seeded trajectories of (X, S, M) and plug-in estimates of every measure."""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate

import numpy as np

from .errors import TooShort
from .markov import JointTable
from .measures import (
    conditional_mutual_information as cmi,
    conditional_next_entropy,
    transfer_entropy,
)
from .universe import Universe

GENERATOR = "numpy.random.PCG64 (SeedSequence.spawn: x0, transitions, one stream per channel)"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """1-based state sequences; ``channels`` maps channel name to its sequence."""

    x: np.ndarray
    channels: dict
    seed: int
    cards: dict
    provenance: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return len(self.x)

    @property
    def s(self):
        return self.channels.get("S")

    @property
    def m(self):
        return self.channels.get("M")

    def lines(self):
        """Rows ``"x s m ..."`` in channel order."""
        cols = [self.x] + list(self.channels.values())
        for row in zip(*cols):
            yield " ".join(str(int(v)) for v in row)


def _walk(P: np.ndarray, x0: int, u: np.ndarray) -> np.ndarray:
    cum = [list(accumulate(P[:, x].tolist())) for x in range(P.shape[0])]
    last = P.shape[0] - 1
    out = np.empty(len(u) + 1, dtype=np.int64)
    out[0] = x = x0
    for t, r in enumerate(u.tolist(), start=1):
        c = cum[x]
        # guard against cumulative sums that stop a hair below 1
        x = min(bisect_right(c, r * c[-1]), last)
        out[t] = x
    return out


def _emit(pi: np.ndarray, xs: np.ndarray, rng) -> np.ndarray:
    cum = np.cumsum(pi, axis=0)
    r = rng.random(len(xs)) * cum[-1, xs]
    return (r[None, :] >= cum[:, xs]).sum(axis=0).clip(max=pi.shape[0] - 1)


def sample_trajectory(universe: Universe, T: int, seed: int = 0) -> Trajectory:
    """Simulate ``T`` steps starting from the stationary distribution."""
    if T < 1:
        raise TooShort("T must be at least 1")
    P = np.asarray(universe.P)
    root = np.random.SeedSequence(seed)
    start_ss, step_ss, *chan_ss = root.spawn(2 + len(universe.channels))
    x0 = int(np.random.default_rng(start_ss).choice(universe.n, p=np.asarray(universe.stationary)))
    steps = np.random.default_rng(step_ss).random(T - 1)
    xs = _walk(P, x0, steps)
    channels = {}
    for (name, ch), ss in zip(universe.channels.items(), chan_ss):
        if ch.map is not None:
            ys = np.asarray(ch.map)[xs]
        else:
            ys = _emit(np.asarray(ch.entries), xs, np.random.default_rng(ss)) + 1
        channels[name] = ys
    cards = {name: ch.k for name, ch in universe.channels.items()}
    cards["X"] = universe.n
    prov = {"generator": GENERATOR, "seed": seed, "T": T, "universe": universe.digest()}
    return Trajectory(xs + 1, channels, seed, cards, prov)


def empirical_joint(traj: Trajectory) -> JointTable:
    """Relative frequencies of consecutive pairs over ``(X, X', Y, Y', ...)``."""
    if traj.T < 2:
        raise TooShort("need at least two time steps for a transition")
    seqs = [traj.x] + list(traj.channels.values())
    names = ["X"] + list(traj.channels)
    shape, cols, variables = [], [], []
    for name, seq in zip(names, seqs):
        card = traj.cards[name]
        cols += [seq[:-1] - 1, seq[1:] - 1]
        shape += [card, card]
        variables += [name, name + "'"]
    flat = np.ravel_multi_index(cols, shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    return JointTable(tuple(variables), counts / counts.sum())


def measure_values(joint: JointTable, source: str = "S", target: str = "M") -> dict:
    """The report measures on one joint (bits), keyed like the CLI report."""
    tp = target + "'"
    out = {
        "weak_iac": cmi(joint, tp, "X", source),
        "strong_iac": cmi(joint, tp, "X'", source),
        "transfer_entropy": transfer_entropy(joint, source, target),
        "h_zprime_given_z": conditional_next_entropy(joint, target),
    }
    for proc in (source, target):
        out[f"weak_ic_{proc}"] = cmi(joint, proc + "'", "X", proc)
        out[f"strong_ic_{proc}"] = cmi(joint, proc + "'", "X'", proc)
    return out


def empirical_measures(traj: Trajectory, universe: Universe, source: str = "S", target: str = "M") -> dict:
    """Plug-in estimates next to exact values: ``{name: {empirical, exact, gap}}``."""
    emp = measure_values(empirical_joint(traj), source, target)
    exact = measure_values(universe.joint, source, target)
    return {
        k: {"empirical": emp[k], "exact": exact[k], "gap": abs(emp[k] - exact[k])}
        for k in exact
    }
