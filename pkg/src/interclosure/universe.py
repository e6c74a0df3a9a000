"""The universe container and its JSON file format.

File layout::

    {"n": 6,
     "P": [[row x'=1], ...],                 # decimals or "p/q" strings
     "channels": [{"name": "M", "kind": "deterministic", "map": [1, 1, 2, ...]},
                  {"name": "S", "kind": "stochastic", "pi": [[row y=1], ...]}],
     "g": [1, 2],                             # optional
     "provenance": {...}}                     # optional, echoed verbatim
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .channels import Channel, Partition, channel_from_function, is_deterministic
from .errors import InputError
from .markov import (
    Distribution,
    JointTable,
    StochasticMatrix,
    parse_entry,
    stationary_distribution,
    two_step_joint,
    validate_stochastic_matrix,
)


@dataclass(frozen=True, eq=False)
class Universe:
    P: StochasticMatrix
    stationary: Distribution
    channels: dict
    g: tuple | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.P.n

    @cached_property
    def joint(self) -> JointTable:
        return two_step_joint(self.P, self.channels, self.stationary)

    def channel(self, name: str) -> Channel:
        try:
            return self.channels[name]
        except KeyError:
            raise InputError(f"universe has no channel {name!r}") from None

    def map_of(self, name: str) -> tuple | None:
        return is_deterministic(self.channel(name))[1]

    @property
    def fM(self):
        return self.map_of("M")

    @property
    def fS(self):
        return self.map_of("S")

    def current_partition(self) -> Partition:
        return Partition.from_map(self.fM)

    def future_partition(self) -> Partition:
        """Blocks of states sharing the next ``M`` value, labelled by ``m' = g(s)``."""
        fS = self.fS
        g = self.g or tuple(range(1, max(fS) + 1))
        return Partition.from_map([g[s - 1] for s in fS])

    def digest(self) -> str:
        blob = json.dumps(universe_to_dict(self, provenance=False), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def make_universe(P, channels: dict, g=None, provenance=None) -> Universe:
    """Validate ``P``, solve its stationary distribution and bundle the channels."""
    P = validate_stochastic_matrix(P)
    for name, ch in channels.items():
        if ch.n != P.n:
            raise InputError(f"channel {name} expects {ch.n} states, kernel has {P.n}")
    pi = stationary_distribution(P)
    return Universe(P, pi, dict(channels), tuple(g) if g is not None else None, dict(provenance or {}))


def channel_to_dict(name: str, ch: Channel) -> dict:
    det, f = is_deterministic(ch)
    if det and ch.map is not None:
        return {"name": name, "kind": "deterministic", "map": list(f)}
    return {"name": name, "kind": "stochastic", "pi": ch.entries.tolist()}


def channel_from_dict(d: dict, n: int) -> tuple[str, Channel]:
    name = d.get("name")
    if not name:
        raise InputError("every channel needs a name")
    kind = d.get("kind", "deterministic" if "map" in d else "stochastic")
    if kind == "deterministic":
        k = d.get("k")
        return name, channel_from_function(d["map"], n, k)
    if kind == "stochastic":
        pi = np.array([[float(parse_entry(v)) for v in row] for row in d["pi"]])
        return name, Channel(pi)
    raise InputError(f"unknown channel kind {kind!r}")


def universe_to_dict(u: Universe, provenance: bool = True) -> dict:
    d = {
        "n": u.n,
        "P": u.P.to_rows(),
        "channels": [channel_to_dict(name, ch) for name, ch in u.channels.items()],
    }
    if u.g is not None:
        d["g"] = list(u.g)
    if provenance and u.provenance:
        d["provenance"] = u.provenance
    return d


def universe_from_dict(d: dict) -> Universe:
    try:
        rows = d["P"]
        n = int(d.get("n", len(rows)))
        if len(rows) != n:
            raise InputError(f"'n' is {n} but P has {len(rows)} rows")
        P = validate_stochastic_matrix(rows)
        channels = dict(channel_from_dict(c, n) for c in d.get("channels", []))
    except (KeyError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"malformed universe document: {exc!r}") from exc
    return make_universe(P, channels, d.get("g"), d.get("provenance"))


def load_universe(path) -> Universe:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    return universe_from_dict(doc)


def save_universe(u: Universe, path) -> None:
    Path(path).write_text(json.dumps(universe_to_dict(u), indent=2) + "\n")
