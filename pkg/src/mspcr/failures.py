"""Failure patterns, access-controlled survivor storage and the bandwidth ledger."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .mdscode import Codeword
from .params import ParameterError, SystemParams


class LocalityError(RuntimeError):
    """A repair step tried to read a failed node or a rack it may not touch."""


class RepairError(RuntimeError):
    """A repair phase is missing data it depends on."""


@dataclass(frozen=True)
class FailurePattern:
    """Host racks, their failed local nodes and the helper racks of one repair.

    ``extra`` is the additional helper rack used for the high-``m`` equations
    when ``b > u - v``; it is ``None`` otherwise.
    """

    nbar: int
    hosts: tuple[int, ...]
    failed: tuple[tuple[int, ...], ...]
    helpers: tuple[int, ...]
    extra: int | None = None

    @property
    def unconnected(self) -> tuple[int, ...]:
        used = set(self.hosts) | set(self.helpers)
        if self.extra is not None:
            used.add(self.extra)
        return tuple(i for i in range(self.nbar) if i not in used)

    def failed_nodes(self, u: int) -> list[int]:
        return sorted(rack * u + g for rack, local in zip(self.hosts, self.failed) for g in local)

    def allowed_racks(self) -> set[int]:
        racks = set(self.hosts) | set(self.helpers)
        if self.extra is not None:
            racks.add(self.extra)
        return racks

    def as_dict(self) -> dict:
        return {"hosts": list(self.hosts), "failed": [list(f) for f in self.failed],
                "helpers": list(self.helpers), "extra": self.extra}


def make_pattern(
    params: SystemParams,
    hosts: Sequence[int],
    failed: Sequence[Sequence[int]],
    helpers: Sequence[int] | None = None,
    extra: int | None = None,
) -> FailurePattern:
    """Validate a pattern; missing helpers default to the lowest non-host racks."""
    p = params
    order = sorted(range(len(hosts)), key=lambda t: hosts[t])
    hosts_s = tuple(int(hosts[t]) for t in order)
    failed_s = tuple(tuple(sorted(int(g) for g in failed[t])) for t in order) if len(failed) == len(hosts) else None
    if len(set(hosts_s)) != len(hosts_s) or any(not 0 <= i < p.nbar for i in hosts_s):
        raise ParameterError(f"host racks must be distinct racks in [0, {p.nbar}): {list(hosts)}")
    if len(hosts_s) != p.hbar:
        raise ParameterError(f"need exactly hbar={p.hbar} host racks, got {len(hosts_s)}")
    if failed_s is None:
        raise ParameterError("need one failed-node list per host rack")
    for local in failed_s:
        if len(local) != p.b or len(set(local)) != p.b or any(not 0 <= g < p.u for g in local):
            raise ParameterError(f"each host rack needs b={p.b} distinct failed nodes in [0, {p.u}): {local}")
    free = [i for i in range(p.nbar) if i not in hosts_s]
    if helpers is None:
        helpers_s = tuple(free[: p.dbar])
    else:
        helpers_s = tuple(sorted(int(j) for j in helpers))
    if len(set(helpers_s)) != p.dbar or set(helpers_s) & set(hosts_s) or any(j not in free for j in helpers_s):
        raise ParameterError(f"need dbar={p.dbar} distinct helper racks outside the host racks: {list(helpers_s)}")
    if p.asymptotic:
        spare = [i for i in free if i not in helpers_s]
        if extra is None:
            if not spare:
                raise ParameterError(
                    f"b={p.b} > u-v={p.u - p.v} needs dbar+1={p.dbar + 1} helper racks but only "
                    f"nbar-hbar={p.nbar - p.hbar} racks are outside the host racks")
            extra = spare[0]
        elif extra not in spare:
            raise ParameterError(f"extra helper rack {extra} must be outside hosts and helpers")
    elif extra is not None:
        raise ParameterError("an extra helper rack is only used when b > u-v")
    return FailurePattern(nbar=p.nbar, hosts=hosts_s, failed=failed_s, helpers=helpers_s, extra=extra)


def random_pattern(params: SystemParams, rng: np.random.Generator) -> FailurePattern:
    hosts = sorted(int(i) for i in rng.choice(params.nbar, params.hbar, replace=False))
    failed = [sorted(int(g) for g in rng.choice(params.u, params.b, replace=False)) for _ in hosts]
    return make_pattern(params, hosts, failed)


def pattern_space_size(params: SystemParams) -> int:
    return math.comb(params.nbar, params.hbar) * math.comb(params.u, params.b) ** params.hbar


def enumerate_patterns(params: SystemParams) -> Iterator[FailurePattern]:
    """Every host-rack set and failed-node choice, default helpers."""
    locals_ = list(itertools.combinations(range(params.u), params.b))
    for hosts in itertools.combinations(range(params.nbar), params.hbar):
        for failed in itertools.product(locals_, repeat=params.hbar):
            yield make_pattern(params, hosts, failed)


class Survivors:
    """The surviving contents of a codeword, as seen by the repair protocols.

    Failed columns are poisoned and reading them raises. Reads of racks outside
    the pattern's host and helper racks raise too; every read is recorded.
    """

    def __init__(self, cw: Codeword, pattern: FailurePattern):
        self.params = cw.params
        self.pattern = pattern
        self._failed = set(pattern.failed_nodes(cw.params.u))
        self._symbols = cw.symbols.copy()
        self._symbols[sorted(self._failed)] = -1
        self._allowed = pattern.allowed_racks()
        self.reads: Counter[int] = Counter()

    def node(self, node: int) -> np.ndarray:
        rack = node // self.params.u
        if node in self._failed:
            raise LocalityError(f"node {node} has failed")
        if rack not in self._allowed:
            raise LocalityError(f"rack {rack} is neither a host nor a helper rack")
        self.reads[rack] += 1
        return self._symbols[node]

    def rack_sum(self, rack: int, m: int, theta_pow: np.ndarray, q: int) -> np.ndarray:
        """Relayer aggregate ``sum_g theta**(g*m) * c[rack*u+g]``, shape ``(instances, rows)``."""
        u = self.params.u
        out = np.zeros(self._symbols.shape[1:], dtype=np.int64)
        for g in range(u):
            out = (out + theta_pow[(g * m) % u] * self.node(rack * u + g)) % q
        return out


@dataclass
class BandwidthLedger:
    """Inter-rack symbol counts; intra-rack traffic is never recorded."""

    beta1: Counter = field(default_factory=Counter)  # (host, helper) -> symbols
    beta2: Counter = field(default_factory=Counter)  # (receiver, sender) -> symbols
    trace: list[dict] | None = None

    def download(self, host: int, helper: int, count: int) -> None:
        self.beta1[(host, helper)] += count
        if self.trace is not None:
            self.trace.append({"phase": "download", "sender": helper, "receiver": host, "symbols": count})

    def cooperative(self, receiver: int, sender: int, count: int) -> None:
        self.beta2[(receiver, sender)] += count
        if self.trace is not None:
            self.trace.append({"phase": "cooperative", "sender": sender, "receiver": receiver, "symbols": count})

    @property
    def download_total(self) -> int:
        return sum(self.beta1.values())

    @property
    def cooperative_total(self) -> int:
        return sum(self.beta2.values())

    @property
    def total(self) -> int:
        return self.download_total + self.cooperative_total

    def merge(self, other: "BandwidthLedger") -> "BandwidthLedger":
        out = BandwidthLedger(self.beta1 + other.beta1, self.beta2 + other.beta2)
        if self.trace is not None or other.trace is not None:
            out.trace = (self.trace or []) + (other.trace or [])
        return out

    def as_dict(self) -> dict:
        return {
            "download": self.download_total,
            "cooperative": self.cooperative_total,
            "total": self.total,
            "beta1": [{"host": i, "helper": j, "symbols": c} for (i, j), c in sorted(self.beta1.items())],
            "beta2": [{"receiver": i, "sender": j, "symbols": c} for (i, j), c in sorted(self.beta2.items())],
        }
