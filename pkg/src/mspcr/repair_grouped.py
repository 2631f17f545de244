"""Repair of the single-instance binary-digit code using Hamming row groups.

Host racks are split into blocks of ``n' = hbar - delta + 1`` consecutive
(sorted) racks. Inside a block, a host only downloads on rows whose block
digits form a Hamming codeword; the self-flip rows and the flips by each peer
reach every translate of the Hamming code, hence every row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ff, radix
from .failures import BandwidthLedger, FailurePattern, RepairError, Survivors
from .hamming import HammingPartition, build_partition
from .mdscode import Codeword, PointTable
from .params import ParameterError, SystemParams
from .repair_stacked import equations_for, ff_pow, final_decode


@dataclass(frozen=True)
class GroupAssignment:
    groups: tuple[tuple[int, ...], ...]  # sorted host racks per group

    def group_of(self, rack: int) -> int:
        for gid, racks in enumerate(self.groups):
            if rack in racks:
                return gid
        raise KeyError(f"rack {rack} is not a host rack")

    def position(self, rack: int) -> int:
        return self.groups[self.group_of(rack)].index(rack)


def make_groups(pattern: FailurePattern, params: SystemParams) -> GroupAssignment:
    size = params.hbar - params.delta + 1
    if (size + 1) & size or size + 1 < 4:
        raise ParameterError(f"hbar-delta+2={size + 1} must be a power of two >= 4")
    if params.hbar % size:
        raise ParameterError(f"hbar={params.hbar} is not divisible by hbar-delta+1={size}")
    hosts = sorted(pattern.hosts)
    return GroupAssignment(tuple(tuple(hosts[s: s + size]) for s in range(0, len(hosts), size)))


def qualifying_rows(params: SystemParams, group: tuple[int, ...], part: HammingPartition) -> np.ndarray:
    """Rows whose digits on ``group`` read as a Hamming codeword."""
    rows = np.arange(params.rows)
    punct = radix.puncture(rows, list(group), 2)
    return rows[np.isin(punct, sorted(part.code))]


def _flip(rows: np.ndarray, rack: int) -> np.ndarray:
    return rows ^ (1 << rack)


@dataclass
class GroupedDownload:
    """``own[m, a]`` holds ``Delta_m`` at the known rows, ``known[a]`` flags them;
    ``cross[i][m, j]`` is ``H_{i_p, i}`` at ``rows[j]``."""

    p: int
    rack: int
    rows: np.ndarray
    own: np.ndarray
    known: np.ndarray
    cross: dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class GroupedRepairResult:
    codeword: Codeword
    ledger: BandwidthLedger
    groups: GroupAssignment
    downloads: dict[int, GroupedDownload]
    deltas: dict[int, np.ndarray]  # p -> (b, rows)
    racks_read: set[int]


def helper_sum_g(symbols_or_survivors, table: PointTable, host_rack: int, rack: int, m: int,
                 rows: np.ndarray) -> np.ndarray:
    """``agg_rack(a) + agg_rack(flip(a, host_rack))`` for ``a`` in ``rows``."""
    params, q = table.params, table.field.q
    if rack == host_rack:
        raise ValueError("helper_sum_g needs a rack other than the host rack")
    if isinstance(symbols_or_survivors, Survivors):
        agg = symbols_or_survivors.rack_sum(rack, m, table.theta_pow, q)[0]
    else:
        c = np.asarray(symbols_or_survivors)[:, 0, :]
        agg = np.zeros(params.rows, dtype=np.int64)
        for g in range(params.u):
            agg = (agg + table.theta_pow[(g * m) % params.u] * c[rack * params.u + g]) % q
    return (agg[rows] + agg[_flip(rows, host_rack)]) % q


def download_phase_g(
    survivors: Survivors,
    pattern: FailurePattern,
    p: int,
    groups: GroupAssignment,
    table: PointTable,
    part: HammingPartition,
    ledger: BandwidthLedger | None = None,
) -> GroupedDownload:
    params, q = table.params, table.field.q
    rack = pattern.hosts[p]
    others = [i for i in pattern.hosts if i != rack]
    rows = qualifying_rows(params, groups.groups[groups.group_of(rack)], part)
    flipped = _flip(rows, rack)
    digits = table.rack_digit[:, rows]
    own = np.zeros((params.b, params.rows), dtype=np.int64)
    cross = {i: np.zeros((params.b, rows.size), dtype=np.int64) for i in others}

    for m in range(params.b):
        helpers, unconnected, exps = equations_for(params, pattern, m)
        if 2 + len(others) + len(unconnected) != len(exps):
            raise RepairError(f"{len(exps)} equations for {2 + len(others) + len(unconnected)} unknowns at m={m}")
        rhs = np.zeros((len(exps), rows.size), dtype=np.int64)
        for j in helpers:
            H = helper_sum_g(survivors, table, rack, j, m, rows)
            if ledger is not None:
                ledger.download(rack, j, rows.size)
            lam = table.lam[j, digits[j]]
            for e, t in enumerate(exps):
                rhs[e] = (rhs[e] - ff_pow(lam, t, q) * H) % q
        cols = [table.lam[rack, digits[rack]], table.lam[rack, 1 - digits[rack]]]
        cols += [table.lam[i, digits[i]] for i in others + unconnected]
        v = ff.solve_batched(table.field, np.stack(cols, axis=1), exps, rhs)
        own[m, rows] = v[0]
        own[m, flipped] = v[1]
        for idx, i in enumerate(others):
            cross[i][m] = v[2 + idx]
    known = np.zeros(params.rows, dtype=bool)
    known[rows] = True
    known[flipped] = True
    return GroupedDownload(p=p, rack=rack, rows=rows, own=own, known=known, cross=cross)


def cooperative_phase_g(
    p: int,
    pattern: FailurePattern,
    groups: GroupAssignment,
    downloads: dict[int, GroupedDownload],
    table: PointTable,
    ledger: BandwidthLedger | None = None,
) -> np.ndarray:
    """``Delta_m`` at every row for host position ``p``; peers outside the group are never contacted."""
    q = table.field.q
    rack = pattern.hosts[p]
    mine = downloads[p]
    delta, known = mine.own.copy(), mine.known.copy()
    for peer in groups.groups[groups.group_of(rack)]:
        if peer == rack:
            continue
        t = pattern.hosts.index(peer)
        if t not in downloads:
            raise RepairError(f"host rack {peer} has not finished its download phase")
        received = downloads[t].cross[rack]
        if ledger is not None:
            ledger.cooperative(rack, peer, received.size)
        rows = downloads[t].rows
        if not known[rows].all():
            raise RepairError(f"host rack {rack} lacks the rows needed to use data from rack {peer}")
        target = _flip(rows, peer)
        delta[:, target] = (received - delta[:, rows]) % q
        known[target] = True
    if not known.all():
        raise RepairError(f"host rack {rack} covers only {int(known.sum())} of {known.size} rows")
    return delta


def repair_g(cw: Codeword, pattern: FailurePattern, trace: bool = False) -> GroupedRepairResult:
    if cw.stacked:
        raise ValueError("repair_g() needs a grouped codeword; use repair_stacked.repair")
    params = cw.params
    groups = make_groups(pattern, params)
    part = build_partition(params.mbar)
    table = PointTable(params)
    survivors = Survivors(cw, pattern)
    ledger = BandwidthLedger(trace=[] if trace else None)
    hosts = range(params.hbar)
    downloads = {p: download_phase_g(survivors, pattern, p, groups, table, part, ledger) for p in hosts}
    # barrier: every download phase completes before any cooperative phase starts
    deltas = {p: cooperative_phase_g(p, pattern, groups, downloads, table, ledger) for p in hosts}
    out = cw.symbols.copy()
    out[pattern.failed_nodes(params.u)] = -1
    for p in hosts:
        for node, sym in final_decode(survivors, pattern, p, {0: deltas[p]}, table).items():
            out[node] = sym
    return GroupedRepairResult(Codeword(params, out), ledger, groups, downloads, deltas,
                               set(survivors.reads))
