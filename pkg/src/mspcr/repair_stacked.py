"""Two-phase partially cooperative repair of the stacked code.

Host rack ``i_p`` (the ``p``-th smallest host rack) works with instances
``p, p+1, ..., p+sbar-1`` (mod ``instances``) in the download phase and learns
the remaining instances from ``hbar - delta`` peers in the cooperative phase.
All quantities are exchanged as the rack aggregates

    H_{i_p, j}(a, m) = sum_x sum_g theta**(g*m) * c^{(p+x)}[j*u+g, a(i_p, a_{i_p} + x)]

which a rack's relayer computes from its own nodes at no bandwidth cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ff, radix
from .failures import BandwidthLedger, FailurePattern, RepairError, Survivors
from .mdscode import Codeword, PointTable


@dataclass
class DownloadResult:
    """What host ``p`` knows after its download phase.

    ``own[y][m, a]`` is ``Delta_m^{(y)}`` at row ``a`` for the ``sbar`` instances
    handled locally; ``cross[i][m, a]`` is ``H_{i_p, i}(a, m)`` for every other
    host rack ``i``.
    """

    p: int
    rack: int
    own: dict[int, np.ndarray] = field(default_factory=dict)
    cross: dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class RepairResult:
    codeword: Codeword
    ledger: BandwidthLedger
    downloads: dict[int, DownloadResult]
    deltas: dict[int, dict[int, np.ndarray]]  # p -> instance -> (b, rows)
    racks_read: set[int]


def helper_sum(symbols_or_survivors, table: PointTable, p: int, host_rack: int, rack: int, m: int) -> np.ndarray:
    """``H_{host_rack, rack}(a, m)`` for every row ``a``; ``p`` is the host's position in F."""
    params, q = table.params, table.field.q
    if rack == host_rack:
        raise ValueError("helper_sum needs a rack other than the host rack")
    if isinstance(symbols_or_survivors, Survivors):
        agg = symbols_or_survivors.rack_sum(rack, m, table.theta_pow, q)
    else:
        c = np.asarray(symbols_or_survivors)
        agg = np.zeros(c.shape[1:], dtype=np.int64)
        for g in range(params.u):
            agg = (agg + table.theta_pow[(g * m) % params.u] * c[rack * params.u + g]) % q
    rows = np.arange(params.rows)
    out = np.zeros(params.rows, dtype=np.int64)
    for x in range(params.sbar):
        y = (p + x) % params.instances
        out = (out + agg[y, radix.shift(rows, host_rack, x, params.sbar)]) % q
    return out


def equations_for(params, pattern: FailurePattern, m: int):
    """Helper racks, unconnected racks and exponent offsets ``w`` used for ``m``."""
    if m < params.u - params.v:
        helpers = list(pattern.helpers)
        unconnected = list(pattern.unconnected) + ([pattern.extra] if pattern.extra is not None else [])
        count = params.rbar
    else:
        if pattern.extra is None:
            raise RepairError(f"m={m} >= u-v needs an extra helper rack")
        helpers = list(pattern.helpers) + [pattern.extra]
        unconnected = list(pattern.unconnected)
        count = params.rbar - 1
    return helpers, sorted(unconnected), [w * params.u + m for w in range(count)]


def download_phase(
    survivors: Survivors,
    pattern: FailurePattern,
    p: int,
    table: PointTable,
    ledger: BandwidthLedger | None = None,
) -> DownloadResult:
    params, q = table.params, table.field.q
    rack = pattern.hosts[p]
    others = [i for i in pattern.hosts if i != rack]
    R, Y, s = params.rows, params.instances, params.sbar
    rows = np.arange(R)
    digits = table.rack_digit
    result = DownloadResult(p=p, rack=rack)
    own = {(p + x) % Y: np.zeros((params.b, R), dtype=np.int64) for x in range(s)}
    cross = {i: np.zeros((params.b, R), dtype=np.int64) for i in others}

    for m in range(params.b):
        helpers, unconnected, exps = equations_for(params, pattern, m)
        if s + len(others) + len(unconnected) != len(exps):
            raise RepairError(
                f"{len(exps)} equations for {s + len(others) + len(unconnected)} unknowns at m={m}")
        rhs = np.zeros((len(exps), R), dtype=np.int64)
        for j in helpers:
            H = helper_sum(survivors, table, p, rack, j, m)
            if ledger is not None:
                ledger.download(rack, j, R)
            lam = table.lam[j, digits[j]]
            for e, t in enumerate(exps):
                rhs[e] = (rhs[e] - ff_pow(lam, t, q) * H) % q
        # unknown columns: sbar own terms, other host racks, unconnected racks
        cols = [table.lam[rack, (digits[rack] + x) % s] for x in range(s)]
        cols += [table.lam[i, digits[i]] for i in others + unconnected]
        v = ff.solve_batched(table.field, np.stack(cols, axis=1), exps, rhs)
        for x in range(s):
            own[(p + x) % Y][m, radix.shift(rows, rack, x, s)] = v[x]
        for idx, i in enumerate(others):
            cross[i][m] = v[s + idx]
    result.own, result.cross = own, cross
    return result


def ff_pow(base: np.ndarray, e: int, q: int) -> np.ndarray:
    out = np.ones_like(base)
    b = base % q
    while e:
        if e & 1:
            out = out * b % q
        b = b * b % q
        e >>= 1
    return out


def coop_sets(p: int, hbar: int, delta: int) -> list[int]:
    """Positions of the host racks that send to host position ``p``."""
    if not 0 <= p < hbar or not 1 <= delta <= hbar - 1:
        raise ValueError(f"need p in [0, {hbar}) and delta in [1, {hbar - 1}]")
    if p < delta:
        return list(range(p + 1, p + hbar - delta + 1))
    if p <= hbar - delta:
        return list(range(delta - 1, p)) + list(range(p + 1, hbar))
    return list(range(p - hbar + delta, p))


def cooperative_phase(
    p: int,
    pattern: FailurePattern,
    downloads: dict[int, DownloadResult],
    table: PointTable,
    ledger: BandwidthLedger | None = None,
) -> dict[int, np.ndarray]:
    """Complete ``Delta_m^{(y)}`` for every instance at host position ``p``."""
    params, q = table.params, table.field.q
    Y, s, R = params.instances, params.sbar, params.rows
    rows = np.arange(R)
    rack = pattern.hosts[p]
    known = {y: arr.copy() for y, arr in downloads[p].own.items()}
    senders = coop_sets(p, params.hbar, params.delta)
    # ascending peers extend the window upwards, descending ones downwards
    order = [t for t in senders if t > p] + sorted((t for t in senders if t < p), reverse=True)
    for t in order:
        if t not in downloads:
            raise RepairError(f"host position {t} has not finished its download phase")
        peer = pattern.hosts[t]
        received = downloads[t].cross[rack]
        if ledger is not None:
            ledger.cooperative(rack, peer, received.size)
        inst = [(t + x) % Y for x in range(s)]
        missing = [x for x in range(s) if inst[x] not in known]
        if len(missing) != 1:
            raise RepairError(f"message from host position {t} leaves {len(missing)} unknown instances")
        xm = missing[0]
        acc = received.copy()
        for x in range(s):
            if x != xm:
                acc = (acc - known[inst[x]][:, radix.shift(rows, peer, x, s)]) % q
        new = np.zeros_like(acc)
        new[:, radix.shift(rows, peer, xm, s)] = acc
        known[inst[xm]] = new
    if len(known) != Y:
        raise RepairError(f"host position {p} recovered {len(known)} of {Y} instances")
    return known


def final_decode(
    survivors: Survivors,
    pattern: FailurePattern,
    p: int,
    deltas: dict[int, np.ndarray],
    table: PointTable,
) -> dict[int, np.ndarray]:
    """Solve the ``b x b`` Vandermonde systems for the failed nodes of host ``p``.

    ``deltas[y]`` has shape ``(b, rows)``. Returns ``node -> (instances, rows)``.
    """
    params, field = table.params, table.field
    q, u, b = field.q, params.u, params.b
    rack = pattern.hosts[p]
    failed = list(pattern.failed[p])
    alive = [g for g in range(u) if g not in failed]
    delta = np.stack([deltas[y] for y in range(params.instances)], axis=1)  # (b, Y, R)
    rhs = delta.copy()
    for g in alive:
        c = survivors.node(rack * u + g)
        for m in range(b):
            rhs[m] = (rhs[m] - table.theta_pow[(g * m) % u] * c) % q
    V = [[pow(field.theta, g * m, q) for g in failed] for m in range(b)]
    Vinv = np.array(ff.inverse(field, V), dtype=np.int64)
    sol = np.tensordot(Vinv, rhs, axes=(1, 0)) % q
    return {rack * u + g: sol[t] for t, g in enumerate(failed)}


def repair(cw: Codeword, pattern: FailurePattern, trace: bool = False) -> RepairResult:
    """Repair every failed node of ``pattern``; the input codeword is not modified."""
    if not cw.stacked:
        raise ValueError("repair() needs a stacked codeword; use repair_grouped.repair_g")
    table = PointTable(cw.params)
    survivors = Survivors(cw, pattern)
    ledger = BandwidthLedger(trace=[] if trace else None)
    hosts = range(cw.params.hbar)
    downloads = {p: download_phase(survivors, pattern, p, table, ledger) for p in hosts}
    # barrier: every download phase completes before any cooperative phase starts
    deltas = {p: cooperative_phase(p, pattern, downloads, table, ledger) for p in hosts}
    out = cw.symbols.copy()
    out[pattern.failed_nodes(cw.params.u)] = -1
    for p in hosts:
        for node, sym in final_decode(survivors, pattern, p, deltas[p], table).items():
            out[node] = sym
    return RepairResult(Codeword(cw.params, out), ledger, downloads, deltas, set(survivors.reads))
