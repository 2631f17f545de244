"""The parity-check array codes behind both constructions.

Node ``iu+g`` at row ``a`` is tied to the evaluation point
``theta**g * xi**(i*sbar + a_i)``; a codeword satisfies, for every row ``a``,
every instance and every ``t < r``::

    sum_{i,g} point(iu+g, a)**t * c[iu+g, a] == 0

The stacked code is ``instances`` independent copies of this code, one after the
other in each node column. The grouped code is the single-instance case with
``sbar == 2``. Storage is ``symbols[node, instance, row]``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import ff
from .params import SystemParams, validate

MAGIC = b"MSPCR-CW\n"
# Products of two symbols summed over a row must stay inside int64.
MAX_Q = 1 << 24


class CodeError(ValueError):
    """Shape mismatch or an unrecoverable erasure pattern."""


def eval_point(field: ff.FieldConfig, sbar: int, i: int, g: int, ai: int) -> int:
    return pow(field.theta, g, field.q) * pow(field.xi, i * sbar + ai, field.q) % field.q


class PointTable:
    """Evaluation points of a parameter set, cached for vectorised use."""

    def __init__(self, params: SystemParams, field: ff.FieldConfig | None = None):
        self.params = params
        self.field = field or params.field()
        if self.field.q >= MAX_Q:
            raise CodeError(f"q={self.field.q} too large for int64 row arithmetic")
        p, q = params, self.field.q
        # lam[i, d] = xi^(i*sbar + d)
        self.lam = np.array(
            [[pow(self.field.xi, i * p.sbar + d, q) for d in range(p.sbar)] for i in range(p.nbar)],
            dtype=np.int64,
        )
        self.theta_pow = np.array([pow(self.field.theta, g, q) for g in range(p.u)], dtype=np.int64)
        rows = np.arange(p.rows, dtype=np.int64)
        # rack_digit[i, a] = a_i
        self.rack_digit = np.stack([(rows // p.sbar**i) % p.sbar for i in range(p.nbar)])
        lam_rows = self.lam[np.arange(p.nbar)[:, None], self.rack_digit]  # (nbar, rows)
        self.points = (self.theta_pow[None, :, None] * lam_rows[:, None, :] % q).reshape(p.n, p.rows)

    def point(self, i: int, g: int, ai: int) -> int:
        return int(self.theta_pow[g] * self.lam[i, ai] % self.field.q)


@dataclass
class Codeword:
    params: SystemParams
    symbols: np.ndarray  # (n, instances, rows)

    def __post_init__(self) -> None:
        p = self.params
        expected = (p.n, p.instances, p.rows)
        if self.symbols.shape != expected:
            raise CodeError(f"codeword shape {self.symbols.shape} != {expected}")

    @property
    def construction(self) -> str:
        return self.params.construction

    @property
    def stacked(self) -> bool:
        return self.params.construction == "stacked"

    def column(self, node: int) -> np.ndarray:
        """Node ``node``'s ``l`` symbols, instance-major."""
        return self.symbols[node].reshape(-1)

    def instance(self, y: int) -> np.ndarray:
        return self.symbols[:, y, :]

    def copy(self) -> "Codeword":
        return Codeword(self.params, self.symbols.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Codeword):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.symbols, other.symbols)


def zero_codeword(params: SystemParams) -> Codeword:
    return Codeword(params, np.zeros((params.n, params.instances, params.rows), dtype=np.int64))


def random_message(params: SystemParams, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, params.q, size=params.B, dtype=np.int64)


def _syndromes(table: PointTable, symbols: np.ndarray, nodes: Sequence[int], count: int) -> np.ndarray:
    """``S[t, y, a] = sum_{node in nodes} point(node, a)**t * c[node, y, a]`` for ``t < count``."""
    q = table.field.q
    _, Y, R = symbols.shape
    out = np.zeros((count, Y, R), dtype=np.int64)
    for node in nodes:
        pw = np.ones(R, dtype=np.int64)
        col = symbols[node]
        for t in range(count):
            out[t] = (out[t] + pw[None, :] * col) % q
            pw = pw * table.points[node] % q
    return out


def _solve_unknown_nodes(table: PointTable, symbols: np.ndarray, unknown: Sequence[int]) -> None:
    """Fill ``symbols[unknown]`` in place from the other columns, row by row."""
    p, field = table.params, table.field
    q = field.q
    unknown = list(unknown)
    e = len(unknown)
    if e == 0:
        return
    if e > p.r:
        raise CodeError(f"{e} erasures exceed r={p.r}")
    known = [node for node in range(p.n) if node not in set(unknown)]
    rhs = (-_syndromes(table, symbols, known, e)) % q  # (e, Y, R)
    try:
        sol = ff.solve_batched(field, table.points[unknown].T, range(e), rhs)
    except ff.SingularMatrixError as exc:
        raise CodeError(f"singular erasure system: {exc}") from exc
    symbols[unknown] = sol


def encode(msg: Iterable[int], params: SystemParams, field: ff.FieldConfig | None = None) -> Codeword:
    """Systematic encode: nodes ``0..k-1`` hold the message, parity is solved per row."""
    table = PointTable(params, field)
    data = np.asarray(list(msg) if not isinstance(msg, np.ndarray) else msg, dtype=np.int64)
    if data.shape != (params.B,):
        raise CodeError(f"message must have exactly k*l = {params.B} symbols (got {data.size})")
    if data.size and (data.min() < 0 or data.max() >= params.q):
        raise CodeError(f"message symbols must lie in [0, {params.q})")
    symbols = np.zeros((params.n, params.instances, params.rows), dtype=np.int64)
    symbols[: params.k] = data.reshape(params.k, params.instances, params.rows)
    _solve_unknown_nodes(table, symbols, range(params.k, params.n))
    return Codeword(params, symbols)


def message_of(cw: Codeword) -> np.ndarray:
    return cw.symbols[: cw.params.k].reshape(-1).copy()


def parity_check(cw: Codeword, table: PointTable | None = None) -> bool:
    p = cw.params
    expected = (p.n, p.instances, p.rows)
    if cw.symbols.shape != expected:
        raise CodeError(f"codeword shape {cw.symbols.shape} != {expected}")
    table = table or PointTable(p)
    return not _syndromes(table, cw.symbols, range(p.n), p.r).any()


def reconstruct(cw: Codeword, known: Iterable[int], table: PointTable | None = None) -> Codeword:
    """Recover every column outside ``known`` using only the ``known`` columns."""
    p = cw.params
    known = sorted(set(known))
    if any(not 0 <= node < p.n for node in known):
        raise CodeError(f"known node index out of range [0, {p.n})")
    if len(known) < p.k:
        raise CodeError(f"need at least k={p.k} known nodes, got {len(known)}")
    table = table or PointTable(p)
    unknown = [node for node in range(p.n) if node not in set(known)]
    symbols = cw.symbols.copy()
    symbols[unknown] = 0
    _solve_unknown_nodes(table, symbols, unknown)
    return Codeword(p, symbols)


def symbol_width(q: int) -> int:
    return 1 if q <= 1 << 8 else 2 if q <= 1 << 16 else 4


def to_bytes(cw: Codeword) -> bytes:
    p = cw.params
    width = symbol_width(p.q)
    header = {
        "construction": p.construction,
        "params": {key: getattr(p, key) for key in ("n", "u", "k", "h", "hbar", "delta", "dbar")},
        "q": p.q,
        "width": width,
    }
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(json.dumps(header, sort_keys=True).encode() + b"\n")
    buf.write(cw.symbols.reshape(p.n, -1).astype(f"<u{width}").tobytes())
    return buf.getvalue()


def from_bytes(raw: bytes) -> Codeword:
    if not raw.startswith(MAGIC):
        raise CodeError("not a codeword file (bad magic)")
    body = raw[len(MAGIC):]
    nl = body.index(b"\n")
    header = json.loads(body[:nl])
    p = validate(**header["params"], construction=header["construction"], q=header["q"])
    width = header["width"]
    data = np.frombuffer(body[nl + 1:], dtype=f"<u{width}")
    if data.size != p.n * p.l:
        raise CodeError(f"codeword payload has {data.size} symbols, expected {p.n * p.l}")
    return Codeword(p, data.astype(np.int64).reshape(p.n, p.instances, p.rows))


def read_message(raw: bytes, params: SystemParams) -> np.ndarray:
    width = symbol_width(params.q)
    data = np.frombuffer(raw, dtype=f"<u{width}").astype(np.int64)
    if data.size != params.B:
        raise CodeError(f"message file holds {data.size} symbols, expected k*l = {params.B}")
    return data
