"""Mixed-radix row indices.

A row index ``a`` in ``[sbar ** nbar)`` is read as digits ``a = sum(a_i * sbar**i)``;
digit ``i`` belongs to rack ``i``. All helpers also accept numpy integer arrays
and then work elementwise.
"""

from __future__ import annotations

from typing import Sequence


def _check_pos(i: int, nbar: int | None) -> None:
    if i < 0 or (nbar is not None and i >= nbar):
        raise IndexError(f"digit position {i} out of range [0, {nbar})")


def digit(a, i: int, sbar: int, nbar: int | None = None):
    _check_pos(i, nbar)
    return (a // sbar**i) % sbar


def digits(a: int, sbar: int, nbar: int) -> list[int]:
    """All digits, least significant (position 0) first."""
    return [(a // sbar**i) % sbar for i in range(nbar)]


def compose(ds: Sequence[int], sbar: int) -> int:
    return sum(d * sbar**i for i, d in enumerate(ds))


def substitute(a, i: int, j, sbar: int, nbar: int | None = None):
    """``a(i, j)``: replace digit ``i`` of ``a`` by ``j``."""
    _check_pos(i, nbar)
    if isinstance(j, int) and not 0 <= j < sbar:
        raise ValueError(f"digit value {j} out of range [0, {sbar})")
    return a + (j - digit(a, i, sbar)) * sbar**i


def shift(a, i: int, x: int, sbar: int, nbar: int | None = None):
    """``a(i, a_i + x mod sbar)``."""
    return substitute(a, i, (digit(a, i, sbar, nbar) + x) % sbar, sbar, nbar)


def puncture(a, J: Sequence[int], sbar: int = 2):
    """Read digits ``a_{j_0}, ..., a_{j_{|J|-1}}`` as a number, ``a_{j_0}`` least significant."""
    if any(x >= y for x, y in zip(J, J[1:])):
        raise ValueError(f"puncture coordinates must be strictly increasing, got {list(J)}")
    out = 0
    for t, j in enumerate(J):
        out = out + digit(a, j, sbar) * sbar**t
    return out
