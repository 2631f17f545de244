"""Binary Hamming code and its single-bit-flip translates.

A word ``f = (f_0, ..., f_{n'-1})`` is stored as the integer
``sum(f_i * 2**(n'-1-i))``, i.e. ``f_0`` is the most significant bit. With that
reading the length-3 code is ``{0, 7}`` and its translates are ``{3, 4}``,
``{2, 5}``, ``{1, 6}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property


@dataclass(frozen=True)
class HammingPartition:
    mbar: int
    sets: tuple[frozenset[int], ...]

    @property
    def nprime(self) -> int:
        return 2**self.mbar - 1

    @property
    def code(self) -> frozenset[int]:
        return self.sets[0]

    @cached_property
    def _owner(self) -> dict[int, int]:
        return {x: i for i, s in enumerate(self.sets) for x in s}

    def set_index(self, value: int) -> int:
        """Index of the translate that contains ``value``."""
        return self._owner[value]

    def translate_index(self, i: int) -> int:
        """Translate reached from the code by flipping coordinate ``f_i``."""
        if not 0 <= i < self.nprime:
            raise IndexError(f"coordinate {i} out of range [0, {self.nprime})")
        return i + 1

    def coordinate_of_bit(self, t: int) -> int:
        """Coordinate ``f_i`` stored at integer bit ``t`` (bit 0 least significant)."""
        if not 0 <= t < self.nprime:
            raise IndexError(f"bit {t} out of range [0, {self.nprime})")
        return self.nprime - 1 - t

    def translate_of_bit(self, t: int) -> int:
        """Translate reached from the code by flipping integer bit ``t``."""
        return self.translate_index(self.coordinate_of_bit(t))


def hamming_code(mbar: int) -> frozenset[int]:
    n = 2**mbar - 1
    # Column i of the parity-check matrix is the binary encoding of i + 1, so the
    # syndrome of f is the xor of (i + 1) over set coordinates f_i.
    code = set()
    for value in range(2**n):
        syndrome = 0
        for i in range(n):
            if value >> (n - 1 - i) & 1:
                syndrome ^= i + 1
        if syndrome == 0:
            code.add(value)
    return frozenset(code)


def build_partition(mbar: int) -> HammingPartition:
    if mbar < 1:
        raise ValueError(f"mbar must be >= 1 (got {mbar})")
    n = 2**mbar - 1
    code = hamming_code(mbar)
    sets = [code] + [frozenset(f ^ (1 << (n - 1 - i)) for f in code) for i in range(n)]
    return HammingPartition(mbar=mbar, sets=tuple(sets))
