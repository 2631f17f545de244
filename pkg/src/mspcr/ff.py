"""Prime-field arithmetic and small dense linear algebra over F_q.

Field elements are plain ints reduced into ``[0, q)``. Matrices are lists of
rows. Everything here is exact; nothing touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

Matrix = list[list[int]]


class FieldError(ValueError):
    """Bad field parameters (non-prime modulus, no element of the needed order)."""


class SingularMatrixError(ArithmeticError):
    """Raised when an elimination finds no pivot.

    The code constructions only build invertible systems when the field
    constraints hold, so seeing this means the field/parameters are broken.
    """


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def _prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def multiplicative_order(a: int, q: int) -> int:
    a %= q
    if a == 0:
        raise FieldError("0 has no multiplicative order")
    order, x = 1, a
    while x != 1:
        x = x * a % q
        order += 1
    return order


def smallest_primitive_root(q: int) -> int:
    if q == 2:
        return 1
    factors = _prime_factors(q - 1)
    for g in range(2, q):
        if all(pow(g, (q - 1) // f, q) != 1 for f in factors):
            return g
    raise FieldError(f"no primitive root mod {q}")  # unreachable for prime q


@dataclass(frozen=True)
class FieldConfig:
    """F_q together with a primitive element ``xi`` and ``theta`` of order ``u``."""

    q: int
    xi: int
    theta: int
    u: int

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in F_{self.q}")
        return pow(a, self.q - 2, self.q)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return pow(self.inv(a), -e, self.q)
        return pow(a % self.q, e, self.q)


def arith(field: FieldConfig, a: int, b: int, op: str) -> int:
    """Dispatch one of ``add``, ``mul``, ``inv`` (ignores ``b``) or ``pow``."""
    for x in (a,) if op in ("inv", "pow") else (a, b):
        if not 0 <= x < field.q:
            raise ValueError(f"operand {x} not in [0, {field.q})")
    if op == "add":
        return field.add(a, b)
    if op == "mul":
        return field.mul(a, b)
    if op == "inv":
        return field.inv(a)
    if op == "pow":
        return field.pow(a, b)
    raise ValueError(f"unknown op {op!r}")


def make_field(q: int, u: int) -> FieldConfig:
    if not is_prime(q):
        raise FieldError(f"q={q} is not prime")
    if u < 1 or (q - 1) % u:
        raise FieldError(f"u={u} does not divide q-1={q - 1}")
    xi = smallest_primitive_root(q)
    theta = pow(xi, (q - 1) // u, q)
    return FieldConfig(q=q, xi=xi, theta=theta, u=u)


def min_field_order(n: int, sbar: int, construction: str) -> int:
    """Smallest admissible value of q-1 for each construction."""
    if construction == "stacked":
        return n * sbar
    if construction == "grouped":
        return 2 * n
    raise ValueError(f"unknown construction {construction!r}")


def smallest_valid_prime(n: int, sbar: int, u: int, construction: str) -> int:
    lo = min_field_order(n, sbar, construction)
    q = lo + 1
    while not (is_prime(q) and (q - 1) % u == 0):
        q += 1
    return q


def evaluation_points_distinct(field: FieldConfig, nbar: int, sbar: int) -> bool:
    """True iff all theta^g * xi^(i*sbar + j) are pairwise distinct."""
    seen = set()
    for i in range(nbar):
        for j in range(sbar):
            base = pow(field.xi, i * sbar + j, field.q)
            for g in range(field.u):
                seen.add(pow(field.theta, g, field.q) * base % field.q)
    return len(seen) == nbar * sbar * field.u


def _eliminate(field: FieldConfig, aug: Matrix, ncols: int) -> Matrix:
    # Gauss-Jordan in place on an augmented matrix; first ``ncols`` columns square.
    q = field.q
    size = len(aug)
    for col in range(ncols):
        pivot = next((r for r in range(col, size) if aug[r][col] % q), None)
        if pivot is None:
            raise SingularMatrixError(f"singular {size}x{ncols} system over F_{q}")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        row = aug[col]
        f = pow(row[col], q - 2, q)
        row[:] = [x * f % q for x in row]
        for r in range(size):
            if r != col and aug[r][col]:
                c = aug[r][col]
                aug[r] = [(x - c * y) % q for x, y in zip(aug[r], row)]
    return aug


def solve_linear(field: FieldConfig, M: Sequence[Sequence[int]], rhs: Sequence[int]) -> list[int]:
    """Solve ``M x = rhs`` exactly; M must be square and invertible."""
    n = len(M)
    if any(len(row) != n for row in M) or len(rhs) != n:
        raise ValueError("solve_linear needs a square matrix and matching rhs")
    aug = [[x % field.q for x in row] + [b % field.q] for row, b in zip(M, rhs)]
    return [row[n] for row in _eliminate(field, aug, n)]


def inverse(field: FieldConfig, M: Sequence[Sequence[int]]) -> Matrix:
    n = len(M)
    if any(len(row) != n for row in M):
        raise ValueError("inverse needs a square matrix")
    aug = [[x % field.q for x in row] + [int(i == j) for j in range(n)] for i, row in enumerate(M)]
    return [row[n:] for row in _eliminate(field, aug, n)]


def matmul(field: FieldConfig, A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> Matrix:
    q = field.q
    cols = list(zip(*B))
    return [[sum(x * y for x, y in zip(row, col)) % q for col in cols] for row in A]


def matvec(field: FieldConfig, A: Sequence[Sequence[int]], x: Sequence[int]) -> list[int]:
    q = field.q
    return [sum(a * b for a, b in zip(row, x)) % q for row in A]


def vandermonde(field: FieldConfig, points: Sequence[int], exponents: Sequence[int]) -> Matrix:
    """Rows indexed by exponent, columns by point: ``V[r][c] = points[c] ** exponents[r]``."""
    q = field.q
    return [[pow(x, e, q) for x in points] for e in exponents]


def solve_batched(field: FieldConfig, points, exponents: Sequence[int], rhs):
    """Solve one generalised-Vandermonde system per row index, batching equal systems.

    ``points`` has shape ``(R, ncols)``: row ``a``'s system has matrix
    ``M[e][c] = points[a, c] ** exponents[e]``. ``rhs`` has shape
    ``(len(exponents), ..., R)``. Returns ``x`` of shape ``(ncols, ..., R)``.
    """
    q = field.q
    exponents = list(exponents)
    points = np.asarray(points, dtype=np.int64)
    rhs = np.asarray(rhs, dtype=np.int64)
    if len(exponents) != points.shape[1]:
        raise ValueError(f"{len(exponents)} equations for {points.shape[1]} unknowns")
    out = np.zeros((points.shape[1],) + rhs.shape[1:], dtype=np.int64)
    uniq, idx = np.unique(points, axis=0, return_inverse=True)
    idx = idx.reshape(-1)
    for key, pts in enumerate(uniq):
        rows = np.nonzero(idx == key)[0]
        Minv = np.array(inverse(field, vandermonde(field, [int(x) for x in pts], exponents)),
                        dtype=np.int64)
        out[..., rows] = np.tensordot(Minv, rhs[..., rows], axes=(1, 0)) % q
    return out
