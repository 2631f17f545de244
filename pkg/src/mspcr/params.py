"""System parameters, the repair-bandwidth lower bound and closed-form predictions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from . import ff

CONSTRUCTIONS = ("stacked", "grouped")


class ParameterError(ValueError):
    """A parameter set violates one of the model's constraints."""


def _is_power_of_two(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


@dataclass(frozen=True)
class SystemParams:
    n: int
    u: int
    k: int
    h: int
    hbar: int
    delta: int
    dbar: int
    construction: str
    q: int

    @property
    def nbar(self) -> int:
        return self.n // self.u

    @property
    def kbar(self) -> int:
        return self.k // self.u

    @property
    def v(self) -> int:
        return self.k % self.u

    @property
    def r(self) -> int:
        return self.n - self.k

    @property
    def rbar(self) -> int:
        return self.nbar - self.kbar

    @property
    def b(self) -> int:
        return self.h // self.hbar

    @property
    def d(self) -> int:
        return self.dbar * self.u + self.u - self.b

    @property
    def sbar(self) -> int:
        return self.dbar - self.kbar + 1

    @property
    def instances(self) -> int:
        """Number of stacked base-code instances (1 for the grouped code)."""
        if self.construction == "stacked":
            return self.sbar + self.hbar - self.delta
        return 1

    @property
    def rows(self) -> int:
        """Rows per instance, sbar ** nbar."""
        return self.sbar**self.nbar

    @property
    def l(self) -> int:  # noqa: E743
        return self.instances * self.rows

    @property
    def B(self) -> int:
        return self.k * self.l

    @property
    def mbar(self) -> int:
        """log2(hbar - delta + 2); only meaningful for the grouped code."""
        return (self.hbar - self.delta + 2).bit_length() - 1

    @property
    def asymptotic(self) -> bool:
        """True in the b > u - v regime where an extra helper rack is needed."""
        return self.b > self.u - self.v

    def field(self) -> ff.FieldConfig:
        return ff.make_field(self.q, self.u)

    def as_dict(self) -> dict:
        return {
            "n": self.n, "u": self.u, "k": self.k, "h": self.h, "hbar": self.hbar,
            "delta": self.delta, "dbar": self.dbar, "construction": self.construction,
            "q": self.q, "nbar": self.nbar, "kbar": self.kbar, "v": self.v, "r": self.r,
            "rbar": self.rbar, "b": self.b, "d": self.d, "sbar": self.sbar, "l": self.l,
        }


def validate(
    n: int,
    u: int,
    k: int,
    h: int,
    hbar: int,
    delta: int,
    dbar: int,
    construction: str = "stacked",
    q: int | None = None,
) -> SystemParams:
    """Check every model constraint and return the derived parameter set.

    When ``q`` is omitted the smallest admissible prime is chosen.
    """
    def need(cond: bool, msg: str) -> None:
        if not cond:
            raise ParameterError(msg)

    for name, val in dict(n=n, u=u, k=k, h=h, hbar=hbar, delta=delta, dbar=dbar).items():
        need(isinstance(val, int) and val >= 1, f"{name} must be a positive integer (got {val!r})")
    need(construction in CONSTRUCTIONS, f"construction must be one of {CONSTRUCTIONS}")
    need(n % u == 0, f"u={u} must divide n={n}")
    need(1 < u <= k, f"need 1 < u <= k (u={u}, k={k})")
    need(u <= n - k, f"need u <= n-k (u={u}, n-k={n - k})")
    nbar, kbar, v = n // u, k // u, k % u
    need(h % hbar == 0, f"hbar={hbar} must divide h={h}")
    b = h // hbar
    need(1 <= b <= u, f"need b = h/hbar in [1, u] (b={b})")
    need(1 <= delta <= hbar - 1, f"need delta in [1, hbar-1] (delta={delta}, hbar={hbar})")
    lo = kbar if b <= u - v else kbar + 1
    need(lo <= dbar <= nbar - hbar,
         f"need dbar in [{lo}, nbar-hbar={nbar - hbar}] for b={b}, u-v={u - v} (dbar={dbar})")
    d = dbar * u + u - b
    need(d >= k, f"need d = dbar*u+u-b >= k (d={d}, k={k})")
    if construction == "grouped":
        need(dbar == kbar + 1, f"grouped code needs dbar = kbar+1 (dbar={dbar}, kbar={kbar})")
        need(_is_power_of_two(hbar - delta + 2) and hbar - delta + 2 >= 4,
             f"grouped code needs hbar-delta+2 to be a power of two >= 4 (got {hbar - delta + 2})")
        need(hbar % (hbar - delta + 1) == 0,
             f"grouped code needs (hbar-delta+1) | hbar (hbar={hbar}, delta={delta})")

    sbar = dbar - kbar + 1
    if q is None:
        q = ff.smallest_valid_prime(n, sbar, u, construction)
    need(ff.is_prime(q), f"q={q} is not prime")
    need((q - 1) % u == 0, f"u={u} must divide q-1={q - 1}")
    need(q - 1 >= ff.min_field_order(n, sbar, construction),
         f"field too small: need q-1 >= {ff.min_field_order(n, sbar, construction)} (q={q})")
    need(ff.evaluation_points_distinct(ff.make_field(q, u), nbar, sbar),
         f"q={q} gives colliding evaluation points")

    return SystemParams(n=n, u=u, k=k, h=h, hbar=hbar, delta=delta, dbar=dbar,
                        construction=construction, q=q)


def with_construction(p: SystemParams, construction: str) -> SystemParams:
    if construction == p.construction:
        return p
    return validate(p.n, p.u, p.k, p.h, p.hbar, p.delta, p.dbar, construction)


def lower_bound(p: SystemParams) -> Fraction:
    """Minimum inter-rack repair bandwidth in symbols."""
    return Fraction(p.h * (p.dbar + p.hbar - p.delta) * p.l,
                    p.dbar - p.kbar + p.hbar - p.delta + 1)


class Prediction(NamedTuple):
    download: Fraction
    cooperative: Fraction
    total: Fraction


def predicted_bandwidth(p: SystemParams, scheme: str | None = None) -> Prediction:
    """Closed-form download and cooperative-phase totals of a repair scheme."""
    if scheme is not None:
        p = with_construction(p, scheme)
    denom = p.sbar + p.hbar - p.delta  # equals 2 + hbar - delta for the grouped code
    download = Fraction(p.dbar * p.h * p.l, denom)
    if p.asymptotic:
        download += Fraction(p.hbar * (p.b - p.u + p.v) * p.l, denom)
    coop = Fraction(p.h * (p.hbar - p.delta) * p.l, denom)
    return Prediction(download, coop, download + coop)


def from_mapping(cfg: dict) -> SystemParams:
    """Build params from a flat config mapping (string or int values)."""
    keys = ("n", "u", "k", "h", "hbar", "delta", "dbar")
    missing = [key for key in keys if key not in cfg]
    if missing:
        raise ParameterError(f"config is missing keys: {', '.join(missing)}")
    try:
        ints = {key: int(cfg[key]) for key in keys}
        q = int(cfg["q"]) if cfg.get("q") not in (None, "") else None
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"non-integer config value: {exc}") from None
    return validate(**ints, construction=str(cfg.get("construction", "stacked")), q=q)

