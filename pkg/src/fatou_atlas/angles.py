"""Exact rational angle arithmetic mod 1 for the multiply-by-d dynamics.

Angles are stored as reduced fractions num/den in [0, 1).  All arithmetic is
exact integer arithmetic; denominators are capped so that downstream code can
rely on fitting in 64 bits.
"""

from dataclasses import dataclass
from math import gcd

from .errors import AngleOverflow

DENOMINATOR_CAP = 2**63


@dataclass(frozen=True, order=True)
class Angle:
    """A rational angle num/den in [0, 1), always stored reduced."""

    num: int
    den: int = 1

    def __post_init__(self):
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        num = self.num % self.den
        g = gcd(num, self.den)
        object.__setattr__(self, "num", num // g)
        object.__setattr__(self, "den", self.den // g)
        if self.den > DENOMINATOR_CAP:
            raise AngleOverflow(f"denominator {self.den} exceeds 2^63")

    @classmethod
    def parse(cls, text: str) -> "Angle":
        """Parse 'num/den' or a bare integer numerator."""
        if "/" in text:
            num, den = text.split("/", 1)
            return cls(int(num), int(den))
        return cls(int(text), 1)

    def __float__(self):
        return self.num / self.den

    def __str__(self):
        return f"{self.num}/{self.den}"


def map_angle(theta: Angle, d: int) -> Angle:
    """Multiply by d mod 1.  Exact; output denominator divides the input's."""
    if d < 2:
        raise ValueError("degree must be at least 2")
    return Angle(theta.num * d, theta.den)


def angle_orbit(theta: Angle, d: int, max_len: int = 4096) -> tuple[int, int]:
    """Exact (preperiod, period) of theta under multiplication by d.

    Rational angles are always preperiodic; raises AngleOverflow if the
    combined orbit length exceeds max_len.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    seen: dict[Angle, int] = {}
    cur = theta
    step = 0
    while cur not in seen:
        if step >= max_len:
            raise AngleOverflow(
                f"orbit of {theta} under x{d} exceeds max_len={max_len}"
            )
        seen[cur] = step
        cur = map_angle(cur, d)
        step += 1
    preperiod = seen[cur]
    return preperiod, step - preperiod


def forward_orbit(theta: Angle, d: int, max_len: int = 4096) -> list[Angle]:
    """All distinct angles in the forward orbit of theta, in visit order."""
    pre, per = angle_orbit(theta, d, max_len)
    out = [theta]
    cur = theta
    for _ in range(pre + per - 1):
        cur = map_angle(cur, d)
        out.append(cur)
    return out


def periodic_angles(d: int, period: int) -> list[list[Angle]]:
    """All cycles of theta -> d*theta with exact period `period`.

    Solutions of (d^p - 1) * theta in Z, grouped into orbits; angles whose
    minimal period divides p strictly are excluded.  Cycles are returned
    sorted by their smallest angle, each cycle in orbit order.
    """
    if d < 2 or period < 1:
        raise ValueError("need d >= 2 and period >= 1")
    modulus = d**period - 1
    if modulus > DENOMINATOR_CAP:
        raise AngleOverflow(f"d^period - 1 = {modulus} exceeds 2^63")
    # k / modulus has exact period p iff no proper divisor q of p satisfies
    # (d^q - 1) k = 0 mod modulus
    divisors = [q for q in range(1, period) if period % q == 0]
    cycles = []
    claimed = set()
    for k in range(modulus):
        if k in claimed:
            continue
        if any((k * (d**q - 1)) % modulus == 0 for q in divisors):
            claimed.add(k)
            continue
        orbit = []
        cur = k
        while cur not in claimed:
            claimed.add(cur)
            orbit.append(cur)
            cur = (cur * d) % modulus
        cycles.append([Angle(n, modulus) for n in orbit])
    cycles.sort(key=lambda cyc: min((a.num, a.den) for a in cyc))
    return cycles


@dataclass(frozen=True)
class SectorSpec:
    """Two distinct ray angles delimiting a sector, with an optional root hint."""

    theta1: Angle
    theta2: Angle
    root_hint: complex | None = None

    def __post_init__(self):
        if self.theta1 == self.theta2:
            raise ValueError("sector needs two distinct angles")
