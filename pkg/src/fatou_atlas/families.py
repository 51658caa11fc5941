"""The two explicit quartic families used throughout the test suite.

Both families fix 0 with f'(0) = 0, so 0 is a superattracting critical
fixed point; the remaining critical points carry the interesting dynamics.
"""

from .errors import SingularParameter
from .poly import Polynomial

_SINGULAR_TOL = 1e-12


def cofree_critical(c: complex) -> complex:
    """The companion critical point c' of the captured family member f_c."""
    c = complex(c)
    denom = 2.0 * c * c * (c**3 - 2.0)
    if abs(c) < _SINGULAR_TOL or abs(c**3 - 2.0) < _SINGULAR_TOL:
        raise SingularParameter(f"c = {c} hits c(c^3-2) = 0")
    return (c**6 - 2.0 * c**3 + 3.0) / denom


def family_fc(c: complex) -> Polynomial:
    """Quartic with critical points {0, c, c'} where f_c(c) is a fixed point.

    f_c(z) = 2 c c' z^2 - (4/3)(c + c') z^3 + z^4.
    """
    c = complex(c)
    cp = cofree_critical(c)
    a2 = 2.0 * c * cp
    a3 = -(4.0 / 3.0) * (c + cp)
    return Polynomial((0.0, a2, a3))


def family_fa(a: complex) -> Polynomial:
    """Quartic with a persistent multiplier-1 fixed point at z = a.

    f_a(z) = (a^2 + 2/a) z^2 - (2a + 1/a^2) z^3 + z^4; when a^3 = 1 the fixed
    point at a is triple.
    """
    a = complex(a)
    if abs(a) < _SINGULAR_TOL:
        raise SingularParameter("a = 0 is a pole of the parametrization")
    a2 = a * a + 2.0 / a
    a3 = -(2.0 * a + 1.0 / (a * a))
    return Polynomial((0.0, a2, a3))


def resit_closed_form(a: complex) -> complex:
    """Closed-form residu iteratif of f_a at its fixed point a (a^3 != 1)."""
    a = complex(a)
    u = a**3 - 1.0
    if abs(u) < _SINGULAR_TOL:
        raise SingularParameter("a^3 = 1 is a pole of the closed form")
    return 1.0 - 2.0 / u - 1.0 / (u * u)
