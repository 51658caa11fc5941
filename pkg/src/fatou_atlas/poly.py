"""Monic 0-fixed polynomials: evaluation, critical points, cycles, multipliers.

The normal form is f(z) = a1 z + a2 z^2 + ... + a_{d-1} z^{d-1} + z^d, stored
as the tuple (a1, ..., a_{d-1}).  All numerics are double precision; the
tolerances used for classification are module constants and documented.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditioned, NonConvergence, NotParabolic

ROOT_TOL = 1e-12          # relative residual target for the root finder
ABERTH_BUDGET = 200
CLUSTER_TOL = 2e-6        # roots closer than this collapse into one multiple root
NEUTRAL_TOL = 1e-6        # |multiplier| within this of 1 counts as neutral
ROOT_OF_UNITY_MAX_Q = 64
CYCLE_DEDUP_TOL = 1e-6    # orbits closer than this are one cycle (double roots
                          # of f^p - z only resolve to ~1e-8 in doubles)
SUPER_TOL = 1e-9          # |multiplier| below this counts as superattracting


@dataclass(frozen=True)
class Polynomial:
    """Degree-d monic polynomial fixing 0, d >= 2."""

    coeffs: tuple  # (a1, ..., a_{d-1}), complex entries

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(a) for a in self.coeffs))
        if self.degree < 2:
            raise ValueError("degree must be at least 2")

    @property
    def degree(self) -> int:
        return len(self.coeffs) + 1

    def evaluate(self, z):
        """Horner evaluation; exact 0 at z = 0.  Accepts scalars or arrays."""
        acc = np.ones_like(np.asarray(z)) if isinstance(z, np.ndarray) else 1.0
        for a in reversed(self.coeffs):
            acc = acc * z + a
        return acc * z

    __call__ = evaluate

    def derivative(self, z):
        """f'(z) by Horner on the derivative coefficients."""
        d = self.degree
        acc = d * (np.ones_like(np.asarray(z)) if isinstance(z, np.ndarray) else 1.0)
        for k in range(d - 1, 0, -1):
            acc = acc * z + k * self.coeffs[k - 1]
        return acc

    def iterate(self, z, n: int):
        for _ in range(n):
            z = self.evaluate(z)
        return z

    def full_coeffs(self) -> np.ndarray:
        """Coefficients highest power first, [1, a_{d-1}, ..., a1, 0]."""
        return np.array([1.0] + [self.coeffs[k] for k in range(self.degree - 2, -1, -1)] + [0.0],
                        dtype=np.complex128)

    def derivative_coeffs(self) -> np.ndarray:
        """Coefficients of f', highest power first."""
        d = self.degree
        return np.array([d] + [k * self.coeffs[k - 1] for k in range(d - 1, 0, -1)],
                        dtype=np.complex128)

    def escape_radius(self) -> float:
        """Radius beyond which |f(z)| >= 2|z| for this monic normal form."""
        return max(3.0, 2.0 * (1.0 + sum(abs(a) for a in self.coeffs)))

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "coeffs": [[a.real, a.imag] for a in self.coeffs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Polynomial":
        coeffs = [complex(re, im) for re, im in obj["coeffs"]]
        if len(coeffs) != obj["degree"] - 1:
            raise ValueError("coefficient count does not match degree")
        return cls(tuple(coeffs))


@dataclass(frozen=True)
class CriticalSet:
    """Critical points with multiplicities; multiplicities sum to d - 1."""

    points: tuple          # complex critical points, one entry per distinct point
    multiplicities: tuple  # matching positive integers
    residual: float        # max |f'(point)| over the set


@dataclass(frozen=True)
class CycleRecord:
    """A periodic orbit with its multiplier and classification."""

    period: int
    points: tuple          # p complex values, in orbit order
    multiplier: complex
    cls: str               # attracting / superattracting / repelling / parabolic / irrationally-neutral
    resit: complex | None = field(default=None, compare=False)

    def to_json(self) -> dict:
        out = {
            "period": self.period,
            "points": [[z.real, z.imag] for z in self.points],
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "class": self.cls,
        }
        if self.resit is not None:
            out["resit"] = [self.resit.real, self.resit.imag]
        return out


def _poly_eval(coeffs: np.ndarray, z):
    acc = np.zeros_like(np.asarray(z, dtype=np.complex128)) + coeffs[0]
    for c in coeffs[1:]:
        acc = acc * z + c
    return acc


def aberth_roots(coeffs: np.ndarray, budget: int = ABERTH_BUDGET, tol: float = ROOT_TOL) -> np.ndarray:
    """All roots of the polynomial given by highest-first coefficients.

    Aberth-Ehrlich simultaneous iteration from a circle of initial guesses,
    followed by Newton polish of well-separated roots.  Robust up to degree
    a few tens, which covers this package's needs.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    coeffs = coeffs / coeffs[0]
    n = len(coeffs) - 1
    if n == 0:
        return np.empty(0, dtype=np.complex128)
    if n == 1:
        return np.array([-coeffs[1]])
    deriv = coeffs[:-1] * np.arange(n, 0, -1)
    radius = 1.0 + max(abs(c) for c in coeffs[1:])
    angles = 2.0 * np.pi * (np.arange(n) / n + 0.137)
    z = radius * np.exp(1j * angles) * (1.0 + 0.05 * np.cos(7 * angles))
    for _ in range(budget):
        p = _poly_eval(coeffs, z)
        dp = _poly_eval(deriv, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dp != 0, p / np.where(dp == 0, 1, dp), 0.0)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            sums = (1.0 / diff).sum(axis=1) - 1.0  # remove the diagonal 1/1 terms
            w = ratio / (1.0 - ratio * sums)
        w = np.where(np.isfinite(w), w, 0.5 * ratio)
        z = z - w
        if np.all(np.abs(w) <= tol * (1.0 + np.abs(z))):
            break
    # Newton polish: helps simple roots, harmless elsewhere
    for _ in range(3):
        p = _poly_eval(coeffs, z)
        dp = _poly_eval(deriv, z)
        step = np.where(np.abs(dp) > 1e-30, p / np.where(dp == 0, 1, dp), 0.0)
        ok = np.abs(step) < 1e-2 * (1.0 + np.abs(z))
        z = np.where(ok, z - step, z)
    return z


def _cluster_roots(roots: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    """Greedy proximity clustering; returns (centroid, multiplicity) pairs."""
    remaining = list(roots)
    clusters = []
    while remaining:
        seed = remaining.pop(0)
        members = [seed]
        keep = []
        for r in remaining:
            if abs(r - seed) <= tol * (1.0 + abs(seed)):
                members.append(r)
            else:
                keep.append(r)
        remaining = keep
        clusters.append((complex(np.mean(members)), len(members)))
    clusters.sort(key=lambda c: (round(c[0].real, 9), round(c[0].imag, 9)))
    return clusters


def critical_points(f: Polynomial, budget: int = ABERTH_BUDGET) -> CriticalSet:
    """All d-1 roots of f' with multiplicity.

    Raises NonConvergence if the worst residual exceeds the relative
    tolerance scaled by the derivative's coefficient size.
    """
    dcoef = f.derivative_coeffs()
    roots = aberth_roots(dcoef, budget=budget)
    clusters = _cluster_roots(roots, CLUSTER_TOL)
    points = tuple(c for c, _ in clusters)
    mults = tuple(m for _, m in clusters)
    residual = max(abs(f.derivative(p)) for p in points)
    scale = max(1.0, max(abs(c) for c in dcoef)) * max(1.0, max(abs(p) for p in points)) ** (f.degree - 1)
    if residual > 1e-6 * scale:
        raise NonConvergence(f"critical point residual {residual:.3e} above tolerance")
    return CriticalSet(points=points, multiplicities=mults, residual=residual)


def _orbit_multiplier(f: Polynomial, z0: complex, period: int) -> tuple[list[complex], complex]:
    pts = [z0]
    lam = f.derivative(z0)
    z = z0
    for _ in range(period - 1):
        z = f(z)
        pts.append(z)
        lam *= f.derivative(z)
    return pts, complex(lam)


def classify_multiplier(lam: complex) -> str:
    mag = abs(lam)
    if mag < SUPER_TOL:
        return "superattracting"
    if mag < 1.0 - NEUTRAL_TOL:
        return "attracting"
    if mag > 1.0 + NEUTRAL_TOL:
        return "repelling"
    # neutral ring: parabolic iff lam^q is within tolerance of 1 for small q
    w = 1.0 + 0.0j
    for _ in range(ROOT_OF_UNITY_MAX_Q):
        w *= lam
        if abs(w - 1.0) < NEUTRAL_TOL:
            return "parabolic"
    return "irrationally-neutral"


def find_cycles(f: Polynomial, max_period: int, search_box=None,
                lattice: int = 24, extra_seeds=()) -> list[CycleRecord]:
    """Distinct cycles of period <= max_period, found by Newton iteration
    on f^p(z) - z from a deterministic seed lattice.

    Best effort: the returned list may be incomplete for sparse lattices.
    Divisor-period orbits are reported once, at their minimal period.
    """
    if max_period < 1:
        raise ValueError("max_period must be at least 1")
    if search_box is None:
        r = f.escape_radius()
        center, width, height = 0.0 + 0.0j, 2.0 * r, 2.0 * r
    else:
        center, width, height = search_box
        center = complex(center)

    xs = center.real + width * (np.arange(lattice) / (lattice - 1) - 0.5)
    ys = center.imag + height * (np.arange(lattice) / (lattice - 1) - 0.5)
    seeds = (xs[None, :] + 1j * ys[:, None]).ravel()
    if len(extra_seeds):
        seeds = np.concatenate([seeds, np.asarray(extra_seeds, dtype=np.complex128)])

    records: list[CycleRecord] = []

    def known(z0: complex, period: int) -> bool:
        for rec in records:
            if rec.period != period:
                continue
            if min(abs(z0 - p) for p in rec.points) < CYCLE_DEDUP_TOL * (1.0 + abs(z0)):
                return True
        return False

    for p in range(1, max_period + 1):
        z = seeds.copy()
        for _ in range(80):
            val = z.copy()
            dval = np.ones_like(z)
            for _ in range(p):
                dval = dval * f.derivative(val)
                val = f(val)
            g = val - z
            dg = dval - 1.0
            step = np.where(np.abs(dg) > 1e-14, g / np.where(dg == 0, 1, dg), 0.5 * g)
            step = np.where(np.isfinite(step), step, 0.0)
            z = z - step
            z = np.where(np.isfinite(z), z, np.inf)
        # keep converged, finite, in-range points
        val = z.copy()
        for _ in range(p):
            val = f(val)
        good = np.isfinite(z) & (np.abs(z) < 1e6)
        good &= np.abs(val - z) <= 1e-9 * (1.0 + np.abs(z))
        for z0 in z[good]:
            z0 = _polish_multiple(f, complex(z0), p)
            # minimal period: smallest divisor q of p with f^q(z0) = z0
            minimal = p
            for q in range(1, p):
                if p % q == 0 and abs(f.iterate(z0, q) - z0) < 1e-8 * (1.0 + abs(z0)):
                    minimal = q
                    break
            if minimal != p or known(z0, p):
                continue
            pts, lam = _orbit_multiplier(f, z0, p)
            cls = classify_multiplier(lam)
            resit = None
            if cls == "parabolic" and abs(lam - 1.0) < NEUTRAL_TOL:
                try:
                    resit = residu_iteratif(
                        f, CycleRecord(period=p, points=tuple(pts), multiplier=lam, cls=cls))
                except (NotParabolic, IllConditioned):
                    resit = None
            records.append(CycleRecord(period=p, points=tuple(pts), multiplier=lam,
                                       cls=cls, resit=resit))
    records.sort(key=lambda r: (r.period, round(r.points[0].real, 9), round(r.points[0].imag, 9)))
    return records


def _polish_multiple(f: Polynomial, z0: complex, p: int) -> complex:
    """Refine a periodic point where f^p - id has a multiple root.

    Plain Newton stalls at ~1e-8 on a double root (multiplier 1); the
    modified step z - 2 F / F' restores quadratic convergence there.
    """
    def fp_and_deriv(z):
        val, dval = z, 1.0 + 0.0j
        for _ in range(p):
            dval *= f.derivative(val)
            val = f(val)
        return val - z, dval - 1.0

    g, dg = fp_and_deriv(z0)
    if abs(dg) > 0.1:
        return z0
    z = z0
    for _ in range(12):
        g, dg = fp_and_deriv(z)
        if abs(dg) < 1e-300:
            break
        step = 2.0 * g / dg
        if not np.isfinite(step) or abs(step) > 0.1 * (1.0 + abs(z)):
            break
        z = z - step
        if abs(step) < 1e-15 * (1.0 + abs(z)):
            break
    gz, _ = fp_and_deriv(z)
    g0, _ = fp_and_deriv(z0)
    return z if abs(gz) <= abs(g0) else z0


def _compose_with_self(f: Polynomial, times: int) -> np.ndarray:
    """Highest-first coefficients of f^times (polynomial composition)."""
    base = f.full_coeffs()
    cur = base
    for _ in range(times - 1):
        # evaluate cur at the polynomial base: Horner with polynomial arithmetic
        acc = np.array([cur[0]], dtype=np.complex128)
        for c in cur[1:]:
            acc = np.convolve(acc, base)
            acc[-1] += c
        cur = acc
    return cur


def residu_iteratif(f: Polynomial, cycle: CycleRecord, samples: int = 512) -> complex:
    """Residu iteratif of a multiplier-1 parabolic cycle.

    Computed as m/2 + (1/2 pi i) * contour integral of dz / (f^p(z) - z) on a
    small circle around the cycle point, where m is the local multiplicity of
    the fixed point of f^p (from the argument principle).  The circle radius
    is shrunk geometrically from 1e-2 until no other fixed point of f^p lies
    within twice the radius.
    """
    if cycle.cls != "parabolic" or abs(cycle.multiplier - 1.0) > NEUTRAL_TOL:
        raise NotParabolic(
            f"cycle class {cycle.cls!r} with multiplier {cycle.multiplier} is not "
            "a multiplier-1 parabolic cycle")
    p = cycle.period
    z0 = complex(cycle.points[0])
    if f.degree ** p > 4096:
        raise IllConditioned("f^p degree too large for the fixed point survey")
    comp = _compose_with_self(f, p)
    fix_coeffs = comp.copy()
    fix_coeffs[-2] -= 1.0  # f^p(z) - z
    fixed_pts = np.roots(fix_coeffs)
    others = fixed_pts[np.abs(fixed_pts - z0) > 1e-6 * (1.0 + abs(z0))]

    radius = 1e-2
    while radius > 1e-8:
        if len(others) == 0 or np.min(np.abs(others - z0)) > 2.0 * radius:
            break
        radius *= 0.5
    else:
        raise IllConditioned("no contour radius separates the cycle point from "
                             "other fixed points (merging fixed points)")

    theta = 2.0 * np.pi * np.arange(samples) / samples
    w = radius * np.exp(1j * theta)
    zk = z0 + w
    gk = zk.copy()
    dgk = np.ones_like(zk)
    for _ in range(p):
        dgk = dgk * f.derivative(gk)
        gk = f(gk)
    denom = gk - zk
    if np.min(np.abs(denom)) < 1e-300:
        raise IllConditioned("contour passes through a fixed point of f^p")
    integral = np.mean(w / denom)                    # (1/2pi i) * contour of dz/(g-z)
    mult = np.mean(w * (dgk - 1.0) / denom)          # argument principle
    m = round(mult.real)
    if m < 2 or abs(mult - m) > 1e-3:
        raise IllConditioned(f"fixed point multiplicity estimate {mult} is unreliable")
    return m / 2.0 + complex(integral)


def parabolic_kind(resit: complex, tol: float = 1e-9) -> str:
    """Sign classification of a parabolic point by Re(residu iteratif)."""
    if resit.real < -tol:
        return "parabolic-attracting"
    if resit.real > tol:
        return "parabolic-repelling"
    return "indeterminate"
