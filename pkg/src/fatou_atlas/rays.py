"""External rays, equipotential curves and internal rays.

External rays are traced on a shared logarithmic potential grid.  The point
of angle theta at potential t satisfies f(z) = (point of angle d*theta at
potential d*t), so a ray is computed by Newton pullback along the finite
forward orbit of its angle, seeded in the near-identity region far from the
Julia set.  Grid levels are spaced d^(1/m) apart; a branch ambiguity triggers
dyadic refinement of the step and ultimately RayCrisis.
"""

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from math import log

import numpy as np

from .angles import Angle, forward_orbit, map_angle
from .errors import (DivergedFromBasin, NotAttracting, NotLanded, RayCrisis,
                     SuperattractingUnsupported)
from .poly import Polynomial, critical_points

LN_SEED = 27.63          # e^27.63 ~ 1e12: conjugacy to z^d is identity-like here
LANDING_CUTOFF = 1e-7    # potential below which landing may be declared
LANDING_TOL = 1e-5       # plane-distance spread for a declared landing
POTENTIAL_END = 1e-16    # default trace depth; slow repelling landings need it
STEPS_PER_DIVISION = 8
MAX_REFINE_DEPTH = 7
NEWTON_POLISH = 2


@dataclass
class RayPath:
    """A traced ray or level curve as a polyline with landing status."""

    kind: str                      # "external" | "equipotential" | "internal"
    meta: dict
    points: np.ndarray             # complex polyline
    potentials: np.ndarray | None  # matching Green values, where meaningful
    landing: tuple                 # ("landed", z) or ("truncated", reason)
    partial: bool = False

    def to_json(self) -> dict:
        landed = self.landing[0] == "landed"
        out = {
            "kind": self.kind,
            "meta": {k: (str(v) if isinstance(v, Angle) else v) for k, v in self.meta.items()},
            "points": [[z.real, z.imag] for z in self.points],
            "landing": ({"landed": [self.landing[1].real, self.landing[1].imag]}
                        if landed else {"truncated": self.landing[1]}),
            "partial": self.partial,
        }
        if self.potentials is not None:
            out["potentials"] = [float(t) for t in self.potentials]
        return out


def landing_point(path: RayPath) -> complex:
    """Landing value of a landed path; raises NotLanded otherwise."""
    if path.landing[0] != "landed":
        raise NotLanded(f"path truncated: {path.landing[1]}")
    return path.landing[1]


class _AngleTower:
    """Pullback table over a set of angles closed under multiplication by d.

    Levels are rational numbers j (dyadic after refinement); the potential of
    level j is t_top * d^(-j/m) and the pullback target of level j on angle
    theta is level j - m on angle d*theta.
    """

    def __init__(self, f: Polynomial, angles: list[Angle], t_top: float,
                 m: int = STEPS_PER_DIVISION):
        self.f = f
        self.d = f.degree
        self.m = m
        self.t_top = t_top
        self.angles = list(angles)
        index = {a: i for i, a in enumerate(self.angles)}
        self.next = [index[map_angle(a, self.d)] for a in self.angles]
        self.coeffs = f.full_coeffs()
        self.table: dict[tuple[int, Fraction], complex] = {}
        self.levels: list[list[Fraction]] = [[] for _ in self.angles]  # sorted computed levels

    def potential(self, j) -> float:
        return self.t_top * self.d ** (-float(j) / self.m)

    def _seed(self, i: int, j: Fraction) -> complex:
        t = self.potential(j)
        theta = 2.0 * np.pi * float(self.angles[i])
        return complex(np.exp(t) * np.exp(1j * theta))

    def _store(self, i: int, j: Fraction, z: complex):
        self.table[(i, j)] = z
        bisect.insort(self.levels[i], j)

    def point(self, i: int, j: Fraction) -> complex:
        got = self.table.get((i, j))
        if got is not None:
            return got
        if j < self.m:
            z = self._seed(i, j)
            self._store(i, j, z)
            return z
        # anchor: deepest already-computed level above (shallower than) j
        pos = bisect.bisect_left(self.levels[i], j)
        if pos == 0:
            anchor = Fraction(self.m - 1)
            self.point(i, anchor)
            pos = bisect.bisect_left(self.levels[i], j)
        anchor = self.levels[i][pos - 1]
        z = self._advance(i, anchor, j, self.table[(i, anchor)], 0)
        self._store(i, j, z)
        return z

    def _advance(self, i: int, j_from: Fraction, j_to: Fraction,
                 z_from: complex, depth: int) -> complex:
        target = self.point(self.next[i], j_to - self.m)
        cs = self.coeffs.copy()
        cs[-1] = -target
        roots = np.roots(cs)
        order = np.argsort(np.abs(roots - z_from))
        best = complex(roots[order[0]])
        ambiguous = (len(roots) > 1
                     and abs(best - z_from) > 0.5 * abs(roots[order[1]] - z_from))
        if ambiguous:
            if depth >= MAX_REFINE_DEPTH:
                raise RayCrisis(
                    f"branch ambiguity persists at potential {self.potential(j_to):.3e}",
                    angle=self.angles[i], potential=self.potential(j_to))
            j_mid = (j_from + j_to) / 2
            z_mid = self._advance(i, j_from, j_mid, z_from, depth + 1)
            self._store(i, j_mid, z_mid)
            return self._advance(i, j_mid, j_to, z_mid, depth + 1)
        for _ in range(NEWTON_POLISH):
            best -= (self.f(best) - target) / self.f.derivative(best)
        return best


def _tower_for(f: Polynomial, angles: list[Angle], anchor_potential: float,
               m: int = STEPS_PER_DIVISION) -> tuple["_AngleTower", int]:
    """Tower whose grid contains anchor_potential exactly, at integer level."""
    d = f.degree
    j_anchor = max(m, int(np.ceil(m * log(LN_SEED * d / anchor_potential) / log(d))))
    t_top = anchor_potential * d ** (j_anchor / m)
    return _AngleTower(f, angles, t_top, m=m), j_anchor


def trace_external_ray(f: Polynomial, theta: Angle,
                       potential_start: float = 2.0,
                       potential_end: float = POTENTIAL_END,
                       steps_per_division: int = STEPS_PER_DIVISION,
                       landing_tol: float = LANDING_TOL,
                       landing_cutoff: float = LANDING_CUTOFF) -> RayPath:
    """Trace the external ray of a rational angle down to potential_end.

    The polyline is ordered by strictly decreasing potential.  Landing is
    declared when potential_end <= landing_cutoff and the tail of the path
    has settled within landing_tol; the landing value itself is the Aitken
    extrapolation of the geometric tail.  Unsettled tails (for instance near
    a parabolic point) report truncation instead.
    """
    if not (potential_start > potential_end > 0):
        raise ValueError("need potential_start > potential_end > 0")
    orbit = forward_orbit(theta, f.degree)
    tower, j_end = _tower_for(f, orbit, potential_end, m=steps_per_division)
    pts, pots = [], []
    crisis = None
    for j in range(j_end + 1):
        jf = Fraction(j)
        t = tower.potential(jf)
        try:
            z = tower.point(0, jf)
        except RayCrisis as exc:
            crisis = exc
            break
        if t <= potential_start:
            pts.append(z)
            pots.append(t)
    points = np.array(pts, dtype=np.complex128)
    potentials = np.array(pots, dtype=np.float64)
    if len(potentials) > 1:
        assert np.all(np.diff(potentials) < 0), "potential must decrease along the ray"

    if crisis is not None:
        landing = ("truncated", f"ray-crisis: {crisis}")
        return RayPath("external", {"theta": theta}, points, potentials, landing, partial=True)
    tail = points[-min(12, len(points)):]
    spread = float(np.abs(tail[:, None] - tail[None, :]).max()) if len(tail) > 1 else np.inf
    if potential_end <= landing_cutoff and spread <= landing_tol:
        landing = ("landed", _aitken_limit(points))
    elif potential_end <= landing_cutoff:
        landing = ("truncated", "tail not settled at landing cutoff (possibly near-parabolic)")
    else:
        landing = ("truncated", "stopped at requested potential")
    return RayPath("external", {"theta": theta}, points, potentials, landing)


def _aitken_limit(points: np.ndarray) -> complex:
    """Aitken delta-squared limit of a geometrically converging tail."""
    if len(points) < 3:
        return complex(points[-1])
    z0, z1, z2 = points[-3], points[-2], points[-1]
    denom = (z2 - z1) - (z1 - z0)
    if abs(denom) < 1e-14 * (1.0 + abs(z2)):
        return complex(z2)
    return complex(z2 - (z2 - z1) ** 2 / denom)


def trace_equipotential(f: Polynomial, level: float, samples: int,
                        steps_per_division: int = STEPS_PER_DIVISION) -> RayPath:
    """Closed polyline with `samples` points on the Green level set.

    Computed by tracing the rays at angles k/samples down to the level; the
    angle set is closed under multiplication by d, so one shared pullback
    table serves all sample points.  Failed angles leave gaps and mark the
    curve partial.
    """
    if level <= 0:
        raise ValueError("level must be positive")
    if samples < 1:
        raise ValueError("samples must be positive")
    angles = [Angle(k, samples) for k in range(samples)]
    unique = sorted(set(angles), key=lambda a: (a.num / a.den))
    tower, j_level = _tower_for(f, unique, level, m=steps_per_division)
    index = {a: i for i, a in enumerate(unique)}
    pts = []
    partial = False
    for k in range(samples):
        i = index[Angle(k, samples)]
        try:
            # walk the grid down so branch continuity is established level by level
            for j in range(j_level + 1):
                z = tower.point(i, Fraction(j))
            pts.append(z)
        except RayCrisis:
            partial = True
    points = np.array(pts, dtype=np.complex128)
    return RayPath("equipotential", {"level": level, "samples": samples},
                   points, np.full(len(points), level),
                   ("truncated", "closed level curve"), partial=partial)


def trace_internal_ray(f: Polynomial, basin, angle: float, steps: int = 200,
                       substeps: int = 4, stop_cells: float = 2.0) -> RayPath:
    """Ray of the Koenigs linearizing coordinate at 0, continued outward.

    `basin` is a (raster, mask) pair for the immediate basin of 0; the trace
    stops when it comes within stop_cells of the basin boundary (legitimate
    truncation) and raises DivergedFromBasin if it leaves the basin mask.
    """
    lam = complex(f.derivative(0.0))
    if abs(lam) >= 1.0:
        raise NotAttracting(f"|f'(0)| = {abs(lam):.6f} is not attracting")
    if abs(lam) < 1e-9:
        raise SuperattractingUnsupported("Koenigs coordinate needs f'(0) != 0")
    raster, mask = basin
    crit = critical_points(f)
    r_lin = 0.25 * min(abs(c) for c in crit.points if abs(c) > 1e-12)
    r_seed = 1e-3 * r_lin
    ratio = abs(lam) ** (-1.0 / substeps)
    radii = 0.5 * r_lin * ratio ** np.arange(steps)
    w_targets = radii * np.exp(1j * angle)

    inner = boundary_distance_mask(mask, int(np.ceil(stop_cells)))
    reason = "step budget exhausted before reaching the basin boundary"
    pts = []
    for z in _koenigs_chain_stream(f, lam, w_targets, r_seed):
        cell = raster.box.cell_of(z, raster.nx, raster.ny)
        if cell is None or not mask[cell]:
            if pts:
                raise DivergedFromBasin(f"internal ray left the basin at {z}")
            # starting cell should be in the basin; tolerate sub-cell starts
        pts.append(z)
        if cell is not None and not inner[cell]:
            reason = "reached basin boundary"
            break
    points = np.array(pts, dtype=np.complex128)
    return RayPath("internal", {"angle": angle}, points, None, ("truncated", reason))


def _koenigs_chain_stream(f: Polynomial, lam: complex, w_targets, r_seed):
    """Points phi^-1(w) along increasing |w|, phi the Koenigs map at 0.

    phi^-1(w) = f^-n(phi^-1(lam^n w)); the inverse branch chains are kept
    continuous from one target to the next.
    """
    prev_chain: list[complex] = []
    dcoef = f.full_coeffs()
    for w in w_targets:
        n = 0
        u = w
        while abs(u) > r_seed:
            u *= lam
            n += 1
        chain = [u]
        for k in range(n):
            z_prev = chain[-1]
            pred = prev_chain[k + 1] if len(prev_chain) > k + 1 else z_prev / lam
            cs = dcoef.copy()
            cs[-1] = -z_prev
            roots = np.roots(cs)
            order = np.argsort(np.abs(roots - pred))
            best = complex(roots[order[0]])
            if (len(roots) > 1
                    and abs(best - pred) > 0.6 * abs(roots[order[1]] - pred)):
                raise RayCrisis("internal ray lost its branch "
                                "(passing a critical level of the linearizer)")
            for _ in range(NEWTON_POLISH):
                best -= (f(best) - z_prev) / f.derivative(best)
            chain.append(best)
        prev_chain = chain
        yield chain[-1]


def boundary_distance_mask(mask: np.ndarray, cells: int) -> np.ndarray:
    """Cells of the mask strictly farther than `cells` from its complement."""
    from scipy import ndimage
    return ndimage.binary_erosion(mask, iterations=cells, border_value=0)
