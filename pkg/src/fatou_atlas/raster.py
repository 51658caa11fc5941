"""Discretized dynamical plane: escape classification, Green's function,
component labeling and metric queries.

Cells are indexed [iy, ix] with x increasing along columns.  Labels follow
kernels.py: -1 escaping, 0 bounded-undecided, k >= 1 basin of cycles[k-1].
"""

from dataclasses import dataclass, field
from math import lcm

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from . import kernels
from .errors import OutOfBox, UnknownComponent
from .poly import CycleRecord, Polynomial, find_cycles

FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
EIGHT_CONN = np.ones((3, 3), dtype=bool)

LABEL_ESCAPING = kernels.LABEL_ESCAPING
LABEL_BOUNDED = kernels.LABEL_BOUNDED


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in the plane."""

    center: complex
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("box must have positive extent")
        object.__setattr__(self, "center", complex(self.center))

    def cell_size(self, nx: int, ny: int) -> tuple[float, float]:
        return self.width / nx, self.height / ny

    def centers(self, nx: int, ny: int) -> np.ndarray:
        """Complex (ny, nx) array of cell centers."""
        hx, hy = self.cell_size(nx, ny)
        xs = self.center.real - self.width / 2 + hx * (np.arange(nx) + 0.5)
        ys = self.center.imag - self.height / 2 + hy * (np.arange(ny) + 0.5)
        return xs[None, :] + 1j * ys[:, None]

    def cell_of(self, z: complex, nx: int, ny: int):
        """(iy, ix) of the cell containing z, or None if outside."""
        hx, hy = self.cell_size(nx, ny)
        ix = int(np.floor((z.real - (self.center.real - self.width / 2)) / hx))
        iy = int(np.floor((z.imag - (self.center.imag - self.height / 2)) / hy))
        if 0 <= ix < nx and 0 <= iy < ny:
            return iy, ix
        return None

    def contains(self, z: complex) -> bool:
        return (abs(z.real - self.center.real) <= self.width / 2
                and abs(z.imag - self.center.imag) <= self.height / 2)

    def to_json(self) -> dict:
        return {"center": [self.center.real, self.center.imag],
                "width": self.width, "height": self.height}


@dataclass
class Raster:
    """Classified grid over a box, plus the data needed to reuse it."""

    f: Polynomial
    box: Box
    nx: int
    ny: int
    labels: np.ndarray              # int32 (ny, nx)
    esc_iter: np.ndarray            # int32 (ny, nx), -1 where not escaping
    potential: np.ndarray           # float64 (ny, nx), 0 where not escaping
    cycles: tuple                   # CycleRecord per basin id (basin k -> cycles[k-1])
    budget: int
    r_escape: float
    _image_index: np.ndarray | None = field(default=None, repr=False)

    @property
    def cell_width(self) -> float:
        return self.box.width / self.nx

    @property
    def cell_height(self) -> float:
        return self.box.height / self.ny

    def centers(self) -> np.ndarray:
        return self.box.centers(self.nx, self.ny)

    def bounded_mask(self) -> np.ndarray:
        return self.labels != LABEL_ESCAPING

    def basin_mask(self, basin_id: int) -> np.ndarray:
        return self.labels == basin_id

    def flat_index(self, z: complex) -> int:
        cell = self.box.cell_of(z, self.nx, self.ny)
        if cell is None:
            raise OutOfBox(f"{z} outside raster box")
        return cell[0] * self.nx + cell[1]

    def image_index(self) -> np.ndarray:
        """Flat cell index of f(center) per cell, -1 where the image leaves
        the box.  Computed once and cached; this is the backbone of preimage
        and puzzle-depth computations."""
        if self._image_index is None:
            z = self.centers().ravel()
            w = self.f(z)
            hx, hy = self.box.cell_size(self.nx, self.ny)
            ix = np.floor((w.real - (self.box.center.real - self.box.width / 2)) / hx).astype(np.int64)
            iy = np.floor((w.imag - (self.box.center.imag - self.box.height / 2)) / hy).astype(np.int64)
            ok = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny) & np.isfinite(w)
            idx = np.where(ok, iy * self.nx + ix, -1)
            self._image_index = idx.astype(np.int64)
        return self._image_index


def default_basin_cycles(f: Polynomial, box: Box, max_period: int = 3) -> tuple:
    """Attracting, superattracting and parabolic cycles used for basin capture."""
    recs = find_cycles(f, max_period, (box.center, box.width, box.height))
    keep = [r for r in recs if r.cls in ("attracting", "superattracting", "parabolic")]
    return tuple(keep)


def classify_grid(f: Polynomial, box: Box, resolution: tuple[int, int], budget: int,
                  cycles=None, capture_radius: float = 1e-3,
                  parabolic_budget_factor: int = 20) -> Raster:
    """Iterate every cell center and label it escaping / bounded / basin(k).

    Parabolic cycles get petal capture with the iteration budget multiplied
    by parabolic_budget_factor, since convergence there is not geometric.
    """
    nx, ny = resolution
    if nx < 16 or ny < 16:
        raise ValueError("resolution must be at least 16x16")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if cycles is None:
        cycles = default_basin_cycles(f, box)
    cycles = tuple(cycles)

    att_pts, att_ids, par_pts, par_ids, par_periods = [], [], [], [], []
    for k, rec in enumerate(cycles, start=1):
        if rec.cls == "parabolic":
            par_pts.extend(rec.points)
            par_ids.extend([k] * len(rec.points))
            par_periods.append(rec.period)
        else:
            att_pts.extend(rec.points)
            att_ids.extend([k] * len(rec.points))

    total_budget = budget * (parabolic_budget_factor if par_pts else 1)
    par_period = lcm(*par_periods) if par_periods else 1
    z0 = box.centers(nx, ny).ravel()
    label, esc_iter, potential = kernels.classify_cells(
        z0, f.full_coeffs(), total_budget, f.escape_radius(),
        att_pts=att_pts, att_basin=att_ids, cap_r=capture_radius,
        par_pts=par_pts, par_basin=par_ids, par_period=par_period)
    return Raster(f=f, box=box, nx=nx, ny=ny,
                  labels=label.reshape(ny, nx),
                  esc_iter=esc_iter.reshape(ny, nx),
                  potential=potential.reshape(ny, nx),
                  cycles=cycles, budget=total_budget, r_escape=f.escape_radius())


def green_function(f: Polynomial, z, budget: int = 256) -> float:
    """Green's function lim d^-n log+|f^n(z)|, 0 for non-escaping points.

    Escaping orbits are continued past the escape radius up to ~1e12 where
    the conjugacy to z^d is identity-like to double precision, so no
    explicit tail sum is needed.
    """
    arr = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
    _, _, potential = kernels.classify_cells(
        arr, f.full_coeffs(), budget, f.escape_radius())
    if np.isscalar(z) or np.asarray(z).shape == ():
        return float(potential[0])
    return potential.reshape(np.asarray(z).shape)


# ---------------------------------------------------------------------------
# connected components
# ---------------------------------------------------------------------------

@dataclass
class ComponentMap:
    """4-connected component labeling of a cell predicate over a raster."""

    raster: Raster
    mask: np.ndarray        # bool (ny, nx)
    labels: np.ndarray      # int32 (ny, nx), -1 outside the predicate
    count: int
    adjacency: frozenset    # sorted (id_a, id_b) pairs touching within 8-neighborhood


def label_components(raster: Raster, mask: np.ndarray) -> ComponentMap:
    lab, count = ndimage.label(mask, structure=FOUR_CONN)
    labels = lab.astype(np.int32) - 1
    pairs = set()
    for dy, dx in ((0, 1), (1, 0), (1, 1), (1, -1)):
        a = labels[max(0, dy):labels.shape[0] - max(0, -dy) or None,
                   max(0, dx):labels.shape[1] - max(0, -dx) or None]
        b = labels[max(0, -dy):labels.shape[0] - max(0, dy) or None,
                   max(0, -dx):labels.shape[1] - max(0, dx) or None]
        both = (a >= 0) & (b >= 0) & (a != b)
        if both.any():
            for x, y in zip(a[both].ravel(), b[both].ravel()):
                pairs.add((int(min(x, y)), int(max(x, y))))
    return ComponentMap(raster=raster, mask=mask, labels=labels,
                        count=int(count), adjacency=frozenset(pairs))


def component_of(cmap: ComponentMap, z: complex) -> int:
    """Component id of the cell containing z; -1 if the cell fails the predicate."""
    cell = cmap.raster.box.cell_of(z, cmap.raster.nx, cmap.raster.ny)
    if cell is None:
        raise OutOfBox(f"{z} outside raster box")
    return int(cmap.labels[cell])


def boundary_cells(mask: np.ndarray) -> np.ndarray:
    """Cells of the mask with a 4-neighbor outside it (array edge counts)."""
    interior = ndimage.binary_erosion(mask, structure=FOUR_CONN, border_value=0)
    return mask & ~interior


def dilate(mask: np.ndarray, structure=EIGHT_CONN, iterations: int = 1) -> np.ndarray:
    return ndimage.binary_dilation(mask, structure=structure, iterations=iterations)


def erode(mask: np.ndarray, structure=FOUR_CONN, iterations: int = 1) -> np.ndarray:
    return ndimage.binary_erosion(mask, structure=structure, iterations=iterations, border_value=0)


def _max_pairwise_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    if len(points) > 16:
        try:
            hull = ConvexHull(points)
            points = points[hull.vertices]
        except QhullError:
            pass  # degenerate (collinear) sets: brute force below
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2)).max())


def region_metrics(cmap: ComponentMap, comp_id: int) -> tuple[float, float, int]:
    """(area, diameter, boundary cell count) of one component.

    Area is cell count times cell area; diameter is the exact maximum over
    boundary cell centers (via their convex hull).
    """
    if comp_id < 0 or comp_id >= cmap.count:
        raise UnknownComponent(f"no component {comp_id}")
    comp = cmap.labels == comp_id
    r = cmap.raster
    area = float(comp.sum()) * r.cell_width * r.cell_height
    bd = boundary_cells(comp)
    ys, xs = np.nonzero(bd)
    centers = r.centers()
    pts = np.column_stack([centers.real[ys, xs], centers.imag[ys, xs]])
    return area, _max_pairwise_distance(pts), int(bd.sum())
