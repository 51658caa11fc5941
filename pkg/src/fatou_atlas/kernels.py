"""Hot per-cell iteration kernels, JIT-compiled with numba when available.

Every kernel has two implementations with identical semantics: a numba
``@njit`` scalar-loop version and a vectorized pure-numpy fallback.  The
fallback is selected automatically when numba is missing, or explicitly by
setting the environment variable ``FATOU_ATLAS_DISABLE_NUMBA=1`` before
import.  ``benchmarks/bench_kernels.py`` times the two paths against each
other.

Cell labels: -1 escaping, 0 bounded-undecided, k >= 1 captured by basin k
(the caller maps basin indices to cycles).
"""

import os

import numpy as np

LABEL_ESCAPING = -1
LABEL_BOUNDED = 0

# parabolic petal capture: orbit must sit inside the entry disk and shrink
# toward the point slowly (ratio close to 1) for a full streak of checks
PETAL_RADIUS = 0.05
PETAL_RATIO_LO = 0.45
PETAL_STREAK = 24

_DISABLED = os.environ.get("FATOU_ATLAS_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

if not _DISABLED:
    try:
        import numba
        from numba import njit, prange
        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


def accel_mode() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# orbit classification
# ---------------------------------------------------------------------------

def _classify_cells_numpy(z0, coeffs, budget, r_escape, r_big,
                          att_pts, att_basin, cap_r,
                          par_pts, par_basin, par_period):
    """Vectorized lockstep version of the per-pixel classifier."""
    n = z0.shape[0]
    z = z0.astype(np.complex128).copy()
    label = np.zeros(n, dtype=np.int32)
    esc_iter = np.full(n, -1, dtype=np.int32)
    potential = np.zeros(n, dtype=np.float64)
    active = np.ones(n, dtype=bool)
    n_par = par_pts.shape[0]
    if n_par:
        prev = np.full(n, np.inf)
        streak = np.zeros(n, dtype=np.int32)

    def feval(w):
        acc = np.ones_like(w)
        for c in coeffs[1:-1]:
            acc = acc * w + c
        return acc * w

    for it in range(budget):
        if not active.any():
            break
        az = np.abs(z)
        esc = active & (az > r_escape)
        if esc.any():
            label[esc] = LABEL_ESCAPING
            esc_iter[esc] = it
            active[esc] = False
        for j in range(att_pts.shape[0]):
            hit = active & (np.abs(z - att_pts[j]) < cap_r)
            if hit.any():
                label[hit] = att_basin[j]
                active[hit] = False
        if n_par and it % par_period == 0:
            dist = np.full(n, np.inf)
            best = np.zeros(n, dtype=np.int32)
            for j in range(n_par):
                dj = np.abs(z - par_pts[j])
                closer = dj < dist
                dist[closer] = dj[closer]
                best[closer] = par_basin[j]
            ok = active & (dist < PETAL_RADIUS) & (dist <= prev) & (dist >= PETAL_RATIO_LO * prev)
            streak[ok] += 1
            streak[active & ~ok] = 0
            prev[active] = dist[active]
            done = active & (streak >= PETAL_STREAK)
            if done.any():
                label[done] = best[done]
                active[done] = False
        zn = feval(z[active])
        zn[~np.isfinite(zn)] = np.inf
        z[active] = zn

    # potential for escaped cells: continue to r_big, G = log|z| / d^m
    d = coeffs.shape[0] - 1
    escm = label == LABEL_ESCAPING
    if escm.any():
        w = z[escm]
        steps = esc_iter[escm].astype(np.float64)
        for _ in range(64):
            small = np.abs(w) < r_big
            if not small.any():
                break
            w2 = feval(w[small])
            grow = np.isfinite(w2) & (np.abs(w2) > np.abs(w[small]))
            idx = np.flatnonzero(small)[grow]
            w[idx] = w2[grow]
            steps[np.flatnonzero(small)[grow]] += 1
        potential[escm] = np.log(np.maximum(np.abs(w), 1.0)) / d**steps
    return label, esc_iter, potential


if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _feval_scalar(coeffs, z):
        acc = coeffs[0]
        for k in range(1, coeffs.shape[0] - 1):
            acc = acc * z + coeffs[k]
        return acc * z

    @njit(cache=True, parallel=True)
    def _classify_cells_numba(z0, coeffs, budget, r_escape, r_big,
                              att_pts, att_basin, cap_r,
                              par_pts, par_basin, par_period):
        n = z0.shape[0]
        d = coeffs.shape[0] - 1
        label = np.zeros(n, dtype=np.int32)
        esc_iter = np.full(n, -1, dtype=np.int32)
        potential = np.zeros(n, dtype=np.float64)
        n_att = att_pts.shape[0]
        n_par = par_pts.shape[0]
        for i in prange(n):
            z = z0[i]
            prev = 1e300
            streak = 0
            done = False
            for it in range(budget):
                az = abs(z)
                if az > r_escape:
                    label[i] = LABEL_ESCAPING
                    esc_iter[i] = it
                    steps = it
                    for _ in range(64):
                        if abs(z) >= r_big:
                            break
                        zn = _feval_scalar(coeffs, z)
                        if not np.isfinite(zn.real) or abs(zn) <= abs(z):
                            break
                        z = zn
                        steps += 1
                    g = abs(z)
                    if g < 1.0:
                        g = 1.0
                    potential[i] = np.log(g) / d**steps
                    done = True
                    break
                hit = False
                for j in range(n_att):
                    if abs(z - att_pts[j]) < cap_r:
                        label[i] = att_basin[j]
                        hit = True
                        break
                if hit:
                    done = True
                    break
                if n_par > 0 and it % par_period == 0:
                    dist = 1e300
                    best = 0
                    for j in range(n_par):
                        dj = abs(z - par_pts[j])
                        if dj < dist:
                            dist = dj
                            best = par_basin[j]
                    if dist < PETAL_RADIUS and dist <= prev and dist >= PETAL_RATIO_LO * prev:
                        streak += 1
                    else:
                        streak = 0
                    prev = dist
                    if streak >= PETAL_STREAK:
                        label[i] = best
                        done = True
                        break
                z = _feval_scalar(coeffs, z)
                if not np.isfinite(z.real):
                    z = 1e308 + 0j
            if not done:
                label[i] = LABEL_BOUNDED
        return label, esc_iter, potential


def classify_cells(z0, coeffs, budget, r_escape, r_big=1e12,
                   att_pts=None, att_basin=None, cap_r=1e-3,
                   par_pts=None, par_basin=None, par_period=1):
    """Classify a flat array of orbit starts.  See module docstring for labels.

    coeffs is the full highest-first coefficient array [1, a_{d-1}, ..., a1, 0].
    """
    z0 = np.ascontiguousarray(z0, dtype=np.complex128)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    att_pts = np.ascontiguousarray(att_pts if att_pts is not None else [], dtype=np.complex128)
    att_basin = np.ascontiguousarray(att_basin if att_basin is not None else [], dtype=np.int32)
    par_pts = np.ascontiguousarray(par_pts if par_pts is not None else [], dtype=np.complex128)
    par_basin = np.ascontiguousarray(par_basin if par_basin is not None else [], dtype=np.int32)
    impl = _classify_cells_numba if USE_NUMBA else _classify_cells_numpy
    return impl(z0, coeffs, int(budget), float(r_escape), float(r_big),
                att_pts, att_basin, float(cap_r),
                par_pts, par_basin, max(1, int(par_period)))


# ---------------------------------------------------------------------------
# parameter-plane fate classification
# ---------------------------------------------------------------------------

FATE_UNDECIDED = 0
FATE_ESCAPING = 1
FATE_TO_ORIGIN = 2
FATE_OTHER_ATTRACTING = 3
FATE_PARABOLIC_ADJACENT = 4


def _fate_of_orbit_numpy(z0, coeffs_per_pixel, budget, r_escape, par_pt):
    """Fate of one orbit start per pixel; coeffs vary per pixel (n, d+1)."""
    n = z0.shape[0]
    z = z0.astype(np.complex128).copy()
    fate = np.zeros(n, dtype=np.int32)
    active = np.ones(n, dtype=bool)
    prev = np.full(n, np.inf)
    streak = np.zeros(n, dtype=np.int32)
    hist = np.zeros((6, n), dtype=np.complex128)
    for it in range(budget):
        if not active.any():
            break
        az = np.abs(z)
        esc = active & (az > r_escape)
        fate[esc] = FATE_ESCAPING
        active[esc] = False
        near0 = active & (az < 1e-4)
        fate[near0] = FATE_TO_ORIGIN
        active[near0] = False
        dist = np.abs(z - par_pt)
        ok = active & (dist < PETAL_RADIUS) & (dist <= prev) & (dist >= PETAL_RATIO_LO * prev)
        streak[ok] += 1
        streak[active & ~ok] = 0
        prev[active] = dist[active]
        done = active & (streak >= PETAL_STREAK)
        fate[done] = FATE_PARABOLIC_ADJACENT
        active[done] = False
        if it >= 6:
            # geometric convergence to a cycle of period q <= 6
            conv = np.zeros(n, dtype=bool)
            for q in range(1, 7):
                conv |= np.abs(z - hist[(it - q) % 6]) < 1e-9
            conv &= active
            fate[conv] = FATE_OTHER_ATTRACTING
            active[conv] = False
        hist[it % 6] = z
        acc = np.ones_like(z)
        for k in range(1, coeffs_per_pixel.shape[1] - 1):
            acc = acc * z + coeffs_per_pixel[:, k]
        zn = acc * z
        zn[~np.isfinite(zn)] = np.inf
        z[active] = zn[active]
    return fate


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _fate_of_orbit_numba(z0, coeffs_per_pixel, budget, r_escape, par_pt):
        n = z0.shape[0]
        fate = np.zeros(n, dtype=np.int32)
        nc = coeffs_per_pixel.shape[1]
        for i in prange(n):
            z = z0[i]
            prev = 1e300
            streak = 0
            h0 = z
            h1 = z
            h2 = z
            h3 = z
            h4 = z
            h5 = z
            for it in range(budget):
                az = abs(z)
                if az > r_escape:
                    fate[i] = FATE_ESCAPING
                    break
                if az < 1e-4:
                    fate[i] = FATE_TO_ORIGIN
                    break
                dist = abs(z - par_pt[i])
                if dist < PETAL_RADIUS and dist <= prev and dist >= PETAL_RATIO_LO * prev:
                    streak += 1
                else:
                    streak = 0
                prev = dist
                if streak >= PETAL_STREAK:
                    fate[i] = FATE_PARABOLIC_ADJACENT
                    break
                if it >= 6:
                    if (abs(z - h5) < 1e-9 or abs(z - h4) < 1e-9 or abs(z - h3) < 1e-9
                            or abs(z - h2) < 1e-9 or abs(z - h1) < 1e-9 or abs(z - h0) < 1e-9):
                        fate[i] = FATE_OTHER_ATTRACTING
                        break
                h0 = h1
                h1 = h2
                h2 = h3
                h3 = h4
                h4 = h5
                h5 = z
                acc = coeffs_per_pixel[i, 0]
                for k in range(1, nc - 1):
                    acc = acc * z + coeffs_per_pixel[i, k]
                z = acc * z
                if not np.isfinite(z.real):
                    z = 1e308 + 0j
        return fate


def fate_of_orbit(z0, coeffs_per_pixel, budget, r_escape, par_pt=None):
    """Per-pixel fate of one orbit start under a per-pixel polynomial.

    par_pt is a per-pixel parabolic point candidate (petal capture);
    pass None to disable.
    """
    z0 = np.ascontiguousarray(z0, dtype=np.complex128)
    coeffs_per_pixel = np.ascontiguousarray(coeffs_per_pixel, dtype=np.complex128)
    if par_pt is None:
        par_pt = np.full(z0.shape[0], 1e30 + 0j)
    par_pt = np.ascontiguousarray(par_pt, dtype=np.complex128)
    if USE_NUMBA:
        return _fate_of_orbit_numba(z0, coeffs_per_pixel, int(budget), float(r_escape), par_pt)
    return _fate_of_orbit_numpy(z0, coeffs_per_pixel, int(budget), float(r_escape), par_pt)
