"""Uniform-grid index over disjoint disks.

Supports three queries used by the walk engine and by exact
distance-to-boundary lookups:

* per-cell candidate lists: every disk intersecting the 3x3 cell block
  around a cell.  If the candidate minimum is <= the cell size h, it is
  the exact nearest-surface distance (any closer disk would intersect
  the block and hence be listed);
* a conservative per-cell clearance (from a Euclidean distance transform
  of the rasterized disks) that lower-bounds the distance to every disk,
  giving large safe steps in disk-free regions;
* an exact nearest-surface ring search for one-off queries.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .errors import ValidationError

_SQRT2 = math.sqrt(2.0)
# grid covers [-L, L]^2; slightly beyond the closed disk so that points
# pushed past |z| = 1 by rounding still index into a valid cell
_L = 1.03125

# Disks below this radius cannot be resolved by epsilon-shell walking in
# double precision (the shell collides with the coordinate lattice); the
# walker handles encounters with them through the exact annulus formula
# instead, using the clearance to the rest of the boundary.
POINTLIKE_RADIUS = 1e-9


def _auto_n_side(n_disks: int) -> int:
    target = 8.0 * math.sqrt(max(n_disks, 1))
    n = 64
    while n < target and n < 1024:
        n *= 2
    return n


class DiskGridIndex:
    """Immutable grid index over disks given by centers and radii."""

    def __init__(self, cx, cy, radii, n_side: int | None = None):
        self.cx = np.ascontiguousarray(cx, dtype=np.float64)
        self.cy = np.ascontiguousarray(cy, dtype=np.float64)
        self.radii = np.ascontiguousarray(radii, dtype=np.float64)
        n = self.cx.size
        if not (self.cy.size == n and self.radii.size == n):
            raise ValidationError("center/radius arrays must align")
        self.n_disks = n
        self.n_side = int(n_side) if n_side else _auto_n_side(n)
        self.h = 2.0 * _L / self.n_side
        self.inv_h = 1.0 / self.h
        self.r_min = float(self.radii.min()) if n else math.inf
        self.r_max = float(self.radii.max()) if n else 0.0
        self._build()

    def _build(self):
        ns = self.n_side
        h = self.h
        if self.n_disks == 0:
            self.cell_start = np.zeros(ns * ns + 1, dtype=np.int64)
            self.cell_items = np.zeros(0, dtype=np.int32)
            self.clearance = np.full(ns * ns, 2.0 * _L, dtype=np.float64)
            self.pointlike = np.zeros(0, dtype=bool)
            self.has_pointlike = False
            self.enc_clearance = np.zeros(0)
            return
        centers_x = -_L + (np.arange(ns) + 0.5) * h
        occupied = np.zeros((ns, ns), dtype=bool)
        cand_cells: list[np.ndarray] = []
        cand_disks: list[np.ndarray] = []
        for i in range(self.n_disks):
            x, y, r = self.cx[i], self.cy[i], self.radii[i]
            reach = r + 1.5 * h * _SQRT2 + 1e-12
            ix0 = max(0, int((x - reach + _L) * self.inv_h))
            ix1 = min(ns - 1, int((x + reach + _L) * self.inv_h))
            iy0 = max(0, int((y - reach + _L) * self.inv_h))
            iy1 = min(ns - 1, int((y + reach + _L) * self.inv_h))
            gx = centers_x[ix0:ix1 + 1]
            gy = centers_x[iy0:iy1 + 1]
            dx = np.abs(x - gx)[:, None]
            dy = np.abs(y - gy)[None, :]
            # distance from the disk center to the 3x3 block around each cell
            bx = np.maximum(dx - 1.5 * h, 0.0)
            by = np.maximum(dy - 1.5 * h, 0.0)
            cand = np.hypot(bx, by) <= r
            # distance to the cell itself, for the occupancy raster
            ox = np.maximum(dx - 0.5 * h, 0.0)
            oy = np.maximum(dy - 0.5 * h, 0.0)
            occ = np.hypot(ox, oy) <= r
            ii, jj = np.nonzero(cand)
            cand_cells.append(((ii + ix0) * ns + (jj + iy0)).astype(np.int64))
            cand_disks.append(np.full(ii.size, i, dtype=np.int32))
            oi, oj = np.nonzero(occ)
            occupied[oi + ix0, oj + iy0] = True
        cells = np.concatenate(cand_cells)
        disks = np.concatenate(cand_disks)
        order = np.lexsort((disks, cells))
        cells = cells[order]
        disks = disks[order]
        counts = np.bincount(cells, minlength=ns * ns)
        self.cell_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.cell_items = disks
        # clearance: (EDT - sqrt2) * h lower-bounds the distance from any
        # point of a free cell to any point of any disk
        edt = ndimage.distance_transform_edt(~occupied)
        self.clearance = np.maximum((edt - _SQRT2) * h, 0.0).ravel()
        self._build_encounter_data()

    def _build_encounter_data(self):
        """For point-like disks, the clearance radius of the concentric
        annulus that stays inside the domain: distance from the center to
        the unit circle and to every other disk."""
        self.pointlike = self.radii < POINTLIKE_RADIUS
        self.has_pointlike = bool(np.any(self.pointlike))
        self.enc_clearance = np.zeros(self.n_disks)
        for i in np.nonzero(self.pointlike)[0]:
            d_other, _ = self.nearest_surface(self.cx[i], self.cy[i], exclude=int(i))
            d_rim = 1.0 - math.hypot(self.cx[i], self.cy[i])
            self.enc_clearance[i] = min(d_rim, d_other)

    # -- addressing ---------------------------------------------------------

    def cell_of(self, x: float, y: float) -> int:
        ix = min(max(int((x + _L) * self.inv_h), 0), self.n_side - 1)
        iy = min(max(int((y + _L) * self.inv_h), 0), self.n_side - 1)
        return ix * self.n_side + iy

    def cells_of(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        ix = np.clip(((x + _L) * self.inv_h).astype(np.int64), 0, self.n_side - 1)
        iy = np.clip(((y + _L) * self.inv_h).astype(np.int64), 0, self.n_side - 1)
        return ix * self.n_side + iy

    # -- scalar queries -----------------------------------------------------

    def candidates_min(self, x: float, y: float):
        """(min surface distance over this cell's candidates, argmin index).

        Exact nearest-surface distance whenever the value is <= h; ties
        resolve to the lowest disk index because lists are index-sorted.
        """
        c = self.cell_of(x, y)
        lo, hi = self.cell_start[c], self.cell_start[c + 1]
        best = math.inf
        best_i = -1
        for k in range(lo, hi):
            i = self.cell_items[k]
            d = math.hypot(x - self.cx[i], y - self.cy[i]) - self.radii[i]
            if d < best:
                best = d
                best_i = int(i)
        return best, best_i

    def step_bound(self, x: float, y: float):
        """Safe step radius toward the disks: exact when small.

        Returns (bound, cand_min, cand_idx, exact).  `bound` never exceeds
        the true distance to the nearest disk surface.
        """
        cand_min, cand_idx = self.candidates_min(x, y)
        if cand_min <= self.h:
            return cand_min, cand_min, cand_idx, True
        lb = self.clearance[self.cell_of(x, y)]
        return max(self.h, lb), cand_min, cand_idx, False

    def exact_nearest(self, x: float, y: float):
        """Exact (distance, index) of the nearest disk surface; (inf, -1)
        when the index holds no disks."""
        return self.nearest_surface(x, y)

    def nearest_surface(self, x: float, y: float, exclude: int = -1):
        """Exact nearest-surface query, optionally ignoring one disk.

        Expanding ring search: after scanning all cells within Chebyshev
        radius k, every unseen disk is farther than (k+1) h away."""
        if self.n_disks == 0:
            return math.inf, -1
        ns = self.n_side
        ix0 = min(max(int((x + _L) * self.inv_h), 0), ns - 1)
        iy0 = min(max(int((y + _L) * self.inv_h), 0), ns - 1)
        best = math.inf
        best_i = -1
        for k in range(ns):
            lo_x, hi_x = max(ix0 - k, 0), min(ix0 + k, ns - 1)
            lo_y, hi_y = max(iy0 - k, 0), min(iy0 + k, ns - 1)
            ring = []
            for ix in range(lo_x, hi_x + 1):
                if k == 0:
                    ring.append((ix, iy0))
                else:
                    if ix == ix0 - k or ix == ix0 + k:
                        ring.extend((ix, iy) for iy in range(lo_y, hi_y + 1))
                    else:
                        if iy0 - k >= 0:
                            ring.append((ix, iy0 - k))
                        if iy0 + k <= ns - 1:
                            ring.append((ix, iy0 + k))
            for ix, iy in ring:
                c = ix * ns + iy
                for kk in range(self.cell_start[c], self.cell_start[c + 1]):
                    i = self.cell_items[kk]
                    if i == exclude:
                        continue
                    d = math.hypot(x - self.cx[i], y - self.cy[i]) - self.radii[i]
                    if d < best or (d == best and i < best_i):
                        best = d
                        best_i = int(i)
            if best <= (k + 1) * self.h:
                break
        return best, best_i

    # -- batch helpers for the walk engine -----------------------------------

    def gather_candidates(self, cells: np.ndarray):
        """CSR gather of candidate lists for an array of cells.

        Returns (rep, items, offsets, lens): `rep[t]` is the query row of
        gathered entry t, `items[t]` the disk index; entries of one query
        are contiguous, starting at offsets[row].
        """
        starts = self.cell_start[cells]
        lens = self.cell_start[cells + 1] - starts
        total = int(lens.sum())
        offsets = np.concatenate([[0], np.cumsum(lens)])
        if total == 0:
            return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int32),
                    offsets, lens)
        rep = np.repeat(np.arange(cells.size, dtype=np.int64), lens)
        pos = np.arange(total, dtype=np.int64) - np.repeat(offsets[:-1], lens) + np.repeat(starts, lens)
        return rep, self.cell_items[pos], offsets, lens
