"""Exact pseudohyperbolic geometry of the unit disk.

Points are plain complex numbers.  The pseudohyperbolic distance is
rho(z, w) = |(z - w) / (1 - conj(w) z)|, invariant under disk
automorphisms.  Pseudohyperbolic disks are converted to their exact
Euclidean realizations; everything downstream (domain construction,
walking) works on Euclidean circles.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Moduli above 1 - BOUNDARY_MARGIN are rejected at construction; the walker
# has its own epsilon-shell and never needs points this close to the rim.
BOUNDARY_MARGIN = 1e-12


def require_disk_point(z, name: str = "z") -> complex:
    """Validate and return a point of the open unit disk."""
    z = complex(z)
    if not abs(z) <= 1.0 - BOUNDARY_MARGIN:
        raise ValidationError(f"{name}={z!r} is not inside the open unit disk (|{name}|={abs(z)!r})")
    return z


def pseudo_distance(z, w) -> float:
    """Pseudohyperbolic distance between two points of the open disk.

    Symmetric, zero iff z == w, and invariant under disk automorphisms.
    """
    z = require_disk_point(z, "z")
    w = require_disk_point(w, "w")
    return abs((z - w) / (1.0 - w.conjugate() * z))


def pseudo_distance_many(z, points: np.ndarray) -> np.ndarray:
    """Distances from one point to an array of points (no per-point checks)."""
    z = complex(z)
    pts = np.asarray(points, dtype=np.complex128)
    return np.abs((z - pts) / (1.0 - np.conj(pts) * z))


def mobius_apply(a, z) -> complex:
    """Apply the automorphism phi_a(z) = (a - z) / (1 - conj(a) z).

    phi_a swaps a and 0, is an involution, and maps the unit circle to
    itself.  `z` may lie on the closed disk; `a` must be interior.
    """
    a = require_disk_point(a, "a")
    z = complex(z)
    if abs(z) > 1.0 + 1e-12:
        raise ValidationError(f"mobius_apply: |z|={abs(z)!r} exceeds 1")
    return (a - z) / (1.0 - a.conjugate() * z)


def mobius_apply_many(a, points: np.ndarray) -> np.ndarray:
    a = require_disk_point(a, "a")
    pts = np.asarray(points, dtype=np.complex128)
    return (a - pts) / (1.0 - np.conj(a) * pts)


@dataclass(frozen=True)
class EuclideanDisk:
    """A Euclidean disk; for bubbles inside the unit disk the closure must
    stay strictly interior."""

    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValidationError(f"EuclideanDisk radius must be positive, got {self.radius!r}")

    def boundary_point(self, theta: float) -> complex:
        return self.center + self.radius * cmath.exp(1j * theta)

    def contains(self, z, closed: bool = True) -> bool:
        d = abs(complex(z) - self.center)
        return d <= self.radius if closed else d < self.radius


@dataclass(frozen=True)
class PseudoDisk:
    """Pseudohyperbolic disk: {zeta : rho(center, zeta) <= radius}."""

    center: complex
    radius: float

    def __post_init__(self):
        require_disk_point(self.center, "center")
        if not 0.0 < self.radius < 1.0:
            raise ValidationError(f"PseudoDisk radius must lie in (0, 1), got {self.radius!r}")


def pseudo_to_euclidean(d: PseudoDisk) -> EuclideanDisk:
    """Euclidean realization of a pseudohyperbolic disk.

    Every boundary point of the result is at pseudohyperbolic distance
    exactly d.radius from d.center.
    """
    c = complex(d.center)
    r = float(d.radius)
    m2 = abs(c) ** 2
    denom = 1.0 - r * r * m2
    return EuclideanDisk(center=c * (1.0 - r * r) / denom, radius=r * (1.0 - m2) / denom)


def euclidean_to_pseudo(d: EuclideanDisk) -> PseudoDisk:
    """Invert pseudo_to_euclidean for a disk strictly inside the unit disk."""
    c = complex(d.center)
    radius = float(d.radius)
    m = abs(c)
    if m + radius >= 1.0:
        raise ValidationError("disk is not strictly inside the unit disk")
    # Work on the ray through the center: the pseudo center lies on it,
    # between the two radial boundary points u < v.
    u = m - radius
    v = m + radius
    if abs(u + v) < 1e-300:
        pc, pr = 0.0, v
    else:
        s = u + v
        p = 1.0 + u * v
        pc = (p - math.sqrt(p * p - s * s)) / s
        pr = (v - pc) / (1.0 - v * pc)
    phase = c / m if m > 0 else 1.0
    return PseudoDisk(center=phase * pc, radius=pr)


def pseudo_to_euclidean_arrays(centers: np.ndarray, radii: np.ndarray):
    """Vectorized pseudo_to_euclidean; returns (centers, radii) arrays."""
    c = np.asarray(centers, dtype=np.complex128)
    r = np.asarray(radii, dtype=np.float64)
    m2 = np.abs(c) ** 2
    denom = 1.0 - r * r * m2
    return c * (1.0 - r * r) / denom, r * (1.0 - m2) / denom
