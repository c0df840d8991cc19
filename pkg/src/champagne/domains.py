"""Champagne subdomains of the unit disk and the radius-decay criterion.

A champagne domain is the unit disk minus finitely many pairwise disjoint
closed bubbles.  Bubbles come from pseudohyperbolic disks D(lambda, phi(|lambda|))
realized as Euclidean disks; the decay profile phi decides, through the
criterion evaluated here in integral and sum form, whether the exterior
circle keeps positive harmonic measure as the truncation deepens.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import OverlapError, ValidationError
from .hyperbolic import (
    EuclideanDisk,
    PseudoDisk,
    euclidean_to_pseudo,
    mobius_apply_many,
    pseudo_distance_many,
    pseudo_to_euclidean,
    pseudo_to_euclidean_arrays,
    require_disk_point,
)
from .sequences import PointSequence, separation
from .spatial import DiskGridIndex

_EXP_GUARD = 700.0  # exponents beyond this under/overflow float64

# Lattice points sit on their rings only to within an ulp of rounding; the
# selection predicates snap by this much so whole rings land on one side of
# a cut that nominally passes through them.
_TIE_SNAP = 1e-12


# ---------------------------------------------------------------------------
# radius profiles

@dataclass(frozen=True)
class RadiusProfile:
    """Nonincreasing bubble-radius profile phi on (0, 1), bounded below 1.

    kinds:
      const c              phi(t) = c
      power c, gamma       phi(t) = c (1-t)^gamma
      expinv c, beta       phi(t) = exp(-c / (1-t)^beta)
      table                monotone piecewise-linear in t, clamped outside
    """

    kind: str
    params: tuple = ()
    table_t: np.ndarray | None = None
    table_phi: np.ndarray | None = None

    def __post_init__(self):
        k = self.kind
        if k == "const":
            (c,) = self.params
            if not 0.0 < c < 1.0:
                raise ValidationError(f"const profile needs c in (0,1), got {c!r}")
        elif k == "power":
            c, gamma = self.params
            if not 0.0 < c < 1.0:
                raise ValidationError(f"power profile needs c in (0,1), got {c!r}")
            if not gamma > 0.0:
                raise ValidationError(f"power profile needs gamma > 0, got {gamma!r}")
        elif k == "expinv":
            c, beta = self.params
            if not (c > 0.0 and beta > 0.0):
                raise ValidationError(f"expinv profile needs c, beta > 0, got {self.params!r}")
        elif k == "table":
            t = np.asarray(self.table_t, dtype=np.float64)
            p = np.asarray(self.table_phi, dtype=np.float64)
            if t.ndim != 1 or t.size < 2 or t.shape != p.shape:
                raise ValidationError("table profile needs aligned t/phi arrays with >= 2 rows")
            if not np.all(np.diff(t) > 0):
                raise ValidationError("table t-values must be strictly increasing")
            if not np.all(np.diff(p) <= 0):
                raise ValidationError("table phi-values must be nonincreasing")
            if not (np.all(p > 0.0) and np.all(p < 1.0)):
                raise ValidationError("table phi-values must lie in (0,1)")
            if not np.all((t > 0.0) & (t < 1.0)):
                raise ValidationError("table t-values must lie in (0,1)")
            t.setflags(write=False)
            p.setflags(write=False)
            object.__setattr__(self, "table_t", t)
            object.__setattr__(self, "table_phi", p)
        else:
            raise ValidationError(f"unknown profile kind {k!r}")

    # evaluation is done in gap space s = 1 - t; near the rim t itself
    # loses precision long before s does

    def value_at_gap(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.kind == "const":
            out = np.full_like(s, self.params[0])
        elif self.kind == "power":
            c, gamma = self.params
            out = c * s ** gamma
        elif self.kind == "expinv":
            c, beta = self.params
            with np.errstate(divide="ignore", over="ignore"):
                out = np.exp(-c / s ** beta)
        else:
            t = np.clip(1.0 - s, self.table_t[0], self.table_t[-1])
            out = np.interp(t, self.table_t, self.table_phi)
        return out if out.ndim else float(out)

    def __call__(self, t):
        return self.value_at_gap(1.0 - np.asarray(t, dtype=np.float64))

    def log_inv_at_loggap(self, log_s):
        """log(1/phi) evaluated at gap exp(log_s), computed in log space."""
        log_s = np.asarray(log_s, dtype=np.float64)
        if self.kind == "const":
            out = np.full_like(log_s, math.log(1.0 / self.params[0]))
        elif self.kind == "power":
            c, gamma = self.params
            out = math.log(1.0 / c) - gamma * log_s
        elif self.kind == "expinv":
            c, beta = self.params
            e = -beta * log_s
            out = np.where(e > _EXP_GUARD, np.inf, c * np.exp(np.minimum(e, _EXP_GUARD)))
        else:
            with np.errstate(over="ignore"):
                gap = np.exp(log_s)
            out = np.log(1.0 / self.value_at_gap(gap))
        return out if out.ndim else float(out)

    def criterion_term_at_loggap(self, log_s):
        """1 / log(1/phi) at gap exp(log_s); 0 where log(1/phi) overflows."""
        li = np.asarray(self.log_inv_at_loggap(log_s), dtype=np.float64)
        with np.errstate(divide="ignore"):
            out = np.where(np.isinf(li), 0.0, 1.0 / li)
        return out if out.ndim else float(out)

    @property
    def table_coverage_loggap(self) -> float | None:
        """log(1 - t_max) for table profiles; None otherwise."""
        if self.kind != "table":
            return None
        return math.log(1.0 - float(self.table_t[-1]))

    def describe(self) -> str:
        if self.kind == "const":
            return f"const:{self.params[0]:g}"
        if self.kind == "power":
            return f"power:{self.params[0]:g},{self.params[1]:g}"
        if self.kind == "expinv":
            return f"expinv:{self.params[0]:g},{self.params[1]:g}"
        return f"table:{self.table_t.size} rows, t in [{self.table_t[0]:g}, {self.table_t[-1]:g}]"


def const_profile(c: float) -> RadiusProfile:
    return RadiusProfile("const", (float(c),))


def power_profile(c: float, gamma: float) -> RadiusProfile:
    return RadiusProfile("power", (float(c), float(gamma)))


def expinv_profile(c: float, beta: float) -> RadiusProfile:
    return RadiusProfile("expinv", (float(c), float(beta)))


def table_profile(t, phi) -> RadiusProfile:
    return RadiusProfile("table", (), np.asarray(t, dtype=np.float64),
                         np.asarray(phi, dtype=np.float64))


def parse_profile(spec: str) -> RadiusProfile:
    """Parse CLI profile specs: const:c | power:c,gamma | expinv:c,beta | table:<path>."""
    try:
        kind, _, rest = spec.partition(":")
        if kind == "const":
            return const_profile(float(rest))
        if kind == "power":
            c, gamma = (float(x) for x in rest.split(","))
            return power_profile(c, gamma)
        if kind == "expinv":
            c, beta = (float(x) for x in rest.split(","))
            return expinv_profile(c, beta)
        if kind == "table":
            rows = np.loadtxt(rest, delimiter=",", skiprows=1, ndmin=2)
            return table_profile(rows[:, 0], rows[:, 1])
    except (ValueError, OSError) as exc:
        raise ValidationError(f"bad profile spec {spec!r}: {exc}") from exc
    raise ValidationError(f"bad profile spec {spec!r}")


# ---------------------------------------------------------------------------
# the decay criterion, integral and sum form

@dataclass(frozen=True)
class CriterionReport:
    """Outcome of a criterion evaluation.

    classification is operational: 'divergent' means the partial data grew
    without decay over three decades, not a proof.  The raw partials are
    kept so callers can rerun with larger horizons.
    """

    kind: str                     # "integral" | "sum"
    classification: str           # convergent | divergent | inconclusive
    value: float | None
    blocks: tuple                 # per-decade partial integrals / block sums
    partial_sums: tuple           # cumulative partial sums (sum form) or running integral
    K: float | None
    J_max: int | None
    flags: tuple

    @property
    def integral_value(self):
        return self.value


_DECAY_RATIO = 0.5  # blocks decaying slower than this over the last decades => divergent


def _classify_blocks(blocks: list[float], tail_tolerance: float):
    """Shared three-decade classifier on per-decade blocks."""
    usable = [b for b in blocks if b is not None]
    if len(usable) < 3:
        return "inconclusive", None
    b_prev, b_last = usable[-2], usable[-1]
    if b_last > tail_tolerance and b_prev > 0 and b_last >= _DECAY_RATIO * b_prev:
        return "divergent", None
    if b_prev <= 0.0 or b_last <= 0.0:
        return "convergent", 0.0
    q = b_last / b_prev
    if q < _DECAY_RATIO:
        tail = b_last * q / (1.0 - q)
        if tail <= tail_tolerance:
            return "convergent", tail
    return "inconclusive", None


def criterion_integral(profile: RadiusProfile, tail_tolerance: float = 1e-9) -> CriterionReport:
    """Integral form of the decay criterion.

    Substituting u = log(1/(1-t)) turns the integrand into
    1/log(1/phi(1 - e^-u)) on [0, inf); partial integrals over u-decades
    feed the divergence classifier.
    """
    flags: list[str] = []
    f = profile.criterion_term_at_loggap

    def integrand(u):
        return f(-u)

    def block_quad(a, b):
        # kinked table interpolants trip quad's roundoff detector; the
        # value is still good to far better than the classifier needs
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            v, _ = quad(integrand, a, b, limit=200, epsabs=1e-12, epsrel=1e-10)
        return v

    coverage = profile.table_coverage_loggap
    u_cap = math.inf if coverage is None else -coverage
    knots = [0.0, 1.0]
    while knots[-1] < min(1e8, 1000.0 if u_cap == math.inf else u_cap):
        knots.append(knots[-1] * 10.0)

    head = block_quad(knots[0], knots[1])
    blocks = []
    running = [head]
    for a, b in zip(knots[1:-1], knots[2:]):
        v = block_quad(a, b)
        blocks.append(v)
        running.append(running[-1] + v)

    if coverage is not None and u_cap < 1000.0:
        flags.append("table tail data insufficient for the three-decade classifier")
        return CriterionReport("integral", "inconclusive", None, tuple(blocks),
                               tuple(running), None, None, tuple(flags))

    classification, tail = _classify_blocks(blocks, tail_tolerance)
    # extend decades while the data is still decaying but the tail estimate
    # has not dropped under the tolerance
    while classification == "inconclusive" and knots[-1] < 1e8:
        a = knots[-1]
        knots.append(a * 10.0)
        v = block_quad(a, knots[-1])
        blocks.append(v)
        running.append(running[-1] + v)
        classification, tail = _classify_blocks(blocks, tail_tolerance)
    value = None
    if classification == "convergent":
        value = running[-1] + tail
    elif classification == "inconclusive":
        flags.append("horizon exhausted without a decisive trend")
    return CriterionReport("integral", classification, value, tuple(blocks),
                           tuple(running), None, None, tuple(flags))


def criterion_tail_integral(profile: RadiusProfile, R: float,
                            tail_tolerance: float = 1e-9):
    """Criterion integrand integrated beyond modulus R, by the same decade
    blocks: a scale-free comparison for the mass a truncation discards.
    Returns inf for divergent profiles, None when inconclusive."""
    if not 0.0 < R < 1.0:
        raise ValidationError(f"R must lie in (0, 1), got {R!r}")
    f = profile.criterion_term_at_loggap
    u0 = math.log(1.0 / (1.0 - R))

    def block_quad(a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            v, _ = quad(lambda u: f(-u), a, b, limit=200, epsabs=1e-12, epsrel=1e-10)
        return v

    knots = [u0]
    blocks = []
    total = 0.0
    classification = "inconclusive"
    tail = None
    while knots[-1] < 1e8:
        knots.append(knots[-1] * 10.0)
        v = block_quad(knots[-2], knots[-1])
        blocks.append(v)
        total += v
        classification, tail = _classify_blocks(blocks, tail_tolerance)
        if classification != "inconclusive":
            break
    if classification == "convergent":
        return total + tail
    if classification == "divergent":
        return math.inf
    return None


def criterion_sum(profile: RadiusProfile, K: float = 2.0, J_max: int = 10_000,
                  tail_tolerance: float = 1e-9) -> CriterionReport:
    """Sum form: partial sums of 1/log(1/phi(1 - K^-j)) with the same
    three-decade classifier.  Terms where phi >= 1 are skipped and flagged."""
    if not K > 1.0:
        raise ValidationError(f"K must exceed 1, got {K!r}")
    if J_max < 0:
        raise ValidationError("J_max must be >= 0")
    flags: list[str] = []
    if J_max == 0:
        return CriterionReport("sum", "inconclusive", None, (), (), float(K), 0,
                               ("empty sum",))
    j = np.arange(1, J_max + 1, dtype=np.float64)
    log_gap = -j * math.log(K)
    log_inv = np.asarray(profile.log_inv_at_loggap(log_gap), dtype=np.float64)
    bad = log_inv <= 0.0
    if np.any(bad):
        flags.append(f"{int(bad.sum())} term(s) skipped: phi >= 1 at those moduli")
    with np.errstate(divide="ignore"):
        terms = np.where(bad | np.isinf(log_inv), 0.0, 1.0 / log_inv)
    partial = np.cumsum(terms)

    coverage = profile.table_coverage_loggap
    if coverage is not None and -coverage < J_max * math.log(K):
        flags.append("table tail data insufficient for the three-decade classifier")
        return CriterionReport("sum", "inconclusive", None, (), tuple(partial),
                               float(K), int(J_max), tuple(flags))

    # per-decade blocks over j
    blocks = []
    lo = 10
    while lo < J_max:
        hi = min(lo * 10, J_max)
        blocks.append(float(terms[lo:hi].sum()))
        if hi == J_max and hi < lo * 10:
            break
        lo = hi
    classification, _ = _classify_blocks(blocks, tail_tolerance)
    value = None
    if classification != "divergent":
        # geometric tail from the trailing term ratios
        nz = np.nonzero(terms)[0]
        if nz.size == 0:
            classification, value = "inconclusive", None
        else:
            last = nz[-1]
            if last < J_max - 1:
                # trailing terms underflowed to zero: the tail is negligible
                classification, value = "convergent", float(partial[-1])
            elif last >= 3:
                ratios = terms[last - 2:last + 1] / terms[last - 3:last]
                r_hat = float(ratios.max())
                if r_hat < 0.9:
                    tail = float(terms[last] * r_hat / (1.0 - r_hat))
                    if tail <= tail_tolerance:
                        classification, value = "convergent", float(partial[-1] + tail)
    if classification == "inconclusive":
        flags.append("no decisive trend at this horizon")
    return CriterionReport("sum", classification, value, tuple(blocks),
                           tuple(partial), float(K), int(J_max), tuple(flags))


# ---------------------------------------------------------------------------
# champagne domains

@dataclass
class ChampagneDomain:
    """Unit disk minus pairwise disjoint closed bubbles.

    Euclidean and pseudohyperbolic bubble parameters are both kept: the
    walker works on Euclidean circles, the bounds (one-hole formula,
    barriers) need the pseudo data.  Instances are immutable by
    convention; the spatial index is built lazily and cached.
    """

    centers: np.ndarray            # complex Euclidean centers
    radii: np.ndarray              # Euclidean radii
    pseudo_centers: np.ndarray     # complex pseudo centers (the source points)
    pseudo_radii: np.ndarray
    source_index: np.ndarray       # indices into the originating sequence
    truncation_R: float
    profile_spec: str
    circumference_sum: float = 0.0
    tail_sum_points: float = 0.0   # union-bound mass of discarded source points
    meta: dict = field(default_factory=dict)
    _index: DiskGridIndex | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.complex128)
        self.radii = np.asarray(self.radii, dtype=np.float64)
        self.pseudo_centers = np.asarray(self.pseudo_centers, dtype=np.complex128)
        self.pseudo_radii = np.asarray(self.pseudo_radii, dtype=np.float64)
        self.source_index = np.asarray(self.source_index, dtype=np.int64)
        n = self.centers.size
        if not (self.radii.size == n and self.pseudo_centers.size == n
                and self.pseudo_radii.size == n and self.source_index.size == n):
            raise ValidationError("bubble arrays must align")
        if n and not np.all(np.abs(self.centers) + self.radii < 1.0):
            bad = int(np.argmax(np.abs(self.centers) + self.radii))
            raise ValidationError(
                f"bubble {bad} (source {self.source_index[bad]}) is not strictly inside the unit disk"
            )

    @property
    def n_bubbles(self) -> int:
        return int(self.centers.size)

    @property
    def index(self) -> DiskGridIndex:
        if self._index is None:
            self._index = DiskGridIndex(self.centers.real, self.centers.imag, self.radii)
        return self._index

    def build_index(self, n_side: int) -> DiskGridIndex:
        """Build the spatial index with an explicit grid size.

        Pinning one size across a truncation sweep couples walk
        trajectories under common seeds (step radii agree wherever the
        domains agree), which sharpens decrement estimates.
        """
        self._index = DiskGridIndex(self.centers.real, self.centers.imag,
                                    self.radii, n_side=n_side)
        return self._index

    @property
    def min_radius(self) -> float:
        return float(self.radii.min()) if self.n_bubbles else math.inf

    def contains(self, z, clearance: float = 0.0) -> bool:
        """True when z is interior to the domain with the given clearance."""
        z = complex(z)
        if abs(z) >= 1.0 - clearance:
            return False
        if self.n_bubbles == 0:
            return True
        d, _ = self.index.exact_nearest(z.real, z.imag)
        return d > clearance

    def require_interior(self, z, name: str = "z") -> complex:
        z = complex(z)
        if abs(z) >= 1.0:
            raise ValidationError(f"{name}={z!r} lies outside the open unit disk")
        if self.n_bubbles:
            d, i = self.index.exact_nearest(z.real, z.imag)
            if d <= 0.0:
                raise ValidationError(
                    f"{name}={z!r} lies inside or on bubble {i} (source {self.source_index[i]})"
                )
        return z

    def to_json_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
            return v

        return {
            "meta": {k: clean(v) for k, v in self.meta.items()},
            "bubbles": [
                {
                    "cx": float(c.real), "cy": float(c.imag), "radius": float(r),
                    "source_index": int(s),
                    "pseudo_cx": float(pc.real), "pseudo_cy": float(pc.imag),
                    "pseudo_radius": float(pr),
                }
                for c, r, s, pc, pr in zip(self.centers, self.radii, self.source_index,
                                           self.pseudo_centers, self.pseudo_radii)
            ],
            "truncation_R": float(self.truncation_R),
            "profile_spec": self.profile_spec,
            "circumference_sum": float(self.circumference_sum),
            "tail_sum_points": float(self.tail_sum_points),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @classmethod
    def from_json_dict(cls, data: dict) -> "ChampagneDomain":
        bubbles = data["bubbles"]
        centers = np.array([complex(b["cx"], b["cy"]) for b in bubbles])
        radii = np.array([b["radius"] for b in bubbles], dtype=np.float64)
        if bubbles and "pseudo_radius" in bubbles[0]:
            p_centers = np.array([complex(b["pseudo_cx"], b["pseudo_cy"]) for b in bubbles])
            p_radii = np.array([b["pseudo_radius"] for b in bubbles], dtype=np.float64)
        else:
            pseudo = [euclidean_to_pseudo(EuclideanDisk(c, r)) for c, r in zip(centers, radii)]
            p_centers = np.array([p.center for p in pseudo], dtype=np.complex128)
            p_radii = np.array([p.radius for p in pseudo], dtype=np.float64)
        return cls(
            centers=centers, radii=radii,
            pseudo_centers=p_centers, pseudo_radii=p_radii,
            source_index=np.array([b.get("source_index", k) for k, b in enumerate(bubbles)]),
            truncation_R=float(data["truncation_R"]),
            profile_spec=str(data.get("profile_spec", "")),
            circumference_sum=float(data.get("circumference_sum", 0.0)),
            tail_sum_points=float(data.get("tail_sum_points", 0.0)),
            meta=dict(data.get("meta", {})),
        )

    @classmethod
    def load(cls, path) -> "ChampagneDomain":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def domain_from_pseudo(pseudo_disks, truncation_R: float = 1.0,
                       profile_spec: str = "explicit", meta: dict | None = None,
                       source_index=None) -> ChampagneDomain:
    """Build a domain from explicit pseudohyperbolic bubbles (fixtures,
    transported domains)."""
    disks = [PseudoDisk(complex(c), float(r)) for c, r in pseudo_disks]
    p_centers = np.array([d.center for d in disks], dtype=np.complex128)
    p_radii = np.array([d.radius for d in disks], dtype=np.float64)
    centers, radii = pseudo_to_euclidean_arrays(p_centers, p_radii)
    if source_index is None:
        source_index = np.arange(len(disks))
    dom = ChampagneDomain(
        centers=centers, radii=radii,
        pseudo_centers=p_centers, pseudo_radii=p_radii,
        source_index=np.asarray(source_index),
        truncation_R=float(truncation_R), profile_spec=profile_spec,
        circumference_sum=float(2.0 * math.pi * radii.sum()) if len(disks) else 0.0,
        meta=meta or {},
    )
    _check_disjoint(dom)
    return dom


def _check_disjoint(dom: ChampagneDomain) -> None:
    """Exact pairwise gap scan; raises OverlapError naming both sources."""
    n = dom.n_bubbles
    if n < 2:
        return
    cx = dom.centers.real
    cy = dom.centers.imag
    r = dom.radii
    chunk = 512
    for i0 in range(0, n - 1, chunk):
        i1 = min(i0 + chunk, n - 1)
        dx = cx[i0:i1, None] - cx[None, i0 + 1:]
        dy = cy[i0:i1, None] - cy[None, i0 + 1:]
        gap = np.hypot(dx, dy) - r[i0:i1, None] - r[None, i0 + 1:]
        rows = np.arange(i0, i1)[:, None]
        cols = np.arange(i0 + 1, n)[None, :]
        gap[cols <= rows] = np.inf
        amin = np.unravel_index(np.argmin(gap), gap.shape)
        if gap[amin] <= 0.0:
            ia = int(rows[amin[0], 0])
            ib = int(cols[0, amin[1]])
            raise OverlapError(dom.source_index[ia], dom.source_index[ib], gap[amin])


def build_champagne(seq: PointSequence, profile: RadiusProfile, truncation_R: float,
                    ensure_interior=(0j,)) -> ChampagneDomain:
    """Bubbles D(lambda, phi(|lambda|)) for all |lambda| <= truncation_R.

    Checks pairwise disjointness of the closed Euclidean bubbles and that
    each requested interior point (the walk start, by default 0) stays
    outside every bubble.  Records the circumference sum and the
    union-bound mass of the discarded tail for downstream bounds.
    """
    if not 0.0 < truncation_R <= 1.0:
        raise ValidationError(f"truncation_R must lie in (0, 1], got {truncation_R!r}")
    moduli = np.abs(seq.points)
    keep = moduli <= truncation_R + _TIE_SNAP
    lam = seq.points[keep]
    src = np.nonzero(keep)[0]
    gaps = 1.0 - moduli[keep]
    p_radii = np.asarray(profile.value_at_gap(gaps), dtype=np.float64)
    if lam.size and not np.all((p_radii > 0.0) & (p_radii < 1.0)):
        bad = int(np.argmin(p_radii))
        raise ValidationError(
            f"profile {profile.describe()} gives radius {p_radii[bad]!r} at modulus "
            f"{np.abs(lam[bad]):.6g} (underflow below double precision); lower the truncation"
        )
    centers, radii = pseudo_to_euclidean_arrays(lam, p_radii)

    # union-bound mass of the discarded tail, in two readings: the exact
    # sum over the materialized points beyond R, and the scale-free
    # criterion integral from R (inf for divergent profiles)
    tail_pts = 0.0
    if np.any(~keep):
        tail_m = moduli[~keep]
        tail_li = np.asarray(profile.log_inv_at_loggap(np.log(1.0 - tail_m)), dtype=np.float64)
        with np.errstate(divide="ignore"):
            tail_pts = float(np.sum(np.where(np.isinf(tail_li), 0.0,
                                             np.log(1.0 / tail_m) / tail_li)))
    tail_int = criterion_tail_integral(profile, truncation_R) if truncation_R < 1.0 else 0.0

    dom = ChampagneDomain(
        centers=centers, radii=radii,
        pseudo_centers=lam.copy(), pseudo_radii=p_radii,
        source_index=src,
        truncation_R=float(truncation_R),
        profile_spec=profile.describe(),
        circumference_sum=float(2.0 * math.pi * radii.sum()) if lam.size else 0.0,
        tail_sum_points=tail_pts,
        meta={"kind": "champagne", "n_source_points": len(seq), "sequence": seq.label,
              "tail_integral_from_R": tail_int},
    )
    _check_disjoint(dom)
    for z in ensure_interior:
        dom.require_interior(z, "requested interior point")
    return dom


def resolve_delta_rule(delta, r: float) -> float:
    """delta may be a number, a callable of r, or the name 'one-minus-r'."""
    if callable(delta):
        return float(delta(r))
    if isinstance(delta, str):
        if delta in ("one-minus-r", "1-r"):
            return 1.0 - r
        raise ValidationError(f"unknown delta rule {delta!r}")
    return float(delta)


def build_finitely_connected(seq: PointSequence, z, r: float,
                             delta="one-minus-r") -> ChampagneDomain:
    """Disk minus D(lambda, delta(r)) over lambda with 1/2 < rho(lambda, z) < r.

    Finitely many bubbles by construction; the default rule delta = 1 - r
    shrinks them as the annulus widens.  On an overlap, the error reports
    the smallest r for which the default rule is admissible given the
    sequence separation.
    """
    z = require_disk_point(z, "z")
    if not 0.5 < r < 1.0:
        raise ValidationError(f"r must lie in (1/2, 1), got {r!r}")
    d = resolve_delta_rule(delta, r)
    if not 0.0 < d <= 0.5:
        raise ValidationError(f"delta(r) must lie in (0, 1/2], got {d!r}")
    rho = pseudo_distance_many(z, seq.points)
    keep = (rho > 0.5 + _TIE_SNAP) & (rho < r - _TIE_SNAP)
    lam = seq.points[keep]
    src = np.nonzero(keep)[0]
    p_radii = np.full(lam.size, d)
    centers, radii = pseudo_to_euclidean_arrays(lam, p_radii) if lam.size else (
        np.zeros(0, dtype=np.complex128), np.zeros(0))
    dom = ChampagneDomain(
        centers=centers, radii=radii,
        pseudo_centers=lam.copy(), pseudo_radii=p_radii,
        source_index=src,
        truncation_R=float(r),
        profile_spec=f"const:{d:.17g}",
        circumference_sum=float(2.0 * math.pi * radii.sum()) if lam.size else 0.0,
        meta={"kind": "finitely_connected", "z": [z.real, z.imag], "r": float(r),
              "delta": float(d), "sequence": seq.label},
    )
    try:
        _check_disjoint(dom)
    except OverlapError as exc:
        sep = separation(seq)
        # disjointness is guaranteed once 2 delta/(1+delta^2) < separation
        d_max = (1.0 - math.sqrt(max(0.0, 1.0 - sep * sep))) / sep if sep > 0 else 0.0
        r_min = 1.0 - d_max
        raise OverlapError(
            exc.index_a, exc.index_b, exc.gap,
            message=(f"bubbles at sources {exc.index_a} and {exc.index_b} overlap for "
                     f"delta={d:g}; the rule delta=1-r is admissible for r >= {r_min:.6g} "
                     f"(sequence separation {sep:.6g})"),
        ) from exc
    return dom


def transport_domain(dom: ChampagneDomain, a) -> ChampagneDomain:
    """Move the whole domain by the automorphism swapping a and 0.

    Pseudo radii are invariant; pseudo centers map through the
    automorphism.  Disjointness is preserved exactly by the map, so it is
    not re-checked.
    """
    a = require_disk_point(a, "a")
    if a == 0:
        return dom
    p_centers = mobius_apply_many(a, dom.pseudo_centers)
    centers, radii = pseudo_to_euclidean_arrays(p_centers, dom.pseudo_radii)
    meta = dict(dom.meta)
    meta["transported_by"] = [a.real, a.imag]
    return ChampagneDomain(
        centers=centers, radii=radii,
        pseudo_centers=p_centers, pseudo_radii=dom.pseudo_radii.copy(),
        source_index=dom.source_index.copy(),
        truncation_R=dom.truncation_R, profile_spec=dom.profile_spec,
        circumference_sum=float(2.0 * math.pi * radii.sum()) if dom.n_bubbles else 0.0,
        tail_sum_points=dom.tail_sum_points,
        meta=meta,
    )
