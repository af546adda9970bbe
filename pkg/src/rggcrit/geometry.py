"""Volumetric primitives in d dimensions and unit-volume sampling regions.

Exact formulas (balls, spherical segments, two-ball lenses, half-ball
"shadow" volumes) are backed by the regularized incomplete beta function;
independent Monte Carlo estimators for the same quantities are provided as
oracles.  Regions are unit-volume domains (cube, box with unit product of
sides, ball of unit volume) supporting uniform sampling, boundary distance,
surface area and ball-intersection volumes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import betainc, gammaln

from .errors import DomainError

__all__ = [
    "Region",
    "VolumeEstimate",
    "ball_volume",
    "segment_volume",
    "segment_volume_quad",
    "lens_volume",
    "shadow_volume_exact",
    "shadow_lower_bound",
    "ball_region_volume",
    "sample_uniform",
    "sample_in_ball",
    "surface_area",
    "distance_to_boundary",
    "segment_volume_mc",
    "lens_volume_mc",
    "shadow_volume_mc",
    "two_ball_intersection",
    "assumption_one_min_ratio",
]


def ball_volume(d: int, r: float) -> float:
    """Volume of a d-dimensional Euclidean ball of radius r."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if r < 0:
        raise DomainError(f"radius must be >= 0, got {r}")
    if r == 0.0:
        return 0.0
    return math.exp(0.5 * d * math.log(math.pi) + d * math.log(r) - gammaln(0.5 * d + 1.0))


def unit_ball_volume(d: int) -> float:
    """Volume of the unit d-ball, V_d(1)."""
    if d < 0:
        raise DomainError(f"dimension must be >= 0, got {d}")
    if d == 0:
        return 1.0
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))


def _halfwidth_integral(d: int, x) -> np.ndarray | float:
    """integral of (1-u^2)^((d-1)/2) over u in [-1, x], via regularized
    incomplete beta.  Vectorized in x; |x| <= 1."""
    x = np.asarray(x, dtype=float)
    full = math.exp(0.5 * math.log(math.pi) + gammaln(0.5 * (d + 1)) - gammaln(0.5 * d + 1.0))
    ib = betainc(0.5, 0.5 * (d + 1), np.clip(x * x, 0.0, 1.0))
    out = 0.5 * full * np.where(x >= 0.0, 1.0 + ib, 1.0 - ib)
    return out if out.shape else float(out)


def segment_volume(d: int, r: float, t: float) -> float:
    """Volume of the major spherical segment {x in B(0,r): x_1 <= t}.

    t is the signed distance from the center to the cutting hyperplane,
    extended to t in [-r, r] (t < 0 gives the minor side).  Evaluated in
    closed form through the regularized incomplete beta function; the 1-D
    quadrature route is `segment_volume_quad`.
    """
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if r <= 0:
        raise DomainError(f"radius must be > 0, got {r}")
    if abs(t) > r:
        raise DomainError(f"|t|={abs(t)} exceeds radius {r}")
    return unit_ball_volume(d - 1) * r**d * _halfwidth_integral(d, t / r)


def segment_volume_quad(d: int, r: float, t: float) -> float:
    """Spherical segment volume by adaptive quadrature (oracle route)."""
    if d < 2 or r <= 0 or abs(t) > r:
        raise DomainError(f"invalid segment parameters d={d}, r={r}, t={t}")
    val, _ = quad(lambda u: (1.0 - u * u) ** (0.5 * (d - 1)), -1.0, t / r,
                  epsabs=1e-13, epsrel=1e-12, limit=200)
    return unit_ball_volume(d - 1) * r**d * val


def segment_profile(d: int, r: float, t) -> np.ndarray | float:
    """Vectorized segment volume for an array of plane offsets t."""
    return unit_ball_volume(d - 1) * r**d * _halfwidth_integral(d, np.asarray(t, float) / r)


def lens_volume(d: int, r: float, L: float) -> float:
    """Volume of the intersection of two radius-r balls with centers L apart."""
    if r <= 0:
        raise DomainError(f"radius must be > 0, got {r}")
    if L < 0:
        raise DomainError(f"center distance must be >= 0, got {L}")
    if L >= 2.0 * r:
        return 0.0
    return 2.0 * (ball_volume(d, r) - segment_volume(d, r, 0.5 * L))


def shadow_volume_exact(d: int, r: float, L: float) -> float:
    """Volume of the half-ball of B(x,r) facing y minus B(y,r), ||xy|| = L < r.

    The region is rotationally symmetric about the xy axis; cross sections
    are concentric (d-1)-ball annuli, so the volume reduces to a 1-D
    integral over the axial coordinate t in [0, L/2].
    """
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if not 0 <= L < r:
        raise DomainError(f"need 0 <= L < r, got L={L}, r={r}")
    if L == 0.0:
        return 0.0
    c = unit_ball_volume(d - 1)
    e = 0.5 * (d - 1)

    def integrand(t):
        return (r * r - t * t) ** e - (r * r - (L - t) ** 2) ** e

    val, _ = quad(integrand, 0.0, 0.5 * L, epsabs=1e-15, epsrel=1e-12, limit=200)
    return c * val


def shadow_lower_bound(d: int, L: float) -> float:
    """Leading term of the lower bound for the shadow volume: the bound
    without its vanishing relative correction."""
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if L < 0:
        raise DomainError(f"L must be >= 0, got {L}")
    return (d - 1) * math.pi ** (0.5 * (d - 1)) * L**d / (16.0 * math.exp(gammaln(0.5 * (d + 1))))


# ---------------------------------------------------------------------------
# Monte Carlo oracles (independent of the closed forms above)

def sample_in_ball(d: int, r: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform in B(0, r): isotropic direction times U^(1/d) radius."""
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    rad = r * rng.random(n) ** (1.0 / d)
    return z * rad[:, None]


def segment_volume_mc(d: int, r: float, t: float, budget: int,
                      rng: np.random.Generator) -> "VolumeEstimate":
    """Monte Carlo estimate of segment_volume: fraction of uniform ball
    samples with first coordinate <= t."""
    pts = sample_in_ball(d, r, budget, rng)
    return _fraction_estimate(np.count_nonzero(pts[:, 0] <= t), budget, ball_volume(d, r))


def lens_volume_mc(d: int, r: float, L: float, budget: int,
                   rng: np.random.Generator) -> "VolumeEstimate":
    """Monte Carlo estimate of lens_volume: ball samples also inside the
    ball centered at distance L along the first axis."""
    pts = sample_in_ball(d, r, budget, rng)
    pts[:, 0] -= L
    hits = np.count_nonzero((pts * pts).sum(axis=1) <= r * r)
    return _fraction_estimate(hits, budget, ball_volume(d, r))


def shadow_volume_mc(d: int, r: float, L: float, budget: int,
                     rng: np.random.Generator) -> "VolumeEstimate":
    """Monte Carlo estimate of shadow_volume_exact: hemisphere samples not
    covered by the second ball."""
    pts = sample_in_ball(d, r, budget, rng)
    pts[:, 0] = np.abs(pts[:, 0])
    pts[:, 0] -= L
    misses = np.count_nonzero((pts * pts).sum(axis=1) > r * r)
    return _fraction_estimate(misses, budget, 0.5 * ball_volume(d, r))


def _fraction_estimate(hits: int, n: int, scale: float) -> "VolumeEstimate":
    p = hits / n
    se = scale * math.sqrt(p * (1.0 - p) / n)
    return VolumeEstimate(value=scale * p, std_error=se, method="monte-carlo")


# ---------------------------------------------------------------------------
# Regions

@dataclass(frozen=True)
class Region:
    """Unit-volume sampling domain in R^d.

    kind: "cube"  -> [0,1]^d
          "box"   -> prod_i [0, sides_i], with prod(sides) == 1
          "ball"  -> ball centered at the origin with radius chosen so the
                     volume is 1
    """

    kind: str
    d: int
    sides: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"region dimension must be >= 2, got {self.d}")
        if self.kind == "cube":
            object.__setattr__(self, "sides", tuple([1.0] * self.d))
        elif self.kind == "box":
            if len(self.sides) != self.d:
                raise DomainError("box needs one side length per dimension")
            if any(s <= 0 for s in self.sides):
                raise DomainError("box side lengths must be positive")
            if abs(math.prod(self.sides) - 1.0) > 1e-9:
                raise DomainError("box side lengths must have product 1")
        elif self.kind == "ball":
            object.__setattr__(self, "sides", ())
        else:
            raise DomainError(f"unknown region kind {self.kind!r}")

    @property
    def ball_radius(self) -> float:
        """Radius of the unit-volume ball (ball regions only)."""
        return (1.0 / unit_ball_volume(self.d)) ** (1.0 / self.d)

    @property
    def diameter(self) -> float:
        if self.kind == "ball":
            return 2.0 * self.ball_radius
        return math.sqrt(sum(s * s for s in self.sides))

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, float)
        if self.kind == "ball":
            return float(x @ x) <= self.ball_radius**2 * (1.0 + 1e-12)
        lo = x >= -1e-12
        hi = x <= np.asarray(self.sides) + 1e-12
        return bool(lo.all() and hi.all())

    def to_json(self) -> str:
        obj: dict = {"kind": self.kind, "d": self.d}
        if self.kind == "box":
            obj["sides"] = list(self.sides)
        return json.dumps(obj)

    @staticmethod
    def from_json(text: str) -> "Region":
        obj = json.loads(text)
        return Region(kind=obj["kind"], d=int(obj["d"]),
                      sides=tuple(obj.get("sides", ())))


@dataclass(frozen=True)
class VolumeEstimate:
    """A volume with its uncertainty and the computation route."""

    value: float
    std_error: float
    method: str  # "exact" | "quadrature" | "monte-carlo"

    def __post_init__(self):
        if self.value < 0 or self.std_error < 0:
            raise DomainError("volume and standard error must be >= 0")
        if self.method == "exact" and self.std_error != 0.0:
            raise DomainError("exact estimates must have zero standard error")


def sample_uniform(region: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform over the region, shape (n, d)."""
    if region.kind == "ball":
        return sample_in_ball(region.d, region.ball_radius, n, rng)
    pts = rng.random((n, region.d))
    if region.kind == "box":
        pts *= np.asarray(region.sides)
    return pts


def surface_area(region: Region) -> float:
    """(d-1)-dimensional measure of the region boundary."""
    if region.kind == "ball":
        radius = region.ball_radius
        return region.d * unit_ball_volume(region.d) * radius ** (region.d - 1)
    # box/cube: two faces per axis, each the product of the other sides
    return 2.0 * sum(1.0 / s for s in region.sides)


def distance_to_boundary(region: Region, x: np.ndarray) -> float:
    """Euclidean distance from an interior point to the region boundary."""
    x = np.asarray(x, float)
    if not region.contains(x):
        raise DomainError("point lies outside the region")
    if region.kind == "ball":
        return region.ball_radius - float(np.linalg.norm(x))
    sides = np.asarray(region.sides)
    return float(min(x.min(initial=np.inf), (sides - x).min(initial=np.inf)))


def _box_face_gaps(region: Region, x: np.ndarray) -> np.ndarray:
    """Distances to all 2d faces of a box, order (lo_1, hi_1, lo_2, ...)."""
    sides = np.asarray(region.sides)
    return np.column_stack([x, sides - x]).reshape(-1)


def ball_region_volume(region: Region, x: np.ndarray, r: float,
                       budget: int = 200_000,
                       rng: np.random.Generator | None = None) -> VolumeEstimate:
    """vol(B(x, r) ∩ region).

    Exact when the ball is interior or cut by a single flat face (spherical
    segment).  Near box edges/corners and against the curved ball boundary
    the value is estimated by Monte Carlo over B(x, r) with `budget`
    samples.
    """
    x = np.asarray(x, float)
    if r <= 0:
        raise DomainError(f"radius must be > 0, got {r}")
    if not region.contains(x):
        raise DomainError("center lies outside the region")
    dist = distance_to_boundary(region, x)
    if dist >= r:
        return VolumeEstimate(ball_volume(region.d, r), 0.0, "exact")
    if region.kind in ("cube", "box"):
        gaps = _box_face_gaps(region, x)
        cut = gaps < r
        if cut.sum() == 1:
            t = float(gaps[cut][0])
            return VolumeEstimate(segment_volume(region.d, r, t), 0.0, "exact")
    if rng is None:
        rng = np.random.default_rng(0)
    pts = x + sample_in_ball(region.d, r, budget, rng)
    if region.kind == "ball":
        hits = np.count_nonzero((pts * pts).sum(axis=1) <= region.ball_radius**2)
    else:
        sides = np.asarray(region.sides)
        hits = np.count_nonzero(((pts >= 0.0) & (pts <= sides)).all(axis=1))
    return _fraction_estimate(int(hits), budget, ball_volume(region.d, r))


def two_ball_intersection(d: int, big_radius: float, small_radius: float,
                          center_distance: float) -> float:
    """Exact volume of the intersection of B(0, R) and B(p, r), ||p|| = rho.

    Unequal-radius lens via two spherical segments meeting at the plane of
    the intersection circle.
    """
    R, r, rho = big_radius, small_radius, center_distance
    if R <= 0 or r <= 0 or rho < 0:
        raise DomainError("radii must be positive and distance nonnegative")
    if rho >= R + r:
        return 0.0
    if rho + r <= R:
        return ball_volume(d, r)
    if rho + R <= r:
        return ball_volume(d, R)
    c1 = (rho * rho + R * R - r * r) / (2.0 * rho)  # plane offset from center of B(0,R)
    c2 = rho - c1
    cap_big = ball_volume(d, R) - segment_volume(d, R, max(min(c1, R), -R))
    cap_small = ball_volume(d, r) - segment_volume(d, r, max(min(c2, r), -r))
    return cap_big + cap_small


def assumption_one_min_ratio(region: Region, r: float, n_points: int,
                             rng: np.random.Generator) -> float:
    """Minimum of vol(B(x,r) ∩ region)/vol(B(x,r)) over boundary probes.

    Probes are sampled on the boundary (plus, for boxes, every corner: the
    worst case).  Ratios are computed by exact routes only — segments for
    single faces, orthant fractions for points lying on m faces, the
    unequal-radius lens for the ball — so the reported minimum carries no
    Monte Carlo noise.  For points strictly inside near several faces the
    exact orthant cone bound 2^-m is used, which is a valid lower bound on
    the true ratio.
    """
    if r <= 0:
        raise DomainError(f"radius must be > 0, got {r}")
    vball = ball_volume(region.d, r)
    probes = _boundary_probes(region, n_points, rng)
    worst = math.inf
    for x in probes:
        if region.kind == "ball":
            rho = float(np.linalg.norm(x))
            v = two_ball_intersection(region.d, region.ball_radius, r, rho)
            ratio = v / vball
        else:
            gaps = _box_face_gaps(region, x)
            on = np.count_nonzero(gaps <= 1e-15)
            near = np.count_nonzero(gaps < r)
            if near <= 1:
                t = distance_to_boundary(region, x)
                ratio = segment_volume(region.d, r, min(t, r)) / vball
            elif on == near and r <= gaps[gaps >= r].min(initial=math.inf):
                ratio = 0.5**on  # exactly on m mutually perpendicular faces
            else:
                ratio = 0.5**near  # orthant cone through x: exact lower bound
        worst = min(worst, ratio)
    return worst


def _boundary_probes(region: Region, n_points: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Points on the boundary; boxes include all corners explicitly."""
    d = region.d
    if region.kind == "ball":
        z = rng.standard_normal((n_points, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return z * region.ball_radius
    sides = np.asarray(region.sides)
    face_area = np.repeat(1.0 / sides, 2)
    face = rng.choice(2 * d, size=n_points, p=face_area / face_area.sum())
    pts = rng.random((n_points, d)) * sides
    axis, high = face // 2, face % 2
    pts[np.arange(n_points), axis] = np.where(high == 1, sides[axis], 0.0)
    n_corners = min(2**d, 256)
    corners = np.array([[(i >> j) & 1 for j in range(d)] for i in range(n_corners)], float)
    return np.vstack([pts, corners * sides])
