"""Lattice points, boxes, boundaries, projections, and separation predicates.

Two-particle configurations live on Z^d x Z^d.  All distances are sup-norm
(Chebyshev) over all coordinates unless a function takes an explicit
adjacency mode; the particle-exchange map ``sigma`` swaps the two particle
blocks.  Box radii arising from real-valued scale sequences are rounded up
before enumeration, which preserves every containment relation used by the
multi-scale predicates.

Everything here is a pure function of immutable values; point enumeration
is lexicographic in (particle 1 coords, particle 2 coords) so matrix index
maps are reproducible run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidInputError
from .kernels import pairwise_dist

ADJ_SUP = "sup"
ADJ_L1 = "l1"

_ADJ_ALIASES = {
    "sup": ADJ_SUP,
    "sup-literal": ADJ_SUP,
    "chebyshev": ADJ_SUP,
    "l1": ADJ_L1,
    "manhattan": ADJ_L1,
}


def normalize_adjacency(name: str) -> str:
    try:
        return _ADJ_ALIASES[name.lower()]
    except KeyError:
        raise InvalidInputError(f"unknown adjacency mode: {name!r}") from None


def hop_degree(d: int, adjacency: str, particles: int = 2) -> int:
    """Maximal number of lattice neighbours of a point under the mode."""
    nd = particles * d
    return 3**nd - 1 if normalize_adjacency(adjacency) == ADJ_SUP else 2 * nd


@dataclass(frozen=True)
class Point1:
    """Single-particle lattice site in Z^d."""

    coords: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        if len(self.coords) < 1:
            raise InvalidInputError("lattice points need dimension >= 1")

    @property
    def d(self) -> int:
        return len(self.coords)

    def to_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=np.int64)

    def shift(self, delta: Sequence[int]) -> "Point1":
        return Point1(tuple(c + int(x) for c, x in zip(self.coords, delta)))


@dataclass(frozen=True)
class Point2:
    """Two-particle configuration: a pair of sites of equal dimension."""

    x1: Point1
    x2: Point1

    def __post_init__(self):
        if self.x1.d != self.x2.d:
            raise DimensionMismatchError(
                f"particle dimensions differ: {self.x1.d} vs {self.x2.d}"
            )

    @classmethod
    def of(cls, x1: Iterable[int], x2: Iterable[int]) -> "Point2":
        return cls(Point1(tuple(x1)), Point1(tuple(x2)))

    @property
    def d(self) -> int:
        return self.x1.d

    @property
    def flat(self) -> tuple[int, ...]:
        return self.x1.coords + self.x2.coords

    def sigma(self) -> "Point2":
        return Point2(self.x2, self.x1)

    def to_array(self) -> np.ndarray:
        return np.array(self.flat, dtype=np.int64)


def sup_norm1(v: Point1) -> int:
    return max(abs(c) for c in v.coords)


def sup_norm(v: Point2) -> int:
    """Sup-norm of a two-particle vector: max over both particles of the
    max coordinate magnitude."""
    return max(sup_norm1(v.x1), sup_norm1(v.x2))


def sup_dist1(a: Point1, b: Point1) -> int:
    if a.d != b.d:
        raise DimensionMismatchError("points of different dimension")
    return max(abs(x - y) for x, y in zip(a.coords, b.coords))


def sup_dist(a: Point2, b: Point2) -> int:
    if a.d != b.d:
        raise DimensionMismatchError("points of different dimension")
    return max(sup_dist1(a.x1, b.x1), sup_dist1(a.x2, b.x2))


def permute(x: Point2) -> Point2:
    """Particle exchange (x1, x2) -> (x2, x1); an involution."""
    return x.sigma()


def pair_separation(u: Point2, v: Point2) -> int:
    """Exchange-symmetrised center distance min(|u - v|, |sigma u - v|)."""
    return min(sup_dist(u, v), sup_dist(u.sigma(), v))


@lru_cache(maxsize=4096)
def _grid_points(center: tuple[int, ...], radius: int) -> np.ndarray:
    axes = [np.arange(c - radius, c + radius + 1, dtype=np.int64) for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    pts.setflags(write=False)
    return pts


@dataclass(frozen=True)
class Box1:
    """Single-particle box: all sites within sup-distance ``radius`` of the
    center.  Cardinality (2*radius+1)**d."""

    center: Point1
    radius: int

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidInputError("box radius must be >= 0")

    @classmethod
    def of_origin(cls, d: int, radius: int) -> "Box1":
        return cls(Point1((0,) * d), radius)

    @property
    def d(self) -> int:
        return self.center.d

    @property
    def npoints(self) -> int:
        return (2 * self.radius + 1) ** self.d

    def points(self) -> np.ndarray:
        """Lexicographically ordered (N, d) site array."""
        return _grid_points(self.center.coords, self.radius)

    def index_of(self, site: Point1 | Sequence[int]) -> int:
        coords = site.coords if isinstance(site, Point1) else tuple(site)
        w = 2 * self.radius + 1
        idx = 0
        for c, u in zip(coords, self.center.coords):
            off = c - (u - self.radius)
            if not 0 <= off < w:
                raise KeyError(f"site {coords} outside box")
            idx = idx * w + off
        return idx

    def contains(self, site: Point1) -> bool:
        return sup_dist1(site, self.center) <= self.radius

    def center_index(self) -> int:
        return self.index_of(self.center)

    def boundary_indices(self) -> np.ndarray:
        """Indices of the interior boundary (the sup-distance == radius
        shell); empty for radius 0."""
        if self.radius == 0:
            return np.empty(0, dtype=np.int64)
        dist = np.abs(self.points() - self.center.to_array()).max(axis=1)
        return np.nonzero(dist == self.radius)[0]


@dataclass(frozen=True)
class Box2:
    """Two-particle box around a center in Z^d x Z^d."""

    center: Point2
    radius: int

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidInputError("box radius must be >= 0")

    @classmethod
    def of_origin(cls, d: int, radius: int) -> "Box2":
        return cls(Point2.of((0,) * d, (0,) * d), radius)

    @property
    def d(self) -> int:
        return self.center.d

    @property
    def npoints(self) -> int:
        return (2 * self.radius + 1) ** (2 * self.d)

    def points(self) -> np.ndarray:
        """Lexicographically ordered (N, 2d) array of configurations."""
        return _grid_points(self.center.flat, self.radius)

    def sigma(self) -> "Box2":
        return Box2(self.center.sigma(), self.radius)

    def index_of(self, x: Point2 | Sequence[int]) -> int:
        flat = x.flat if isinstance(x, Point2) else tuple(x)
        w = 2 * self.radius + 1
        idx = 0
        for c, u in zip(flat, self.center.flat):
            off = c - (u - self.radius)
            if not 0 <= off < w:
                raise KeyError(f"configuration {flat} outside box")
            idx = idx * w + off
        return idx

    def contains(self, x: Point2) -> bool:
        return sup_dist(x, self.center) <= self.radius

    def center_index(self) -> int:
        return self.index_of(self.center)

    def center_dists(self) -> np.ndarray:
        return np.abs(self.points() - self.center.to_array()).max(axis=1)

    def boundary_indices(self) -> np.ndarray:
        if self.radius == 0:
            return np.empty(0, dtype=np.int64)
        return np.nonzero(self.center_dists() == self.radius)[0]

    def interior_indices(self) -> np.ndarray:
        return np.nonzero(self.center_dists() <= self.radius - 1)[0]


def enumerate_box(b: Box2) -> np.ndarray:
    """All configurations of the box, lexicographic, duplicate-free."""
    return b.points()


def interior_boundary(b: Box2) -> np.ndarray:
    """Configurations of the box adjacent (sup-distance 1) to its exterior.

    For a full box this is the sup-distance == radius shell; a radius-0 box
    is treated as having an empty boundary so that degenerate boxes are
    vacuously non-singular.
    """
    return b.points()[b.boundary_indices()]


def exterior_boundary(b: Box2) -> np.ndarray:
    """Configurations outside the box at sup-distance exactly 1 from it
    (the sup-distance == radius+1 shell)."""
    outer = Box2(b.center, b.radius + 1)
    dist = outer.center_dists()
    return outer.points()[dist == b.radius + 1]


def is_r_distant(b1: Box2, b2: Box2, R: int) -> bool:
    """Exchange-symmetrised center separation test:
    min(|u - v|, |sigma u - v|) > 8 R."""
    return pair_separation(b1.center, b2.center) > 8 * R


def is_interactive(b: Box2, r0: int) -> bool:
    """Whether the box meets the interaction layer |x1 - x2| <= r0.

    Closed form: the box intersects the layer iff the centers' particle
    separation is at most 2*radius + r0.
    """
    if r0 < 1:
        raise InvalidInputError("interaction range r0 must be >= 1")
    return sup_dist1(b.center.x1, b.center.x2) <= 2 * b.radius + r0


def projections(b: Box2) -> tuple[Box1, Box1, np.ndarray]:
    """Per-particle projections of the box and their merged site set.

    Returns (projection onto particle 1, projection onto particle 2,
    deduplicated union of their sites).
    """
    p1 = Box1(b.center.x1, b.radius)
    p2 = Box1(b.center.x2, b.radius)
    merged = np.unique(np.vstack([p1.points(), p2.points()]), axis=0)
    return p1, p2, merged


def box_distance(b1: Box2, b2: Box2) -> int:
    """Sup-distance between the two boxes as point sets.

    For product boxes this is the max over coordinates of the per-axis
    interval gaps.
    """
    gaps = [
        max(0, abs(c1 - c2) - b1.radius - b2.radius)
        for c1, c2 in zip(b1.center.flat, b2.center.flat)
    ]
    return max(gaps)


def point_set_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Min sup-distance between two explicit point arrays."""
    if len(a) == 0 or len(b) == 0:
        raise InvalidInputError("point sets must be non-empty")
    return int(pairwise_dist(np.atleast_2d(a), np.atleast_2d(b), ADJ_SUP).min())


@dataclass(frozen=True)
class AnnulusSpec:
    """Annulus between consecutive exchange-inflated scale boxes around a
    center.

    The inflation ``b_k = 1 + R(u)/L_k`` (with ``R(u)`` the distance from
    the center to its exchange image) makes the inner box contain the union
    of the scale-k box and its exchange image.
    """

    center: Point2
    k: int
    schedule: "object"  # ScaleSchedule; typed loosely to avoid an import cycle

    def __post_init__(self):
        if self.k < 0:
            raise InvalidInputError("scale index must be >= 0")

    def exchange_radius(self) -> int:
        return sup_dist(self.center.sigma(), self.center)

    def _inflated_radius(self, k: int) -> int:
        lk = self.schedule.L[k]
        bk = 1.0 + self.exchange_radius() / lk
        return math.ceil(bk * lk)

    @property
    def inner_radius(self) -> int:
        return self._inflated_radius(self.k)

    @property
    def outer_radius(self) -> int:
        return self._inflated_radius(self.k + 1)

    def mirror_union(self) -> np.ndarray:
        """Union of the scale-k box and its exchange image (deduplicated)."""
        lk = self.schedule.L[self.k]
        a = Box2(self.center, lk).points()
        b = Box2(self.center.sigma(), lk).points()
        return np.unique(np.vstack([a, b]), axis=0)

    def points(self) -> np.ndarray:
        outer = Box2(self.center, self.outer_radius)
        dist = outer.center_dists()
        return outer.points()[dist > self.inner_radius]


def annulus(u: Point2, k: int, schedule) -> np.ndarray:
    """Configurations in the scale-(k+1) inflated box but not the scale-k
    one; disjoint from the union of the scale-k box and its exchange
    image."""
    return AnnulusSpec(u, k, schedule).points()
