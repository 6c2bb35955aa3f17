"""Convex bounded domains (balls and axis-aligned boxes) with closed-form queries.

Every query accepts a single point of shape ``(n,)`` or a batch of shape
``(m, n)``; batched inputs return batched outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class GeometryError(ValueError):
    """Raised for invalid domains or points outside the domain."""


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    if n == 1:
        return 2.0
    if n == 2:
        return 2.0 * math.pi
    if n == 3:
        return 4.0 * math.pi
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int, radius: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * radius**n


@lru_cache(maxsize=None)
def _sphere_rule_cached(n: int, count: int):
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
        wts = np.ones(2)
    elif n == 2:
        theta = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        wts = np.full(count, 2.0 * np.pi / count)
    elif n == 3:
        # Gauss-Legendre in cos(theta) times the trapezoid rule in phi
        n_polar = max(2, count // 2)
        z, gw = np.polynomial.legendre.leggauss(n_polar)
        phi = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        rho = np.sqrt(1.0 - zz**2)
        dirs = np.stack([rho * np.cos(pp), rho * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        wts = (gw[:, None] * np.full(count, 2.0 * np.pi / count)[None, :]).reshape(-1)
    else:
        raise GeometryError(f"sphere rules are implemented for n <= 3, got n={n}")
    dirs.setflags(write=False)
    wts.setflags(write=False)
    return dirs, wts


def sphere_rule(n: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature rule on the unit sphere S^{n-1}.

    Returns ``(directions, weights)`` with ``weights.sum() == sphere_area(n)``
    up to rounding.  The rule is symmetric: the directions come in antipodal
    pairs whenever ``count`` is even, so odd moments vanish.
    """
    if count < 2:
        raise GeometryError("angular rules need at least 2 nodes")
    return _sphere_rule_cached(n, int(count))


def _as_batch(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not len(self.center):
            raise GeometryError("ball needs a center with at least one coordinate")
        if not all(math.isfinite(c) for c in self.center):
            raise GeometryError("ball center must be finite")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise GeometryError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return ball_volume(self.dim, self.radius)

    @property
    def perimeter(self) -> float:
        return self.dim * self.volume / self.radius

    @property
    def inradius(self) -> float:
        return self.radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def inner_offset(self, delta: float) -> "Ball":
        """The open set of points farther than ``delta`` from the complement."""
        if delta >= self.radius:
            raise GeometryError(f"inner offset {delta} empties the ball of radius {self.radius}")
        return Ball(self.center, self.radius - delta)

    def _distance(self, x: np.ndarray) -> np.ndarray:
        diff = x - np.asarray(self.center)
        return self.radius - np.sqrt(np.sum(diff * diff, axis=-1))

    def _ray_interval(self, x: np.ndarray, w: np.ndarray):
        # line x + t w with |w| = 1; returns (t0, t1) or nan where it misses
        diff = x - np.asarray(self.center)
        b = np.sum(diff * w, axis=-1)
        c = np.sum(diff * diff, axis=-1) - self.radius**2
        disc = b * b - c
        root = np.sqrt(np.where(disc > 0, disc, np.nan))
        return -b - root, -b + root

    def _sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        n = self.dim
        if n == 1:
            u = rng.uniform(-1.0, 1.0, size)[:, None]
        else:
            g = rng.standard_normal((size, n))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            u = g * rng.random(size)[:, None] ** (1.0 / n)
        return np.asarray(self.center) + self.radius * u

    def _sample_collar(self, t: float, rng: np.random.Generator, size: int) -> np.ndarray:
        n = self.dim
        r_in = self.radius - t
        # radius law with density proportional to r^{n-1} on (r_in, R)
        u = rng.random(size)
        rad = (r_in**n + u * (self.radius**n - r_in**n)) ** (1.0 / n)
        if n == 1:
            sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
            dirs = sign[:, None]
        else:
            dirs = rng.standard_normal((size, n))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return np.asarray(self.center) + rad[:, None] * dirs

    def to_config(self) -> dict:
        return {"domain": "ball", "center": self.center, "radius": self.radius}


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(float(c) for c in self.hi))
        if len(self.lo) != len(self.hi) or not len(self.lo):
            raise GeometryError("box corners must have the same positive dimension")
        if not all(math.isfinite(c) for c in self.lo + self.hi):
            raise GeometryError("box corners must be finite")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise GeometryError(f"box needs lo < hi componentwise, got {self.lo}, {self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    @property
    def perimeter(self) -> float:
        sides = self.sides
        if self.dim == 1:
            return 2.0
        return float(sum(2.0 * np.prod(np.delete(sides, i)) for i in range(self.dim)))

    @property
    def inradius(self) -> float:
        return float(self.sides.min() / 2.0)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.sides))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lo), np.asarray(self.hi)

    def inner_offset(self, delta: float) -> "Box":
        if delta >= self.inradius:
            raise GeometryError(f"inner offset {delta} empties the box (inradius {self.inradius})")
        return Box(tuple(l + delta for l in self.lo), tuple(h - delta for h in self.hi))

    def _distance(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(x - np.asarray(self.lo), np.asarray(self.hi) - x).min(axis=-1)

    def _ray_interval(self, x: np.ndarray, w: np.ndarray):
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo - x) / w
            tb = (hi - x) / w
        t_enter = np.where(w == 0, -np.inf, np.minimum(ta, tb))
        t_leave = np.where(w == 0, np.inf, np.maximum(ta, tb))
        # a ray parallel to a slab it lies outside of misses the box entirely
        outside = (w == 0) & ((x <= lo) | (x >= hi))
        t0 = t_enter.max(axis=-1)
        t1 = t_leave.min(axis=-1)
        miss = outside.any(axis=-1) | (t1 <= t0)
        return np.where(miss, np.nan, t0), np.where(miss, np.nan, t1)

    def _sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.lo) + self.sides * rng.random((size, self.dim))

    def _sample_collar(self, t: float, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty((size, self.dim))
        filled = 0
        accept = 1.0 - np.prod(self.sides - 2 * t) / self.volume
        while filled < size:
            batch = int((size - filled) / accept * 1.2) + 16
            pts = self._sample(rng, batch)
            pts = pts[self._distance(pts) < t]
            take = min(len(pts), size - filled)
            out[filled:filled + take] = pts[:take]
            filled += take
        return out

    def to_config(self) -> dict:
        return {"domain": "box", "lo": self.lo, "hi": self.hi}


Domain = Ball | Box


def _check_inside(dom: Domain, x: np.ndarray) -> np.ndarray:
    d = dom._distance(x)
    if not np.all(d > 0):
        raise GeometryError("point(s) outside the open domain")
    return d


def contains(dom: Domain, x) -> bool | np.ndarray:
    """True where ``x`` lies in the open set; boundary points are excluded."""
    xb, single = _as_batch(x)
    inside = dom._distance(xb) > 0
    return bool(inside[0]) if single else inside


def boundary_distance(dom: Domain, x):
    """Euclidean distance to the boundary; raises for points not in the domain."""
    xb, single = _as_batch(x)
    d = _check_inside(dom, xb)
    return float(d[0]) if single else d


def inner_offset_contains(dom: Domain, delta: float, x):
    xb, single = _as_batch(x)
    d = dom._distance(xb)
    inside = (d > 0) & (d > delta)
    return bool(inside[0]) if single else inside


def ray_exit_distance(dom: Domain, x, w):
    """Distance along the unit direction ``w`` from ``x`` to the boundary.

    ``x`` and ``w`` broadcast against each other, so a batch of points can be
    paired with a batch of directions of shape ``(m, k, n)``.
    """
    xa = np.asarray(x, dtype=float)
    wa = np.asarray(w, dtype=float)
    _check_inside(dom, xa.reshape(-1, dom.dim))
    _, t1 = dom._ray_interval(xa, wa)
    if xa.ndim == 1 and wa.ndim == 1:
        return float(t1)
    return t1


def collar_volume(dom: Domain, t: float) -> float:
    """Measure of the boundary layer {x in dom : dist(x, boundary) <= t}."""
    if not t > 0:
        raise GeometryError("collar width must be positive")
    if t >= dom.inradius:
        raise GeometryError(f"collar width {t} is not below the inradius {dom.inradius}")
    if isinstance(dom, Ball):
        return dom.volume - ball_volume(dom.dim, dom.radius - t)
    return dom.volume - float(np.prod(dom.sides - 2.0 * t))


def sample_uniform(dom: Domain, rng: np.random.Generator, size: int | None = None):
    """Uniform sample(s) on the domain driven entirely by ``rng``."""
    if size is None:
        return dom._sample(rng, 1)[0]
    return dom._sample(rng, int(size))


def sample_collar(dom: Domain, t: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform samples on the layer of points within distance ``t`` of the boundary."""
    collar_volume(dom, t)
    return dom._sample_collar(t, rng, int(size))


def domain_from_config(cfg: dict) -> Domain:
    kind = cfg.get("domain", "ball")
    if kind == "ball":
        return Ball(tuple(cfg["center"]), float(cfg["radius"]))
    if kind == "box":
        return Box(tuple(cfg["lo"]), tuple(cfg["hi"]))
    raise GeometryError(f"unknown domain type {kind!r}")
