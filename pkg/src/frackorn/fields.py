"""Vector fields on a domain: rigid motions, the boundary-layer counterexample
family, and smooth bump ensembles.

All fields evaluate on batches ``x`` of shape ``(m, n)`` and extend by zero
outside their domain.  Fields whose interior part is an infinitesimal rigid
motion report their pair increments through the skew bilinear form, so that
``(u(x) - u(y)) . (x - y)`` vanishes exactly (not just to rounding) wherever
both points see the rigid motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import Domain, sample_uniform, sphere_area, sphere_rule


class FieldError(ValueError):
    """Raised for inadmissible field parameters."""


# -- mollifier -----------------------------------------------------------------

def _bump_profile(t):
    t = np.asarray(t, dtype=float)
    inside = t < 1.0
    out = np.zeros_like(t)
    tt = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - tt * tt))
    return out


@lru_cache(maxsize=None)
def mollifier_constant(n: int) -> float:
    """c_n with c_n * exp(-1/(1-|z|^2)) of unit mass on the unit ball of R^n."""
    # the profile is flat to all orders at t=1, so a split Gauss-Legendre rule
    # converges quickly on both halves
    t, g = np.polynomial.legendre.leggauss(200)
    mass = 0.0
    for a, b in ((0.0, 0.5), (0.5, 0.9), (0.9, 1.0)):
        tt = a + (b - a) * (t + 1.0) / 2.0
        mass += (b - a) / 2.0 * np.sum(g * _bump_profile(tt) * tt ** (n - 1))
    return 1.0 / (sphere_area(n) * mass)


def mollifier_value(eps: float, z) -> np.ndarray | float:
    """Standard radial mollifier eta_eps(z) = eps^-n eta(z / eps), support B_eps(0)."""
    if not eps > 0:
        raise FieldError("mollifier width must be positive")
    za = np.asarray(z, dtype=float)
    single = za.ndim == 1
    zb = za[None, :] if single else za
    n = zb.shape[-1]
    t = np.sqrt(np.sum(zb * zb, axis=-1)) / eps
    val = mollifier_constant(n) * _bump_profile(t) / eps**n
    return float(val[0]) if single else val


@dataclass(frozen=True)
class ConvolutionConfig:
    """Polar rule on B_eps(0): Gauss-Legendre in radius, symmetric angular nodes."""

    radial_nodes: int = 16
    angular_nodes: int = 32

    def __post_init__(self):
        if self.radial_nodes < 4 or self.angular_nodes < 4:
            raise FieldError("convolution rules need at least 4 nodes per direction")

    def rule(self, n: int):
        return _conv_rule(n, self.radial_nodes, self.angular_nodes)


@lru_cache(maxsize=None)
def _conv_rule(n: int, radial: int, angular: int):
    t, g = np.polynomial.legendre.leggauss(radial)
    t = (t + 1.0) / 2.0
    g = g / 2.0
    dirs, a = sphere_rule(n, angular)
    # mass of the unnormalized profile under this very rule: dividing by it
    # makes the discrete mollifier reproduce constants exactly
    mass = float(np.sum(a) * np.sum(g * _bump_profile(t) * t ** (n - 1)))
    return t, g, dirs, a, mass


# -- skew matrices ---------------------------------------------------------------

def as_skew(A) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim == 1:
        k = int(round(math.sqrt(A.size)))
        if k * k != A.size:
            raise FieldError(f"skew matrix needs a square number of entries, got {A.size}")
        A = A.reshape(k, k)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise FieldError("skew matrix must be square")
    if not np.all(A + A.T == 0):
        raise FieldError("matrix is not skew-symmetric (A + A^T != 0)")
    A.setflags(write=False)
    return A


def skew_form(A: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise a . (A b) for skew A, summed over i < j.

    ``skew_form(A, a, a)`` is exactly zero in floating point because every
    term is ``a_i a_j - a_j a_i``.
    """
    n = A.shape[0]
    out = np.zeros(a.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            if A[i, j] != 0:
                out += A[i, j] * (a[:, i] * b[:, j] - a[:, j] * b[:, i])
    return out


def random_skew(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n))
    upper = np.triu(g, 1)
    return as_skew(upper - upper.T)


# -- fields --------------------------------------------------------------------

class Field:
    """Common evaluation surface.

    Subclasses define ``_eval_inside``; points outside the domain map to zero.
    """

    domain: Domain
    compactly_supported = False

    @property
    def dim(self) -> int:
        return self.domain.dim

    def evaluate(self, x):
        xa = np.asarray(x, dtype=float)
        single = xa.ndim == 1
        xb = xa[None, :] if single else xa
        out = np.zeros_like(xb)
        d = self.domain._distance(xb)
        inside = d > 0
        if np.any(inside):
            out[inside] = self._eval_inside(xb[inside], d[inside])
        return out[0] if single else out

    def increments(self, x, y, d, r, e):
        """``(u(x) - u(y), (u(x) - u(y)) . e)`` for points inside the domain."""
        du = self._eval_inside(x, self.domain._distance(x)) - self._eval_inside(y, self.domain._distance(y))
        return du, np.sum(du * e, axis=1)

    def sampling_hint(self):
        """(boundary band width, local length scale) for the importance sampler."""
        return None, None


@dataclass(frozen=True, eq=False)
class Affine(Field):
    """u(x) = A x + b restricted to the domain."""

    domain: Domain
    A: np.ndarray
    b: np.ndarray = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float).reshape(self.domain.dim, self.domain.dim)
        b = np.zeros(self.domain.dim) if self.b is None else np.array(self.b, dtype=float).reshape(-1)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def _eval_inside(self, x, dist):
        return x @ self.A.T + self.b

    def increments(self, x, y, d, r, e):
        du = d @ self.A.T
        sym = 0.5 * (self.A + self.A.T)
        return du, r * np.einsum("mi,ij,mj->m", e, sym, e)

    def to_config(self) -> dict:
        return {"field": "affine", "skew": tuple(self.A.ravel()), "shift": tuple(self.b)}


class _SkewCore(Field):
    """Fields of the form u(x) = A m(x) + c(x) b with A skew.

    Where ``m(x) = x`` and ``c(x) = 1`` at both points of a pair the projected
    increment is exactly zero.
    """

    A: np.ndarray
    b: np.ndarray
    eps: float

    def _position(self, x, dist):
        raise NotImplementedError

    def _eval_inside(self, x, dist):
        m, c = self._position(x, dist)
        return m @ self.A.T + c[:, None] * self.b

    def increments(self, x, y, d, r, e):
        mx, cx = self._position(x, self.domain._distance(x))
        my, cy = self._position(y, self.domain._distance(y))
        dm = mx - my
        dc = cx - cy
        du = dm @ self.A.T + dc[:, None] * self.b
        proj = skew_form(self.A, d, dm) + dc * (d @ self.b)
        return du, proj / r

    def sampling_hint(self):
        return 4.0 * self.eps, 4.0 * self.eps

    compactly_supported = True


def _check_interpolant(domain, A, eps):
    A = as_skew(A)
    if A.shape[0] != domain.dim:
        raise FieldError(f"skew matrix is {A.shape[0]}x{A.shape[0]} but the domain has n={domain.dim}")
    if not eps > 0:
        raise FieldError("eps must be positive")
    if 4.0 * eps >= domain.inradius:
        raise FieldError(f"eps={eps} leaves no affine core (4 eps >= inradius {domain.inradius})")
    return A


@dataclass(frozen=True, eq=False)
class RawInterpolant(_SkewCore):
    """A x on the inner offset at depth 3 eps, zero on the rest of the domain."""

    domain: Domain
    A: np.ndarray
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "A", _check_interpolant(self.domain, self.A, self.eps))
        object.__setattr__(self, "b", np.zeros(self.domain.dim))

    def _position(self, x, dist):
        c = (dist > 3.0 * self.eps).astype(float)
        return x * c[:, None], np.zeros(len(x))

    def to_config(self) -> dict:
        return {"field": "counterexample", "mode": "raw", "eps": self.eps, "skew": tuple(self.A.ravel())}


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True, eq=False)
class CutoffInterpolant(_SkewCore):
    """chi(dist(x)) (A x + b) with a C^1 ramp from 0 at depth 2 eps to 1 at 4 eps.

    The ramp has slope at most 3/(4 eps).
    """

    domain: Domain
    A: np.ndarray
    eps: float
    b: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "A", _check_interpolant(self.domain, self.A, self.eps))
        b = np.zeros(self.domain.dim) if self.b is None else np.array(self.b, dtype=float).reshape(-1)
        if b.shape != (self.domain.dim,):
            raise FieldError("shift vector has the wrong dimension")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    def _position(self, x, dist):
        chi = smoothstep((dist - 2.0 * self.eps) / (2.0 * self.eps))
        return x * chi[:, None], chi

    def to_config(self) -> dict:
        return {"field": "counterexample", "mode": "cutoff", "eps": self.eps,
                "skew": tuple(self.A.ravel()), "shift": tuple(self.b)}


@dataclass(frozen=True, eq=False)
class MollifiedInterpolant(_SkewCore):
    """The raw interpolant convolved with eta_eps.

    On each ray of the polar rule the indicator of the depth-3eps offset (a
    convex set) is integrated exactly over its chord, with the Gauss-Legendre
    nodes mapped onto the chord.  The result is continuous in ``x``; nodes
    that jump in and out of the offset would make the discrete field
    discontinuous and its fractional seminorms infinite.
    """

    domain: Domain
    A: np.ndarray
    eps: float
    conv: ConvolutionConfig = field(default_factory=ConvolutionConfig)

    def __post_init__(self):
        object.__setattr__(self, "A", _check_interpolant(self.domain, self.A, self.eps))
        object.__setattr__(self, "b", np.zeros(self.domain.dim))
        object.__setattr__(self, "_core", self.domain.inner_offset(3.0 * self.eps))

    def convolve(self, x) -> np.ndarray:
        """Smoothed position m(x) = (1_{core} id) * eta_eps evaluated by the full rule."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t, g, dirs, a, mass = self.conv.rule(self.dim)
        eps = self.eps
        out = np.empty_like(x)
        chunk = 2048
        for s in range(0, len(x), chunk):
            xs = x[s:s + chunk]
            # chord of each ray inside the core, in units of eps
            t0, t1 = self._core._ray_interval(xs[:, None, :], dirs[None, :, :])
            lo = np.clip(np.nan_to_num(t0, nan=0.0) / eps, 0.0, 1.0)
            hi = np.clip(np.nan_to_num(t1, nan=0.0) / eps, 0.0, 1.0)
            hi = np.maximum(hi, lo)
            span = hi - lo
            tau = lo[..., None] + span[..., None] * t[None, None, :]
            wts = span[..., None] * g * _bump_profile(tau) * tau ** (self.dim - 1)
            wts = wts * a[None, :, None] / mass
            w0 = wts.sum(axis=(1, 2))
            w1 = np.einsum("mkj,mkj,kn->mn", wts, tau, dirs)
            out[s:s + chunk] = xs * w0[:, None] + eps * w1
        return out

    def _position(self, x, dist):
        m = np.zeros_like(x)
        core = dist > 4.0 * self.eps
        m[core] = x[core]
        band = (dist > 2.0 * self.eps) & ~core
        if np.any(band):
            m[band] = self.convolve(x[band])
        return m, np.zeros(len(x))

    def to_config(self) -> dict:
        return {"field": "counterexample", "mode": "mollified", "eps": self.eps,
                "skew": tuple(self.A.ravel()),
                "conv_radial": self.conv.radial_nodes, "conv_angular": self.conv.angular_nodes}


@dataclass(frozen=True)
class Bump:
    center: tuple[float, ...]
    radius: float
    amplitude: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class BumpEnsemble(Field):
    """Sum of amplitude_k * eta(|x - c_k| / r_k), eta the unit-ball mollifier profile."""

    domain: Domain
    bumps: tuple[Bump, ...]

    compactly_supported = True

    def __post_init__(self):
        if not self.bumps:
            raise FieldError("bump ensemble needs at least one bump")
        bumps = tuple(Bump(tuple(map(float, b.center)), float(b.radius), tuple(map(float, b.amplitude)))
                      for b in self.bumps)
        for b in bumps:
            if len(b.center) != self.domain.dim or len(b.amplitude) != self.domain.dim:
                raise FieldError("bump center/amplitude dimension mismatch")
            if not b.radius > 0:
                raise FieldError("bump radius must be positive")
            if not self.domain._distance(np.array([b.center]))[0] > b.radius:
                raise FieldError(f"bump at {b.center} with radius {b.radius} is not compactly inside the domain")
        object.__setattr__(self, "bumps", bumps)
        object.__setattr__(self, "_c", np.array([b.center for b in bumps]))
        object.__setattr__(self, "_r", np.array([b.radius for b in bumps]))
        object.__setattr__(self, "_v", np.array([b.amplitude for b in bumps]))

    def _eval_inside(self, x, dist):
        cn = mollifier_constant(self.dim)
        out = np.zeros_like(x)
        for c, r, v in zip(self._c, self._r, self._v):
            diff = x - c
            t = np.sqrt(np.sum(diff * diff, axis=1)) / r
            out += cn * _bump_profile(t)[:, None] * v
        return out

    def sampling_hint(self):
        return None, float(self._r.min())

    def to_config(self) -> dict:
        return {"field": "bumps", "bumps": [(b.center, b.radius, b.amplitude) for b in self.bumps]}


@dataclass(frozen=True, eq=False)
class Scaled(Field):
    """``factor`` times another field; estimators integrate the base and rescale."""

    base: Field
    factor: float

    @property
    def domain(self):
        return self.base.domain

    @property
    def compactly_supported(self):
        return self.base.compactly_supported

    def evaluate(self, x):
        return self.factor * self.base.evaluate(x)

    def _eval_inside(self, x, dist):
        return self.factor * self.base._eval_inside(x, dist)

    def increments(self, x, y, d, r, e):
        du, proj = self.base.increments(x, y, d, r, e)
        return self.factor * du, self.factor * proj

    def sampling_hint(self):
        return self.base.sampling_hint()


def unscaled(f: Field) -> tuple[Field, float]:
    factor = 1.0
    while isinstance(f, Scaled):
        factor *= f.factor
        f = f.base
    return f, factor


# -- constructors --------------------------------------------------------------

def make_counterexample(dom: Domain, A, delta: float, eps: float, mode: str = "cutoff",
                        conv: ConvolutionConfig | None = None) -> Field:
    """Rigid motion A x deep inside, zero near the boundary, transition of width ~eps."""
    if dom.dim < 2:
        raise FieldError("no nonzero skew matrix exists for n = 1")
    A = as_skew(A)
    if not np.any(A):
        raise FieldError("counterexample needs a nonzero skew matrix")
    if not delta > 0 or 5.0 * delta >= dom.inradius:
        raise FieldError(f"delta={delta} must satisfy 0 < 5 delta < inradius={dom.inradius}")
    if not 0 < eps < delta:
        raise FieldError(f"eps={eps} must lie in (0, delta={delta})")
    if mode == "cutoff":
        return CutoffInterpolant(dom, A, eps)
    if mode == "mollified":
        return MollifiedInterpolant(dom, A, eps, conv or ConvolutionConfig())
    if mode == "raw":
        return RawInterpolant(dom, A, eps)
    raise FieldError(f"unknown interpolant mode {mode!r}")


def random_bump(dom: Domain, rng: np.random.Generator, max_radius: float | None = None) -> Bump:
    cap = dom.inradius / 2.0 if max_radius is None else max_radius
    while True:
        c = sample_uniform(dom, rng)
        room = dom._distance(c[None, :])[0]
        if room > 0.1 * dom.inradius:
            break
    radius = min(cap, room) * rng.uniform(0.3, 0.9)
    amp = rng.standard_normal(dom.dim)
    return Bump(tuple(c), radius, tuple(amp))


def make_bump_ensemble(dom: Domain, count: int, rng: np.random.Generator) -> BumpEnsemble:
    """``count`` bumps with random centers, radii and amplitudes, supports inside ``dom``."""
    if count < 1:
        raise FieldError("bump count must be at least 1")
    return BumpEnsemble(dom, tuple(random_bump(dom, rng) for _ in range(count)))


def centered_bump(dom: Domain, radius: float, amplitude=None) -> BumpEnsemble:
    lo, hi = dom.bounding_box()
    c = tuple((lo + hi) / 2.0)
    amp = amplitude if amplitude is not None else (1.0,) + (0.0,) * (dom.dim - 1)
    return BumpEnsemble(dom, (Bump(c, radius, tuple(amp)),))
