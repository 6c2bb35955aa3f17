"""Quadrature estimators for the fractional functionals.

Pair functionals (Gagliardo and X seminorms) integrate over Omega x Omega;
single functionals (L^p norm, Hardy integral, extension tails) over Omega.
Monte Carlo estimators split the sample budget into a fixed number of shards,
each driven by its own ``SeedSequence`` child, and combine shard sums in index
order, so results depend on ``(inputs, seed, shards)`` and never on how many
threads execute the shards.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .fields import Field, unscaled
from .geometry import Domain, collar_volume, sample_collar, sample_uniform, sphere_area, sphere_rule

METHODS = ("mc_uniform", "mc_importance", "tensor_grid")
FUNCTIONALS = ("gagliardo", "korn_x", "lp", "hardy", "extension_gagliardo", "extension_x")

_CHUNK = 1 << 15
_PAIR_STREAM, _TAIL_STREAM, _SINGLE_STREAM = 0, 1, 2


class IntegrandBlowUp(ArithmeticError):
    """A quadrature sample produced a non-finite integrand value."""


@dataclass(frozen=True)
class FracParams:
    s: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "p", float(self.p))
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not (self.p >= 1.0 and math.isfinite(self.p)):
            raise ValueError(f"p must lie in [1, inf), got {self.p}")

    @property
    def ps(self) -> float:
        return self.p * self.s

    @property
    def regime(self) -> str:
        if abs(self.ps - 1.0) <= 1e-12:
            return "borderline"
        return "subcritical" if self.ps < 1.0 else "supercritical"


@dataclass(frozen=True)
class QuadratureConfig:
    method: str = "mc_importance"
    samples: int = 100_000
    seed: int = 0
    shards: int = 8
    grid: int = 128
    angular_nodes: int = 64
    min_pair_separation: float | None = None
    # execution only: never affects results
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.method != "tensor_grid" and self.samples < 1000:
            raise ValueError("Monte Carlo methods need at least 1000 samples")
        if self.shards < 1:
            raise ValueError("shard count must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.method == "tensor_grid" and not 2 <= self.grid <= 256:
            raise ValueError("tensor grid resolution must lie in [2, 256]")
        if self.angular_nodes < 4:
            raise ValueError("angular rule needs at least 4 nodes")
        if self.workers < 1:
            raise ValueError("worker count must be at least 1")

    def with_seed(self, seed: int) -> "QuadratureConfig":
        d = asdict(self)
        d["seed"] = seed
        return QuadratureConfig(**d)

    def separation(self, dom: Domain) -> float:
        if self.min_pair_separation is None:
            return 1e-14 * dom.diameter
        return self.min_pair_separation


@dataclass(frozen=True)
class Estimate:
    functional: str
    value: float
    raw_integral: float
    std_error: float
    samples: int
    method: str
    seed: int

    def value_std_error(self, p: float) -> float:
        """Delta-method error of the p-th root."""
        if self.raw_integral <= 0:
            return 0.0
        return self.std_error * self.value ** (1.0 - p) / p

    def to_record(self, p: float | None = None) -> dict:
        rec = {"functional": self.functional, "value": self.value, "raw_integral": self.raw_integral,
               "std_error": self.std_error, "samples": self.samples, "method": self.method, "seed": self.seed}
        if p is not None:
            rec["value_std_error"] = self.value_std_error(p)
        return rec


def _root(raw: float, p: float) -> float:
    return raw ** (1.0 / p) if raw > 0 else 0.0


def _pow(base: np.ndarray, p: float) -> np.ndarray:
    if float(p).is_integer():
        return base ** int(p)
    out = np.zeros_like(base)
    pos = base > 0
    out[pos] = np.exp(p * np.log(base[pos]))
    return out


def _make_estimate(name, raw, se, q, p, samples=None) -> Estimate:
    return Estimate(name, _root(raw, p), raw, se, q.samples if samples is None else samples, q.method, q.seed)


def _rescale(est: Estimate, factor: float, p: float) -> Estimate:
    if factor == 1.0:
        return est
    c = abs(factor)
    cp = c**p
    return Estimate(est.functional, c * est.value, cp * est.raw_integral, cp * est.std_error,
                    est.samples, est.method, est.seed)


# -- sampling ------------------------------------------------------------------

class _Sampler:
    """Point and pair sampler for one (field, domain, exponent) triple.

    Uniform mode draws x, y independently and uniformly on Omega.  Importance
    mode draws x from a mixture of the uniform law and the uniform law on the
    field's boundary band, then y = x + r w with w uniform on the sphere and r
    from a mixture of power laws r^(alpha-1) on (0, diam) and on (0, L).  With
    alpha = p(1 - s) the near-diagonal singularity of Lipschitz integrands is
    cancelled.  Pair weights use the symmetrised density (q(x) + q(y)) / 2,
    which is unbiased because both integrands are symmetric in (x, y).
    Fields without a hint reduce to the plain scheme (uniform x, single
    power law in r).
    """

    def __init__(self, f: Field, dom: Domain, alpha: float, importance: bool):
        self.dom = dom
        self.n = dom.dim
        self.vol = dom.volume
        self.diam = dom.diameter
        self.alpha = alpha
        self.importance = importance
        band, length = f.sampling_hint() if importance else (None, None)
        if band is not None and not band < dom.inradius:
            band = None
        if length is not None and not length < self.diam:
            length = None
        self.band = band
        self.band_vol = collar_volume(dom, band) if band is not None else None
        self.lam_x = 0.5 if band is not None else 1.0
        self.length = length
        self.lam_r = 0.5 if length is not None else 1.0

    def density(self, x, dist=None):
        q = np.full(len(x), self.lam_x / self.vol)
        if self.band is not None:
            if dist is None:
                dist = self.dom._distance(x)
            q = q + (1.0 - self.lam_x) * (dist < self.band) / self.band_vol
        return q

    def points(self, rng, m):
        if self.band is None:
            x = sample_uniform(self.dom, rng, m)
            return x, np.full(m, 1.0 / self.vol)
        pick = rng.random(m) < self.lam_x
        k = int(pick.sum())
        x = np.empty((m, self.n))
        x[pick] = sample_uniform(self.dom, rng, k)
        x[~pick] = sample_collar(self.dom, self.band, rng, m - k)
        return x, self.density(x)

    def _radii(self, rng, m):
        a = self.alpha
        u = rng.random(m)
        r = self.diam * u ** (1.0 / a)
        if self.length is not None:
            local = rng.random(m) >= self.lam_r
            r[local] = self.length * u[local] ** (1.0 / a)
            dens = a * r ** (a - 1.0) * (self.lam_r / self.diam**a
                                         + (1.0 - self.lam_r) * (r < self.length) / self.length**a)
        else:
            dens = a * r ** (a - 1.0) / self.diam**a
        return r, dens

    def _directions(self, rng, m):
        if self.n == 1:
            return np.where(rng.random(m) < 0.5, -1.0, 1.0)[:, None]
        g = rng.standard_normal((m, self.n))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def pairs(self, rng, m):
        """Return x, y, jac with E[g(x, y) jac] equal to the pair integral of g."""
        if not self.importance:
            x = sample_uniform(self.dom, rng, m)
            y = sample_uniform(self.dom, rng, m)
            return x, y, np.full(m, self.vol**2)
        x, qx = self.points(rng, m)
        r, gr = self._radii(rng, m)
        y = x + r[:, None] * self._directions(rng, m)
        dy = self.dom._distance(y)
        inside = dy > 0
        qy = self.density(y, dy)
        qsym = 0.5 * (qx + qy)
        shell = sphere_area(self.n) * r ** (self.n - 1)
        jac = np.where(inside, shell / (qsym * gr), 0.0)
        return x, y, jac


def _shard_counts(total: int, shards: int) -> list[int]:
    base, extra = divmod(total, shards)
    return [base + (1 if k < extra else 0) for k in range(shards)]


def _run_shards(q: QuadratureConfig, stream: int, work) -> tuple[float, float, int]:
    """Apply ``work(rng, count) -> (sum, sumsq)`` per shard and combine in order."""
    counts = _shard_counts(q.samples, q.shards)
    seeds = [np.random.SeedSequence(q.seed, spawn_key=(stream, k)) for k in range(q.shards)]

    def job(k):
        rng = np.random.Generator(np.random.PCG64(seeds[k]))
        return work(rng, counts[k])

    if q.workers > 1 and q.shards > 1:
        with ThreadPoolExecutor(max_workers=q.workers) as ex:
            parts = list(ex.map(job, range(q.shards)))
    else:
        parts = [job(k) for k in range(q.shards)]
    total = sumsq = 0.0
    for s, ss in parts:
        total += s
        sumsq += ss
    return total, sumsq, q.samples


def _mean_and_error(total, sumsq, count):
    mean = total / count
    var = max(sumsq / count - mean * mean, 0.0) * count / max(count - 1, 1)
    return mean, math.sqrt(var / count)


def _check_finite(vals, what):
    if not np.all(np.isfinite(vals)):
        raise IntegrandBlowUp(f"non-finite {what} integrand sample")


def _pair_values(f: Field, kind: str, x, y, jac, prm: FracParams, sep: float):
    """Weighted pair integrand values; ``kind`` is 'w' or 'x'."""
    n = x.shape[1]
    d = x - y
    r = np.sqrt(np.sum(d * d, axis=1))
    ok = (jac > 0) & (r >= sep)
    vals = np.zeros(len(x))
    if not np.any(ok):
        return vals, r
    d, rr = d[ok], r[ok]
    e = d / rr[:, None]
    du, proj = f.increments(x[ok], y[ok], d, rr, e)
    a = np.sqrt(np.sum(du * du, axis=1))
    if kind == "x":
        # |du . e| <= |du| holds exactly; the clamp only removes rounding
        a = np.minimum(np.abs(proj), a)
    kern = np.exp(-(n + prm.ps) * np.log(rr))
    vals[ok] = _pow(a, prm.p) * kern * jac[ok]
    _check_finite(vals, "pair")
    return vals, r


def _pair_mc(f, dom, prm, q, kind):
    sampler = _Sampler(f, dom, prm.p * (1.0 - prm.s), q.method == "mc_importance")
    sep = q.separation(dom)

    def work(rng, count):
        s = ss = 0.0
        for start in range(0, count, _CHUNK):
            m = min(_CHUNK, count - start)
            x, y, jac = sampler.pairs(rng, m)
            vals, _ = _pair_values(f, kind, x, y, jac, prm, sep)
            s += float(vals.sum())
            ss += float((vals * vals).sum())
        return s, ss

    return _mean_and_error(*_run_shards(q, _PAIR_STREAM, work))


def pair_sample_diagnostics(f, dom, prm, q, kind="w", count=None):
    """Separations and weighted integrand samples of the first shard.

    Exposed for checking that near-diagonal samples carry bounded weight.
    """
    base, _ = unscaled(f)
    sampler = _Sampler(base, dom, prm.p * (1.0 - prm.s), q.method == "mc_importance")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(q.seed, spawn_key=(_PAIR_STREAM, 0))))
    count = count or _shard_counts(q.samples, q.shards)[0]
    rs, vs = [], []
    for start in range(0, count, _CHUNK):
        m = min(_CHUNK, count - start)
        x, y, jac = sampler.pairs(rng, m)
        vals, r = _pair_values(base, kind, x, y, jac, prm, q.separation(dom))
        rs.append(r)
        vs.append(vals)
    return np.concatenate(rs), np.concatenate(vs)


def _grid_cells(dom: Domain, res: int):
    lo, hi = dom.bounding_box()
    h = (hi - lo) / res
    axes = [lo[i] + h[i] * (np.arange(res) + 0.5) for i in range(dom.dim)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dom.dim)
    centers = centers[dom._distance(centers) > 0]
    return centers, float(np.prod(h))


def _pair_grid(f, dom, prm, q, kind):
    if dom.dim > 2:
        raise ValueError("tensor grid quadrature is limited to n <= 2")
    cells, cell_vol = _grid_cells(dom, q.grid)
    m = len(cells)
    sep = q.separation(dom)
    rows = max(1, (1 << 20) // m)
    idx = np.arange(m)
    total = 0.0
    for i0 in range(0, m, rows):
        i1 = min(m, i0 + rows)
        ii = np.repeat(np.arange(i0, i1), m)
        jj = np.tile(idx, i1 - i0)
        keep = ii != jj
        x, y = cells[ii[keep]], cells[jj[keep]]
        jac = np.full(len(x), cell_vol * cell_vol)
        vals, _ = _pair_values(f, kind, x, y, jac, prm, sep)
        total += float(vals.sum())
    return total, 0.0


def _pair_estimate(name, kind, f, dom, prm, q):
    _check_domain(f, dom)
    base, factor = unscaled(f)
    if q.method == "tensor_grid":
        raw, se = _pair_grid(base, dom, prm, q, kind)
        est = _make_estimate(name, raw, se, q, prm.p, samples=q.grid)
    else:
        raw, se = _pair_mc(base, dom, prm, q, kind)
        est = _make_estimate(name, raw, se, q, prm.p)
    return _rescale(est, factor, prm.p)


def _check_domain(f: Field, dom: Domain):
    if f.domain != dom:
        raise ValueError("field is defined on a different domain than the one integrated over")


def gagliardo_seminorm(f: Field, dom: Domain, prm: FracParams, q: QuadratureConfig) -> Estimate:
    """[u]_{W^{s,p}}: double integral of |u(x)-u(y)|^p / |x-y|^(n+ps)."""
    return _pair_estimate("gagliardo", "w", f, dom, prm, q)


def korn_x_seminorm(f: Field, dom: Domain, prm: FracParams, q: QuadratureConfig) -> Estimate:
    """[u]_{X^{s,p}}: double integral of |(u(x)-u(y)).(x-y)|^p / |x-y|^(n+ps+p).

    Shares its pair samples with :func:`gagliardo_seminorm` at equal seeds,
    so the returned value never exceeds the Gagliardo value.
    """
    return _pair_estimate("korn_x", "x", f, dom, prm, q)


# -- single integrals ------------------------------------------------------------

def _single_estimate(name, f, dom, p, q, integrand, stream=_SINGLE_STREAM):
    """Integral over Omega of ``integrand(x, u(x), dist(x))``."""
    _check_domain(f, dom)
    base, factor = unscaled(f)
    if q.method == "tensor_grid":
        if dom.dim > 2:
            raise ValueError("tensor grid quadrature is limited to n <= 2")
        cells, cell_vol = _grid_cells(dom, q.grid)
        total = 0.0
        for s in range(0, len(cells), _CHUNK):
            x = cells[s:s + _CHUNK]
            dist = dom._distance(x)
            vals = integrand(x, base._eval_inside(x, dist), dist) * cell_vol
            _check_finite(vals, name)
            total += float(vals.sum())
        est = Estimate(name, _root(total, p), total, 0.0, q.grid, q.method, q.seed)
        return _rescale(est, factor, p)

    sampler = _Sampler(base, dom, 1.0, q.method == "mc_importance")

    def work(rng, count):
        s = ss = 0.0
        for start in range(0, count, _CHUNK):
            m = min(_CHUNK, count - start)
            x, qx = sampler.points(rng, m)
            dist = dom._distance(x)
            vals = integrand(x, base._eval_inside(x, dist), dist) / qx
            _check_finite(vals, name)
            s += float(vals.sum())
            ss += float((vals * vals).sum())
        return s, ss

    raw, se = _mean_and_error(*_run_shards(q, stream, work))
    return _rescale(_make_estimate(name, raw, se, q, p), factor, p)


def _norm_pow(u, p):
    return _pow(np.sqrt(np.sum(u * u, axis=1)), p)


def lp_norm(f: Field, dom: Domain, p: float, q: QuadratureConfig) -> Estimate:
    """||u||_{L^p(Omega)}."""
    return _single_estimate("lp", f, dom, p, q, lambda x, u, dist: _norm_pow(u, p))


def hardy_integral(f: Field, dom: Domain, prm: FracParams, q: QuadratureConfig) -> Estimate:
    """Integral of |u|^p / dist(x, boundary)^(ps); quotients use ``raw_integral``."""
    def integrand(x, u, dist):
        return _norm_pow(u, prm.p) * np.exp(-prm.ps * np.log(dist))
    return _single_estimate("hardy", f, dom, prm.p, q, integrand)


# -- extension by zero -----------------------------------------------------------

def _exit_distances(dom: Domain, x: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    _, t1 = dom._ray_interval(x[:, None, :], dirs[None, :, :])
    return t1


def tail_kernel(dom: Domain, x, ps: float, angular_nodes: int = 64):
    """kappa(x) = integral over the complement of |x-y|^-(n+ps) dy.

    Radial integration from the exit distance rho(x, w) to infinity leaves
    (1/ps) times the sphere integral of rho^-ps.
    """
    xa = np.atleast_2d(np.asarray(x, dtype=float))
    if not np.all(dom._distance(xa) > 0):
        raise ValueError("tail kernel needs points inside the domain")
    dirs, wts = sphere_rule(dom.dim, angular_nodes)
    rho = _exit_distances(dom, xa, dirs)
    mean = np.average(np.exp(-ps * np.log(rho)), axis=1, weights=wts)
    out = sphere_area(dom.dim) * mean / ps
    return float(out[0]) if np.ndim(x) == 1 else out


def _tail_integrand(dom, prm, q, kind):
    dirs, wts = sphere_rule(dom.dim, q.angular_nodes)
    area = sphere_area(dom.dim)

    def integrand(x, u, dist):
        out = np.zeros(len(x))
        nz = np.any(u != 0, axis=1)
        if not np.any(nz):
            return out
        rho_pow = np.exp(-prm.ps * np.log(_exit_distances(dom, x[nz], dirs)))
        if kind == "w":
            ang = np.average(rho_pow, axis=1, weights=wts)
            out[nz] = _norm_pow(u[nz], prm.p) * area * ang / prm.ps
        else:
            proj = np.abs(u[nz] @ dirs.T)
            ang = np.average(_pow(proj, prm.p) * rho_pow, axis=1, weights=wts)
            out[nz] = area * ang / prm.ps
        return out

    return integrand


def _require_compact(f: Field):
    if not f.compactly_supported:
        raise ValueError("extension by zero needs a field compactly supported in the domain")


def extension_tail(f, dom, prm, q, kind="w") -> Estimate:
    """Complement part T: integral over Omega of |u|^p kappa(x) (or its projected form)."""
    _require_compact(f)
    name = "tail_w" if kind == "w" else "tail_x"
    return _single_estimate(name, f, dom, prm.p, q, _tail_integrand(dom, prm, q, kind), stream=_TAIL_STREAM)


def _extension(name, kind, f, dom, prm, q):
    _require_compact(f)
    inner = (gagliardo_seminorm if kind == "w" else korn_x_seminorm)(f, dom, prm, q)
    tail = extension_tail(f, dom, prm, q, kind)
    raw = inner.raw_integral + 2.0 * tail.raw_integral
    se = math.sqrt(inner.std_error**2 + 4.0 * tail.std_error**2)
    return Estimate(name, _root(raw, prm.p), raw, se, inner.samples, q.method, q.seed)


def extension_gagliardo(f: Field, dom: Domain, prm: FracParams, q: QuadratureConfig) -> Estimate:
    """Whole-space Gagliardo seminorm of the zero extension: interior part plus 2 T."""
    return _extension("extension_gagliardo", "w", f, dom, prm, q)


def extension_x_seminorm(f: Field, dom: Domain, prm: FracParams, q: QuadratureConfig) -> Estimate:
    return _extension("extension_x", "x", f, dom, prm, q)


def estimate(functional: str, f: Field, dom: Domain, prm: FracParams, q: QuadratureConfig) -> Estimate:
    """Dispatch by functional name."""
    if functional == "gagliardo":
        return gagliardo_seminorm(f, dom, prm, q)
    if functional == "korn_x":
        return korn_x_seminorm(f, dom, prm, q)
    if functional == "lp":
        return lp_norm(f, dom, prm.p, q)
    if functional == "hardy":
        return hardy_integral(f, dom, prm, q)
    if functional == "extension_gagliardo":
        return extension_gagliardo(f, dom, prm, q)
    if functional == "extension_x":
        return extension_x_seminorm(f, dom, prm, q)
    raise ValueError(f"unknown functional {functional!r}")
