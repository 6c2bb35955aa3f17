"""Sweeps and ensemble studies built on the estimators.

Every work unit (one eps of a sweep, one member of an ensemble) gets its own
seed derived from the base seed and its index, so adding grid points or
members leaves existing rows untouched.  The X and W seminorms of a unit
share that seed and therefore the same pair samples.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .fields import (Affine, ConvolutionConfig, CutoffInterpolant, Field, FieldError, as_skew,
                     make_bump_ensemble, make_counterexample, random_skew, unscaled)
from .geometry import Domain
from .seminorms import (Estimate, FracParams, QuadratureConfig, extension_gagliardo, extension_x_seminorm,
                        gagliardo_seminorm, hardy_integral, korn_x_seminorm, lp_norm)

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, index: int) -> int:
    """seed XOR a 64-bit hash of the work-unit index."""
    digest = hashlib.blake2b(str(index).encode(), digest_size=8).digest()
    return (seed ^ int.from_bytes(digest, "little")) & _MASK64


def default_delta(dom: Domain) -> float:
    return dom.inradius / 10.0


def default_eps_grid(delta: float) -> list[float]:
    return [delta / 2, delta / 4, delta / 8, delta / 16]


def _require_regime(prm: FracParams, allowed: tuple[str, ...], what: str):
    if prm.regime not in allowed:
        raise ValueError(f"{what} needs ps in the {' or '.join(allowed)} regime, got ps={prm.ps:g} ({prm.regime})")


# -- counterexample sweeps -----------------------------------------------------------

@dataclass(frozen=True)
class SweepRecord:
    eps: float
    seed: int
    p: float
    x: Estimate
    w: Estimate
    lp: Estimate

    @property
    def ratio_xw(self) -> float:
        return self.x.value / self.w.value

    @property
    def ratio_xl(self) -> float:
        return self.x.value / self.lp.value

    @property
    def combined(self) -> float:
        """ratio_xw^p + ratio_xl^p, formed from the raw integrals.

        This is the power of the two-ratio sum that the boundary-layer
        estimates bound by C eps^(1-ps); it tends to zero exactly when the
        plain sum does.
        """
        return self.x.raw_integral / self.w.raw_integral + self.x.raw_integral / self.lp.raw_integral

    @property
    def combined_stderr(self) -> float:
        x, w, l = self.x.raw_integral, self.w.raw_integral, self.lp.raw_integral
        return math.sqrt(((1 / w + 1 / l) * self.x.std_error) ** 2
                         + (x / w**2 * self.w.std_error) ** 2 + (x / l**2 * self.lp.std_error) ** 2)

    @property
    def value_sum(self) -> float:
        return self.ratio_xw + self.ratio_xl

    @property
    def korn_first(self) -> float:
        return self.x.value / (self.w.value + self.lp.value)

    @property
    def korn_first_stderr(self) -> float:
        return _quotient_stderr(self.x.value, self.x.value_std_error(self.p),
                                self.w.value + self.lp.value,
                                math.hypot(self.w.value_std_error(self.p), self.lp.value_std_error(self.p)))


@dataclass
class SweepResult:
    domain: Domain
    prm: FracParams
    A: np.ndarray
    delta: float
    mode: str
    records: list[SweepRecord]
    fitted_exponent: float
    fit_stderr: float
    floor_w: Estimate
    floor_lp: Estimate

    @property
    def theoretical_exponent(self) -> float:
        return 1.0 - self.prm.ps

    @property
    def eps(self) -> np.ndarray:
        return np.array([r.eps for r in self.records])


def fit_decay_exponent(points) -> tuple[float, float]:
    """Least-squares slope of log(ratio) against log(eps), with its standard error."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("exponent fit needs at least 3 points")
    eps = np.array([e for e, _ in pts], dtype=float)
    ratio = np.array([r for _, r in pts], dtype=float)
    if np.any(ratio <= 0) or np.any(eps <= 0):
        raise ValueError("exponent fit needs positive eps and ratios")
    fit = stats.linregress(np.log(eps), np.log(ratio))
    return float(fit.slope), float(fit.stderr)


def _check_grid(dom, A, delta, eps_grid):
    if dom.dim < 2:
        raise ValueError("the counterexample needs n >= 2 (no nonzero 1x1 skew matrix)")
    delta = default_delta(dom) if delta is None else float(delta)
    eps_grid = default_eps_grid(delta) if eps_grid is None else [float(e) for e in eps_grid]
    if len(eps_grid) < 1 or any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ValueError("eps grid must be strictly decreasing")
    if eps_grid[0] >= delta:
        raise ValueError(f"largest eps {eps_grid[0]} must be below delta={delta}")
    return as_skew(A), delta, eps_grid


def _interior_floors(dom, A, delta, prm, q):
    inner = dom.inner_offset(4.0 * delta)
    rigid = Affine(inner, A)
    qf = q.with_seed(derive_seed(q.seed, -1))
    return gagliardo_seminorm(rigid, inner, prm, qf), lp_norm(rigid, inner, prm.p, qf)


def _sweep(dom, prm, A, delta, eps_grid, mode, q, conv) -> SweepResult:
    A, delta, eps_grid = _check_grid(dom, A, delta, eps_grid)
    records = []
    for i, eps in enumerate(eps_grid):
        f = make_counterexample(dom, A, delta, eps, mode, conv)
        qi = q.with_seed(derive_seed(q.seed, i))
        records.append(SweepRecord(eps, qi.seed, prm.p, korn_x_seminorm(f, dom, prm, qi),
                                   gagliardo_seminorm(f, dom, prm, qi), lp_norm(f, dom, prm.p, qi)))
    floor_w, floor_lp = _interior_floors(dom, A, delta, prm, q)
    if len(records) >= 3 and all(r.combined > 0 for r in records):
        slope, se = fit_decay_exponent((r.eps, r.combined) for r in records)
    else:
        slope, se = float("nan"), float("nan")
    return SweepResult(dom, prm, A, delta, mode, records, slope, se, floor_w, floor_lp)


def counterexample_sweep(dom: Domain, prm: FracParams, A, delta: float | None = None, eps_grid=None,
                         mode: str = "cutoff", q: QuadratureConfig = QuadratureConfig(),
                         conv: ConvolutionConfig | None = None) -> SweepResult:
    """Evaluate X, W and L^p of the interpolant family on a decreasing eps grid (ps < 1).

    The fitted exponent is the log-log slope of ``SweepRecord.combined``.
    """
    _require_regime(prm, ("subcritical",), "the counterexample sweep")
    return _sweep(dom, prm, A, delta, eps_grid, mode, q, conv)


def stability_sweep(dom: Domain, prm: FracParams, A, delta: float | None = None, eps_grid=None,
                    mode: str = "cutoff", q: QuadratureConfig = QuadratureConfig(),
                    conv: ConvolutionConfig | None = None) -> SweepResult:
    """The same construction for ps > 1, where the Korn-first quotient keeps a positive floor."""
    _require_regime(prm, ("supercritical",), "the stability sweep")
    return _sweep(dom, prm, A, delta, eps_grid, mode, q, conv)


# -- ensemble studies ----------------------------------------------------------------

def _quotient_stderr(num, num_se, den, den_se):
    if num == 0 or den == 0:
        return 0.0
    return abs(num / den) * math.hypot(num_se / num, den_se / den)


@dataclass
class RatioStudyResult:
    kind: str
    quotients: np.ndarray
    stderrs: np.ndarray
    members: list[dict] = field(default_factory=list)

    @property
    def min(self) -> float:
        return float(self.quotients.min())

    @property
    def median(self) -> float:
        return float(np.median(self.quotients))

    @property
    def max(self) -> float:
        return float(self.quotients.max())

    @property
    def argmin(self) -> int:
        return int(np.argmin(self.quotients))

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.quotients))

    def summary(self) -> dict:
        return {"min": self.min, "median": self.median, "max": self.max,
                "argmin": self.argmin, "argmax": self.argmax,
                "min_stderr": float(self.stderrs[self.argmin]), "max_stderr": float(self.stderrs[self.argmax])}


def make_ratio_ensemble(dom: Domain, size: int, rng: np.random.Generator,
                        near_rigid_every: int = 4) -> list[Field]:
    """Bump fields with 1-5 bumps; every ``near_rigid_every``-th member is a cut-off rigid motion."""
    if size < 1:
        raise ValueError("ensemble size must be at least 1")
    delta = default_delta(dom)
    members: list[Field] = []
    for k in range(size):
        if near_rigid_every and k % near_rigid_every == near_rigid_every - 1:
            A = random_skew(dom.dim, rng)
            eps = delta * rng.uniform(0.25, 0.75)
            members.append(CutoffInterpolant(dom, A, eps, rng.standard_normal(dom.dim)))
        else:
            members.append(make_bump_ensemble(dom, int(rng.integers(1, 6)), rng))
    return members


def _check_member(f: Field, k: int):
    if not f.compactly_supported:
        raise FieldError(f"ensemble member {k} is not compactly supported in the domain")


def _zero_check(k, *ests):
    if all(e.raw_integral == 0 for e in ests):
        raise ValueError(f"ensemble member {k} is the zero field")


def _study(kind, dom, prm, ensemble, q, compute) -> RatioStudyResult:
    if len(ensemble) < 1:
        raise ValueError("empty ensemble")
    quots, errs, members = [], [], []
    for k, f in enumerate(ensemble):
        _check_member(f, k)
        base, _ = unscaled(f)
        qk = q.with_seed(derive_seed(q.seed, k))
        quot, err, ests = compute(base, qk, k)
        quots.append(quot)
        errs.append(err)
        members.append({"index": k, "seed": qk.seed, "quotient": quot, "stderr": err,
                        "estimates": [e.to_record(prm.p) for e in ests]})
    return RatioStudyResult(kind, np.array(quots), np.array(errs), members)


def korn_ratio_study(dom: Domain, prm: FracParams, ensemble, q: QuadratureConfig) -> RatioStudyResult:
    """x / (w + lp) per member; the ensemble minimum is an empirical 1/C (ps > 1)."""
    _require_regime(prm, ("supercritical",), "the Korn ratio study")

    def compute(f, qk, k):
        x, w, l = korn_x_seminorm(f, dom, prm, qk), gagliardo_seminorm(f, dom, prm, qk), lp_norm(f, dom, prm.p, qk)
        _zero_check(k, w, l)
        den = w.value + l.value
        err = _quotient_stderr(x.value, x.value_std_error(prm.p), den,
                               math.hypot(w.value_std_error(prm.p), l.value_std_error(prm.p)))
        return x.value / den, err, (x, w, l)

    return _study("korn_first", dom, prm, ensemble, q, compute)


def korn_second_check(dom: Domain, prm: FracParams, ensemble, q: QuadratureConfig) -> RatioStudyResult:
    """w_raw / (x_raw + lp_raw) per member; the maximum is an empirical constant."""
    _require_regime(prm, ("subcritical", "supercritical"), "the Korn second check")

    def compute(f, qk, k):
        x, w, l = korn_x_seminorm(f, dom, prm, qk), gagliardo_seminorm(f, dom, prm, qk), lp_norm(f, dom, prm.p, qk)
        _zero_check(k, w, l)
        den = x.raw_integral + l.raw_integral
        err = _quotient_stderr(w.raw_integral, w.std_error, den, math.hypot(x.std_error, l.std_error))
        return w.raw_integral / den, err, (x, w, l)

    return _study("korn_second", dom, prm, ensemble, q, compute)


def korn_hardy_check(dom: Domain, prm: FracParams, ensemble, q: QuadratureConfig) -> RatioStudyResult:
    """hardy_raw / x_raw per member (ps > 1 only)."""
    _require_regime(prm, ("supercritical",), "the Korn-Hardy check")

    def compute(f, qk, k):
        h, x = hardy_integral(f, dom, prm, qk), korn_x_seminorm(f, dom, prm, qk)
        _zero_check(k, h, x)
        if x.raw_integral == 0:
            raise ValueError(f"ensemble member {k} has a vanishing X seminorm")
        err = _quotient_stderr(h.raw_integral, h.std_error, x.raw_integral, x.std_error)
        return h.raw_integral / x.raw_integral, err, (h, x)

    return _study("korn_hardy", dom, prm, ensemble, q, compute)


def extension_equivalence_check(f: Field, dom: Domain, prm: FracParams, q: QuadratureConfig) -> dict:
    """Whole-space over interior seminorm ratios for the zero extension (ps > 1)."""
    _require_regime(prm, ("supercritical",), "the extension check")
    _check_member(f, 0)
    base, _ = unscaled(f)
    g, x = gagliardo_seminorm(base, dom, prm, q), korn_x_seminorm(base, dom, prm, q)
    if g.raw_integral == 0:
        raise ValueError("extension check needs a nonzero field")
    eg, ex = extension_gagliardo(base, dom, prm, q), extension_x_seminorm(base, dom, prm, q)
    p = prm.p
    out = {
        "w_ratio": eg.value / g.value,
        "w_ratio_stderr": _quotient_stderr(eg.value, eg.value_std_error(p), g.value, g.value_std_error(p)),
        "w_tail_share": 1.0 - g.raw_integral / eg.raw_integral,
        "x_ratio": ex.value / x.value if x.value > 0 else float("inf"),
        "x_ratio_stderr": _quotient_stderr(ex.value, ex.value_std_error(p), x.value, x.value_std_error(p)),
        "x_tail_share": 1.0 - x.raw_integral / ex.raw_integral if ex.raw_integral > 0 else 0.0,
        "estimates": [e.to_record(p) for e in (g, eg, x, ex)],
    }
    return out
