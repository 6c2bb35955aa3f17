"""Independent reference values used by the test suite.

Nothing here calls the estimators under test; the big-box oracle only uses
``Field.evaluate`` and plain numpy sampling.
"""

import math

import numpy as np
from scipy import integrate


def interval_linear_gagliardo(p: float, s: float) -> float:
    """Double integral of |x-y|^(p-1-ps) over the unit square, i.e. [x]^p on (0,1)."""
    a = p - 1.0 - p * s
    return 2.0 / ((a + 1.0) * (a + 2.0))


def disc_rotation_lp(p: float) -> float:
    """Integral of |x|^p over the unit disc."""
    return 2.0 * math.pi / (p + 2.0)


def disc_constant_hardy(ps: float) -> float:
    """Integral of (1-|x|)^(-ps) over the unit disc by scipy quadrature."""
    val, _ = integrate.quad(lambda r: r * (1.0 - r) ** (-ps), 0.0, 1.0)
    return 2.0 * math.pi * val


def disc_pair_grid(p: float, s: float, res: int) -> float:
    """Midpoint-rule double integral of |x-y|^(p-2-ps) over the unit disc squared.

    Equal to the Gagliardo integral of a rotation field since |A(x-y)| = |x-y|.
    Diagonal cells are dropped; the integrand is integrable so the bias
    vanishes as the grid is refined.
    """
    h = 2.0 / res
    c = -1.0 + h * (np.arange(res) + 0.5)
    X, Y = np.meshgrid(c, c, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pts = pts[np.sum(pts**2, axis=1) < 1.0]
    total = 0.0
    expo = p - 2.0 - p * s
    for k in range(0, len(pts), 512):
        d = pts[k:k + 512, None, :] - pts[None, :, :]
        r = np.sqrt(np.sum(d * d, axis=2))
        with np.errstate(divide="ignore"):
            v = np.where(r > 0, r**expo, 0.0)
        total += v.sum()
    return total * h**4


def big_box_extension(f, p: float, s: float, samples: int, seed: int, half_width: float = 3.0,
                      inner_radius: float = 2.0):
    """Whole-space Gagliardo integral of the zero extension of ``f`` by brute force.

    x is uniform on the box [-L, L]^n, y = x + r w with w uniform on the sphere
    and r from an even mixture of r^(a-1) on (0, R) (a = p(1-s)) and a Pareto
    tail r^(-1-ps) on (R, inf).  Pairs are weighted by
    1[x in Omega] (1 + 1[y not in Omega]), which counts the interior part once
    and both orderings of the cross part.  Returns (mean, standard error).
    """
    dom = f.domain
    n = dom.dim
    rng = np.random.default_rng(seed)
    a = p * (1.0 - s)
    b = p * s
    R = inner_radius
    box_vol = (2.0 * half_width) ** n
    area = 2.0 * math.pi if n == 2 else (2.0 if n == 1 else 4.0 * math.pi)
    vals = np.empty(samples)
    for start in range(0, samples, 1 << 16):
        m = min(1 << 16, samples - start)
        x = rng.uniform(-half_width, half_width, (m, n)) + np.asarray(dom.center)
        u = rng.random(m)
        tail = rng.random(m) < 0.5
        r = np.where(tail, R * u ** (-1.0 / b), R * u ** (1.0 / a))
        dens = np.where(r < R, 0.5 * a * r ** (a - 1.0) / R**a, 0.5 * b * R**b * r ** (-1.0 - b))
        g = rng.standard_normal((m, n))
        w = g / np.linalg.norm(g, axis=1, keepdims=True)
        y = x + r[:, None] * w
        in_x = np.sum((x - dom.center) ** 2, axis=1) < dom.radius**2
        in_y = np.sum((y - dom.center) ** 2, axis=1) < dom.radius**2
        du = f.evaluate(x) - f.evaluate(y)
        num = np.sum(du * du, axis=1) ** (p / 2.0)
        weight = in_x * (1.0 + (~in_y))
        jac = box_vol * area * r ** (n - 1) / dens
        vals[start:start + m] = weight * num * r ** (-(n + b)) * jac
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def mollified_position(x, eps: float, core_radius: float):
    """(1_core y) * eta_eps at ``x`` for a disc core centred at the origin.

    Adaptive scipy quadrature in polar coordinates around ``x``; each ray's
    chord inside the core is computed analytically so the inner integrand
    is smooth.
    """
    from frackorn.fields import mollifier_value

    x = np.asarray(x, dtype=float)

    def ray(th, k):
        w = np.array([math.cos(th), math.sin(th)])
        b = x @ w
        disc = b * b - (x @ x - core_radius**2)
        if disc <= 0:
            return 0.0
        t0 = max(-b - math.sqrt(disc), 0.0)
        t1 = min(-b + math.sqrt(disc), eps)
        if t1 <= t0:
            return 0.0
        g = lambda t: (x[k] + t * w[k]) * mollifier_value(eps, t * w) * t  # noqa: E731
        return integrate.quad(g, t0, t1, epsabs=1e-13)[0]

    return np.array([integrate.quad(ray, 0.0, 2 * math.pi, args=(k,), limit=400, epsabs=1e-12)[0]
                     for k in range(2)])
