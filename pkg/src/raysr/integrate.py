"""Selection success rates: probability mass of the endpoint distribution
over the target region.

Rectangles use the exact product of normal CDFs (the axes are independent
for every shipped model). Discs reduce to a 1-D integral of the x-density
times the y-mass inside the chord, evaluated by adaptive quadrature after a
sine substitution that removes the sqrt endpoint behavior and localizes the
nodes on the x-support. A seeded Monte Carlo path serves as an independent
oracle, and a bisection solver inverts width against a target success rate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _quadpack
from scipy.special import ndtr

from .geometry import AngularExtent
from .model import DistributionParams, ModelSpec, ModelVariant, distribution_params

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

#: Absolute tolerance of the disc quadrature.
QUAD_TOL = 1e-9

# x-support clipped to mu +/- 12 sigma: the excluded mass (< 4e-33) goes
# into the reported error bound.
_SUPPORT_SIGMAS = 12.0
_SUPPORT_TAIL = 4e-33


class Method(enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class SuccessRate:
    value: float
    method: Method
    error_bound: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"success rate out of [0, 1]: {self.value}")
        if self.error_bound < 0.0:
            raise ValueError(f"negative error bound: {self.error_bound}")


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function.

    Absolute error is at the few-ulp level (< 1e-14) everywhere, and the
    tails saturate cleanly at 0 and 1.
    """
    return 0.5 * math.erfc(-float(z) / _SQRT2)


def _require_diagonal(params: DistributionParams) -> None:
    if params.rho != 0.0:
        raise ValueError(
            f"closed forms require uncorrelated axes (rho=0), got rho={params.rho}"
        )


def _rect_sides(extent) -> tuple[float, float]:
    if isinstance(extent, AngularExtent):
        return extent.w_x, extent.w_y
    w_x, w_y = float(extent[0]), float(extent[1])
    if not (w_x > 0.0 and w_y > 0.0):
        raise ValueError(f"rect extent must be positive, got ({w_x}, {w_y})")
    return w_x, w_y


def sr_rect(params: DistributionParams, extent) -> SuccessRate:
    """Probability mass over a centered axis-aligned rect (degrees).

    Independent axes make this an exact product of two normal-CDF
    differences.
    """
    _require_diagonal(params)
    w_x, w_y = _rect_sides(extent)
    hx, hy = w_x / 2.0, w_y / 2.0
    px = normal_cdf((hx - params.mu_x) / params.sigma_x) - normal_cdf(
        (-hx - params.mu_x) / params.sigma_x
    )
    py = normal_cdf((hy - params.mu_y) / params.sigma_y) - normal_cdf(
        (-hy - params.mu_y) / params.sigma_y
    )
    value = min(1.0, max(0.0, px * py))
    return SuccessRate(value=value, method=Method.CLOSED_FORM, error_bound=1e-14)


def sr_circle(params: DistributionParams, w: float) -> SuccessRate:
    """Probability mass over a centered disc of angular diameter ``w``.

    Integrates the x marginal density times the y mass inside the disc
    chord. The substitution x = r*sin(t) keeps the integrand smooth at the
    disc edge, and the integration interval is clipped to the x-support so
    narrow distributions inside huge discs are still resolved.
    """
    if not w > 0.0:
        raise ValueError(f"disc diameter must be positive, got {w}")
    _require_diagonal(params)
    r = w / 2.0
    mx, my = params.mu_x, params.mu_y
    sx, sy = params.sigma_x, params.sigma_y

    a = max(-r, mx - _SUPPORT_SIGMAS * sx)
    b = min(r, mx + _SUPPORT_SIGMAS * sx)
    if a >= b:
        # the x-support misses the disc entirely
        return SuccessRate(0.0, Method.QUADRATURE, _SUPPORT_TAIL)

    def integrand(t: float) -> float:
        x = r * math.sin(t)
        half_chord = r * math.cos(t)
        density = math.exp(-0.5 * ((x - mx) / sx) ** 2) / (sx * _SQRT2PI)
        y_mass = ndtr((half_chord - my) / sy) - ndtr((-half_chord - my) / sy)
        return density * y_mass * half_chord  # dx = r*cos(t) dt

    t_lo = math.asin(max(-1.0, min(1.0, a / r)))
    t_hi = math.asin(max(-1.0, min(1.0, b / r)))
    value, abserr = _quadpack.quad(
        integrand, t_lo, t_hi, epsabs=QUAD_TOL / 40.0, epsrel=QUAD_TOL / 40.0,
        limit=200,
    )
    bound = abserr + _SUPPORT_TAIL
    if bound > QUAD_TOL:
        raise ArithmeticError(
            f"disc quadrature did not reach {QUAD_TOL} (error bound {bound:.2e})"
        )
    return SuccessRate(min(1.0, max(0.0, value)), Method.QUADRATURE, bound)


def sr_monte_carlo(params: DistributionParams, shape, n: int, seed: int) -> SuccessRate:
    """Hit fraction of ``n`` seeded draws from the endpoint distribution.

    ``shape`` is a disc diameter (single number) or a rect extent (pair /
    AngularExtent), both in degrees and centered on the target. The result
    is deterministic for a given seed; the error bound is three binomial
    standard errors.
    """
    if n < 1000:
        raise ValueError(f"need at least 1000 samples, got {n}")
    if np.ndim(shape) == 0:
        disc_r = float(shape) / 2.0
        if not disc_r > 0.0:
            raise ValueError(f"disc diameter must be positive, got {shape}")
        half = None
    else:
        w_x, w_y = _rect_sides(shape)
        half = (w_x / 2.0, w_y / 2.0)
        disc_r = 0.0

    rng = np.random.default_rng(seed)
    rho = params.rho
    mix = math.sqrt(1.0 - rho * rho)
    hits = 0
    remaining = int(n)
    chunk = 1 << 20
    while remaining > 0:
        m = min(chunk, remaining)
        z1 = rng.standard_normal(m)
        z2 = rng.standard_normal(m)
        x = params.mu_x + params.sigma_x * z1
        y = params.mu_y + params.sigma_y * (rho * z1 + mix * z2)
        if half is None:
            hits += int(np.count_nonzero(x * x + y * y <= disc_r * disc_r))
        else:
            hits += int(np.count_nonzero(
                (np.abs(x) <= half[0]) & (np.abs(y) <= half[1])
            ))
        remaining -= m
    p = hits / n
    se = math.sqrt(p * (1.0 - p) / n)
    return SuccessRate(p, Method.MONTE_CARLO, 3.0 * se)


class UnreachableTargetRate(ValueError):
    """The requested success rate is not reached anywhere in the range."""

    def __init__(self, target_sr: float, w_max: float, sr_at_max: float):
        super().__init__(
            f"success rate {target_sr} unreachable within the search range; "
            f"SR({w_max} deg) = {sr_at_max:.6f}"
        )
        self.target_sr = target_sr
        self.w_max = w_max
        self.sr_at_max = sr_at_max


def _sr_of_width(spec: ModelSpec, shape_kind: str, amplitude):
    if shape_kind == "disc":
        return lambda w: sr_circle(distribution_params(w, spec, amplitude), w).value
    if shape_kind == "square":
        return lambda w: sr_rect(distribution_params(w, spec, amplitude), (w, w)).value
    raise ValueError(f"shape_kind must be 'disc' or 'square', got {shape_kind!r}")


def inverse_width(
    target_sr: float,
    spec: ModelSpec,
    shape_kind: str = "disc",
    search_range: tuple[float, float] | None = None,
    amplitude: float | None = None,
    tol: float = 1e-4,
) -> float:
    """Smallest width (degrees) whose success rate reaches ``target_sr``.

    Monotonicity of SR(w) is verified on a 0.1-degree grid before
    bisecting; if the check fails, the first grid cell crossing the target
    is bisected instead. Raises UnreachableTargetRate when even the range
    maximum falls short.
    """
    if not 0.0 < target_sr < 1.0:
        raise ValueError(f"target success rate must lie in (0, 1), got {target_sr}")
    lo, hi = search_range if search_range is not None else spec.validity_range
    if not (0.0 < lo < hi):
        raise ValueError(f"invalid search range [{lo}, {hi}]")

    f = _sr_of_width(spec, shape_kind, amplitude)

    grid = [lo + 0.1 * i for i in range(int((hi - lo) / 0.1) + 1)]
    if grid[-1] < hi:
        grid.append(hi)
    values = [f(w) for w in grid]
    monotone = all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    if values[0] >= target_sr:
        return lo

    if monotone:
        if values[-1] < target_sr:
            raise UnreachableTargetRate(target_sr, hi, values[-1])
        lo_b, hi_b = lo, hi
    else:
        crossing = next(
            (i for i in range(1, len(grid)) if values[i] >= target_sr), None
        )
        if crossing is None:
            raise UnreachableTargetRate(target_sr, hi, values[-1])
        lo_b, hi_b = grid[crossing - 1], grid[crossing]

    # invariant: f(lo_b) < target_sr <= f(hi_b)
    while hi_b - lo_b > tol:
        mid = 0.5 * (lo_b + hi_b)
        if f(mid) >= target_sr:
            hi_b = mid
        else:
            lo_b = mid
    return hi_b
