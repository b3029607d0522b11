"""Endpoint-distribution model for raycasting selection.

A pointed-at target of apparent angular width W (degrees) collects selection
endpoints that scatter around its center as a bivariate Gaussian. The model
maps W to that Gaussian's parameters with linear laws:

    sigma_x = a*W + b        spread along the movement axis
    sigma_y = c*W + d        spread perpendicular to it
    mu_x    = e*W + f        systematic aim offset along the movement axis

All quantities are in angular degrees. The shipped baseline constants come
from a controller-raycasting study with spherical targets on a ring; the
offset mu_x is negative (selections land short of center, more so for
larger targets), mu_y is zero, and the two axes are uncorrelated.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field

MODEL_SCHEMA_VERSION = 1

#: Width range (degrees) the shipped constants are trusted on. The source
#: data covered 1.0-4.5 deg; modest extrapolation is allowed but every
#: parameter set produced outside this range carries a machine-readable
#: warning instead of failing.
DEFAULT_VALIDITY_RANGE = (0.5, 10.0)

# Constants must keep both sigmas positive on this outer envelope, which
# contains every validity range we accept.
_POSITIVITY_ENVELOPE = (0.0, 20.0)

WARN_OUTSIDE_VALIDITY = "width_outside_validity_range"


class ModelVariant(enum.Enum):
    """Which terms the width-to-parameters mapping uses."""

    BASELINE = "baseline"
    WITH_AMPLITUDE = "with_amplitude"
    ZERO_OFFSET = "zero_offset"
    WORLD_COORDINATE = "world_coordinate"


@dataclass(frozen=True)
class ModelConstants:
    """Regression coefficients mapping angular width to Gaussian parameters.

    ``a``/``c``/``e`` are slopes (degrees per degree of width) and
    ``b``/``d``/``f`` intercepts (degrees) for sigma_x, sigma_y and mu_x
    respectively.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def __post_init__(self) -> None:
        lo, hi = _POSITIVITY_ENVELOPE
        for w in (lo, hi):
            if self.a * w + self.b <= 0.0:
                raise ValueError(
                    f"sigma_x = a*W + b must stay positive on [{lo}, {hi}] deg; "
                    f"fails at W={w} with a={self.a}, b={self.b}"
                )
            if self.c * w + self.d <= 0.0:
                raise ValueError(
                    f"sigma_y = c*W + d must stay positive on [{lo}, {hi}] deg; "
                    f"fails at W={w} with c={self.c}, d={self.d}"
                )


#: Constants shipped with the package (movement-direction frame, sphere study).
BASELINE_CONSTANTS = ModelConstants(
    a=0.1102, b=0.23130, c=0.0715, d=0.2311, e=-0.0623, f=-0.0846
)


@dataclass(frozen=True)
class AmplitudeTerms:
    """Additive per-axis slopes for the movement amplitude A (degrees).

    Under the amplitude-aware variant each parameter gains a linear term:
    sigma_x += sigma_x_slope * A, and so on. No shipped preset exists;
    these come out of the fitting pipeline.
    """

    sigma_x_slope: float
    sigma_y_slope: float
    mu_x_slope: float


@dataclass(frozen=True)
class DistributionParams:
    """A concrete endpoint distribution, in angular degrees.

    ``warnings`` holds machine-readable codes (e.g. width outside the
    model's validity range); it never affects the numbers.
    """

    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    rho: float
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not (self.sigma_x > 0.0 and self.sigma_y > 0.0):
            raise ValueError(
                f"sigmas must be positive, got ({self.sigma_x}, {self.sigma_y})"
            )
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")


@dataclass(frozen=True)
class ModelSpec:
    """A model variant bound to concrete constants and a validity range."""

    variant: ModelVariant
    constants: ModelConstants
    amplitude_constants: AmplitudeTerms | None = None
    validity_range: tuple[float, float] = DEFAULT_VALIDITY_RANGE

    def __post_init__(self) -> None:
        has_amp = self.amplitude_constants is not None
        if has_amp != (self.variant is ModelVariant.WITH_AMPLITUDE):
            raise ValueError(
                "amplitude_constants must be given exactly when the variant "
                f"is {ModelVariant.WITH_AMPLITUDE.value}"
            )
        lo, hi = self.validity_range
        if not (0.0 <= lo < hi):
            raise ValueError(f"invalid validity range [{lo}, {hi}]")


def preset(variant: ModelVariant = ModelVariant.BASELINE) -> ModelSpec:
    """Shipped ModelSpec for a variant.

    The zero-offset and world-coordinate variants reuse the baseline
    constants (for world coordinates, only the geometry frame feeding the
    widths differs). The amplitude-aware variant has no published constants
    and must be produced by fitting.
    """
    if variant is ModelVariant.WITH_AMPLITUDE:
        raise ValueError(
            "no shipped amplitude constants; fit a model from trial data "
            "to use the with_amplitude variant"
        )
    return ModelSpec(variant=variant, constants=BASELINE_CONSTANTS)


def baseline_spec() -> ModelSpec:
    return preset(ModelVariant.BASELINE)


def per_axis_params(
    extent: tuple[float, float],
    spec: ModelSpec,
    amplitude: float | None = None,
) -> DistributionParams:
    """Distribution parameters from independent per-axis widths (degrees).

    sigma_x and mu_x follow the x-axis width, sigma_y the y-axis width.
    ``amplitude`` is required (and positive) for the amplitude-aware
    variant and ignored by every other variant.
    """
    w_x, w_y = float(extent[0]), float(extent[1])
    if not (w_x > 0.0 and w_y > 0.0):
        raise ValueError(f"widths must be positive, got ({w_x}, {w_y})")

    amp_sx = amp_sy = amp_mu = 0.0
    if spec.variant is ModelVariant.WITH_AMPLITUDE:
        if amplitude is None or not amplitude > 0.0:
            raise ValueError(
                "the with_amplitude variant needs a positive movement "
                f"amplitude, got {amplitude!r}"
            )
        terms = spec.amplitude_constants
        amp_sx = terms.sigma_x_slope * amplitude
        amp_sy = terms.sigma_y_slope * amplitude
        amp_mu = terms.mu_x_slope * amplitude

    k = spec.constants
    sigma_x = k.a * w_x + k.b + amp_sx
    sigma_y = k.c * w_y + k.d + amp_sy
    if sigma_x <= 0.0 or sigma_y <= 0.0:
        raise ValueError(
            f"constants yield non-positive sigma at widths ({w_x}, {w_y})"
        )
    if spec.variant is ModelVariant.ZERO_OFFSET:
        mu_x = 0.0
    else:
        mu_x = k.e * w_x + k.f + amp_mu

    lo, hi = spec.validity_range
    warnings: tuple[str, ...] = ()
    if not (lo <= w_x <= hi and lo <= w_y <= hi):
        warnings = (WARN_OUTSIDE_VALIDITY,)

    return DistributionParams(
        mu_x=mu_x, mu_y=0.0, sigma_x=sigma_x, sigma_y=sigma_y, rho=0.0,
        warnings=warnings,
    )


def distribution_params(
    w: float,
    spec: ModelSpec,
    amplitude: float | None = None,
) -> DistributionParams:
    """Distribution parameters for a target of angular width ``w`` degrees."""
    return per_axis_params((w, w), spec, amplitude)


# ---------------------------------------------------------------------------
# model.json serialization

def model_to_document(spec: ModelSpec) -> dict:
    doc: dict = {
        "raysr_model": MODEL_SCHEMA_VERSION,
        "variant": spec.variant.value,
        "constants": {
            "a": spec.constants.a,
            "b": spec.constants.b,
            "c": spec.constants.c,
            "d": spec.constants.d,
            "e": spec.constants.e,
            "f": spec.constants.f,
        },
        "validity_range_deg": [spec.validity_range[0], spec.validity_range[1]],
    }
    if spec.amplitude_constants is not None:
        amp = spec.amplitude_constants
        doc["amplitude_constants"] = {
            "sigma_x_slope": amp.sigma_x_slope,
            "sigma_y_slope": amp.sigma_y_slope,
            "mu_x_slope": amp.mu_x_slope,
        }
    return doc


def model_from_document(doc: dict | str | bytes) -> ModelSpec:
    """Parse a model.json document, rejecting unknown fields."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise ValueError("model document must be a JSON object")
    if doc.get("raysr_model") != MODEL_SCHEMA_VERSION:
        raise ValueError(
            f"model document must declare \"raysr_model\": {MODEL_SCHEMA_VERSION}"
        )
    allowed = {"raysr_model", "variant", "constants", "amplitude_constants",
               "validity_range_deg"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValueError(f"unknown model field(s): {', '.join(unknown)}")

    try:
        variant = ModelVariant(doc["variant"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"invalid or missing variant: {doc.get('variant')!r}") from exc

    consts = doc.get("constants")
    if not isinstance(consts, dict) or sorted(consts) != list("abcdef"):
        raise ValueError("constants must be an object with keys a..f")
    constants = ModelConstants(**{k: float(consts[k]) for k in "abcdef"})

    amp = None
    if "amplitude_constants" in doc:
        raw = doc["amplitude_constants"]
        keys = {"sigma_x_slope", "sigma_y_slope", "mu_x_slope"}
        if not isinstance(raw, dict) or set(raw) != keys:
            raise ValueError(
                "amplitude_constants must be an object with keys "
                "sigma_x_slope, sigma_y_slope, mu_x_slope"
            )
        amp = AmplitudeTerms(**{k: float(raw[k]) for k in keys})

    rng = doc.get("validity_range_deg", list(DEFAULT_VALIDITY_RANGE))
    if not (isinstance(rng, (list, tuple)) and len(rng) == 2):
        raise ValueError("validity_range_deg must be a [lo, hi] pair")

    return ModelSpec(
        variant=variant,
        constants=constants,
        amplitude_constants=amp,
        validity_range=(float(rng[0]), float(rng[1])),
    )


def constants_version(spec: ModelSpec) -> str:
    """Short stable identifier of a spec's numbers, for client-side caching."""
    payload = json.dumps(model_to_document(spec), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]
