import json
import math

import pytest

from raysr import (
    BASELINE_CONSTANTS,
    DEFAULT_VALIDITY_RANGE,
    AmplitudeTerms,
    DistributionParams,
    ModelConstants,
    ModelSpec,
    ModelVariant,
    baseline_spec,
    distribution_params,
    model_from_document,
    model_to_document,
    per_axis_params,
    preset,
)
from raysr.model import WARN_OUTSIDE_VALIDITY, constants_version


def test_shipped_baseline_constants():
    k = BASELINE_CONSTANTS
    assert (k.a, k.b, k.c, k.d, k.e, k.f) == (
        0.1102, 0.23130, 0.0715, 0.2311, -0.0623, -0.0846
    )


def test_params_at_unit_width():
    p = distribution_params(1.0, baseline_spec())
    assert p.sigma_x == pytest.approx(0.3415, abs=1e-12)
    assert p.sigma_y == pytest.approx(0.3026, abs=1e-12)
    assert p.mu_x == pytest.approx(-0.1469, abs=1e-12)
    assert p.mu_y == 0.0
    assert p.rho == 0.0
    assert p.warnings == ()


def test_zero_offset_forces_centered_mean():
    base = distribution_params(1.0, baseline_spec())
    zo = distribution_params(1.0, preset(ModelVariant.ZERO_OFFSET))
    assert zo.mu_x == 0.0
    assert zo.sigma_x == base.sigma_x
    assert zo.sigma_y == base.sigma_y


def test_sigmas_approach_intercepts_at_tiny_width():
    p = distribution_params(1e-9, baseline_spec())
    assert p.sigma_x == pytest.approx(0.23130, abs=1e-9)
    assert p.sigma_y == pytest.approx(0.2311, abs=1e-9)


def test_per_axis_square_matches_single_width_exactly():
    spec = baseline_spec()
    for w in (0.5, 1.0, 2.0, 4.5, 10.0):
        assert per_axis_params((w, w), spec) == distribution_params(w, spec)


def test_per_axis_independent_widths():
    p = per_axis_params((2.0, 1.0), baseline_spec())
    assert p.sigma_x == pytest.approx(0.4517, abs=1e-12)
    assert p.sigma_y == pytest.approx(0.3026, abs=1e-12)
    # mu_x follows the x width
    assert p.mu_x == pytest.approx(-0.0623 * 2.0 - 0.0846, abs=1e-12)


def test_per_axis_zero_offset():
    p = per_axis_params((1.0, 2.0), preset(ModelVariant.ZERO_OFFSET))
    assert p.mu_x == 0.0


def test_parameters_monotone_in_width():
    spec = baseline_spec()
    widths = [0.5 + 0.25 * i for i in range(39)]
    ps = [distribution_params(w, spec) for w in widths]
    for p1, p2 in zip(ps, ps[1:]):
        assert p2.sigma_x > p1.sigma_x
        assert p2.sigma_y > p1.sigma_y


def test_offset_is_negative_for_all_widths():
    spec = baseline_spec()
    for w in (0.01, 0.5, 1.0, 4.5, 10.0, 20.0):
        assert distribution_params(w, spec).mu_x < 0.0


def test_world_coordinate_preset_shares_baseline_constants():
    spec = preset(ModelVariant.WORLD_COORDINATE)
    assert spec.constants == BASELINE_CONSTANTS
    assert distribution_params(2.0, spec) == distribution_params(2.0, baseline_spec())


def test_validity_range_warning():
    spec = baseline_spec()
    assert spec.validity_range == DEFAULT_VALIDITY_RANGE
    assert distribution_params(0.4, spec).warnings == (WARN_OUTSIDE_VALIDITY,)
    assert distribution_params(10.5, spec).warnings == (WARN_OUTSIDE_VALIDITY,)
    assert distribution_params(0.5, spec).warnings == ()
    assert distribution_params(10.0, spec).warnings == ()
    # either axis outside triggers the warning
    assert per_axis_params((0.4, 1.0), spec).warnings == (WARN_OUTSIDE_VALIDITY,)


def test_nonpositive_width_rejected():
    spec = baseline_spec()
    with pytest.raises(ValueError):
        distribution_params(0.0, spec)
    with pytest.raises(ValueError):
        distribution_params(-1.0, spec)
    with pytest.raises(ValueError):
        per_axis_params((1.0, 0.0), spec)


def test_amplitude_variant_contract():
    terms = AmplitudeTerms(sigma_x_slope=0.001, sigma_y_slope=0.002, mu_x_slope=-0.0005)
    spec = ModelSpec(
        variant=ModelVariant.WITH_AMPLITUDE,
        constants=BASELINE_CONSTANTS,
        amplitude_constants=terms,
    )
    with pytest.raises(ValueError):
        distribution_params(1.0, spec)  # amplitude missing
    p = distribution_params(1.0, spec, amplitude=30.0)
    assert p.sigma_x == pytest.approx(0.3415 + 0.001 * 30.0, abs=1e-12)
    assert p.sigma_y == pytest.approx(0.3026 + 0.002 * 30.0, abs=1e-12)
    assert p.mu_x == pytest.approx(-0.1469 - 0.0005 * 30.0, abs=1e-12)
    # other variants ignore a supplied amplitude
    assert distribution_params(1.0, baseline_spec(), amplitude=30.0) == distribution_params(
        1.0, baseline_spec()
    )


def test_amplitude_constants_presence_enforced():
    with pytest.raises(ValueError):
        ModelSpec(variant=ModelVariant.WITH_AMPLITUDE, constants=BASELINE_CONSTANTS)
    with pytest.raises(ValueError):
        ModelSpec(
            variant=ModelVariant.BASELINE,
            constants=BASELINE_CONSTANTS,
            amplitude_constants=AmplitudeTerms(0.0, 0.0, 0.0),
        )


def test_no_shipped_amplitude_preset():
    with pytest.raises(ValueError):
        preset(ModelVariant.WITH_AMPLITUDE)


def test_constants_positivity_enforced():
    with pytest.raises(ValueError):
        ModelConstants(a=0.1, b=-0.01, c=0.07, d=0.23, e=0.0, f=0.0)
    with pytest.raises(ValueError):
        # positive intercept but sigma crosses zero inside the envelope
        ModelConstants(a=-0.02, b=0.1, c=0.07, d=0.23, e=0.0, f=0.0)


def test_distribution_params_invariants():
    with pytest.raises(ValueError):
        DistributionParams(mu_x=0.0, mu_y=0.0, sigma_x=0.0, sigma_y=1.0, rho=0.0)
    with pytest.raises(ValueError):
        DistributionParams(mu_x=0.0, mu_y=0.0, sigma_x=1.0, sigma_y=1.0, rho=1.0)


def test_model_document_round_trip():
    spec = baseline_spec()
    doc = model_to_document(spec)
    assert doc["raysr_model"] == 1
    assert doc["variant"] == "baseline"
    assert doc["constants"] == {
        "a": 0.1102, "b": 0.23130, "c": 0.0715, "d": 0.2311,
        "e": -0.0623, "f": -0.0846,
    }
    assert model_from_document(doc) == spec
    assert model_from_document(json.dumps(doc)) == spec

    amp_spec = ModelSpec(
        variant=ModelVariant.WITH_AMPLITUDE,
        constants=BASELINE_CONSTANTS,
        amplitude_constants=AmplitudeTerms(0.001, 0.002, -0.0005),
        validity_range=(1.0, 4.5),
    )
    assert model_from_document(model_to_document(amp_spec)) == amp_spec


def test_model_document_validation():
    doc = model_to_document(baseline_spec())
    bad = dict(doc, surprise=1)
    with pytest.raises(ValueError, match="surprise"):
        model_from_document(bad)
    with pytest.raises(ValueError, match="raysr_model"):
        model_from_document(dict(doc, raysr_model=2))
    with pytest.raises(ValueError, match="variant"):
        model_from_document(dict(doc, variant="nope"))
    incomplete = dict(doc)
    incomplete["constants"] = {"a": 1.0}
    with pytest.raises(ValueError, match="constants"):
        model_from_document(incomplete)


def test_constants_version_is_stable_and_distinguishes_specs():
    v1 = constants_version(baseline_spec())
    assert v1 == constants_version(baseline_spec())
    assert v1 != constants_version(preset(ModelVariant.ZERO_OFFSET))
