from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvselect.errors import DegenerateNullclines, InvalidInput
from lvselect.model import (
    AUGMENT_NAMES,
    FIG1A,
    FIG1B,
    PARAM_NAMES,
    STRUCTURAL_NAMES,
    AugmentParams,
    BaseParams,
    ParameterState,
    PhaseClass,
    active_parameter_count,
    classify_phase,
    coexistence_equilibrium,
    rhs_base,
    rhs_full,
)


def exact_equilibrium(a1, a2, b1, b2):
    # Cramer's rule in exact rationals; independent of the float solver.
    a1, a2, b1, b2 = (Fraction(x).limit_denominator(1000) for x in (a1, a2, b1, b2))
    det = a1 * b2 - a2 * b1
    return (b2 - a2) / det, (a1 - b1) / det


def test_fig1a_equilibrium_is_10_11_and_40_33():
    assert exact_equilibrium(0.7, 0.3, 0.3, 0.6) == (Fraction(10, 11), Fraction(40, 33))
    u, v = coexistence_equilibrium(FIG1A)
    assert u == pytest.approx(10 / 11, abs=1e-12)
    assert v == pytest.approx(40 / 33, abs=1e-12)


def test_fig1b_equilibrium_matches_by_symmetry():
    assert exact_equilibrium(0.3, 0.6, 0.7, 0.3) == (Fraction(10, 11), Fraction(40, 33))
    u, v = coexistence_equilibrium(FIG1B)
    assert (u, v) == pytest.approx((10 / 11, 40 / 33), abs=1e-12)


def test_identical_nullclines_are_degenerate():
    with pytest.raises(DegenerateNullclines):
        coexistence_equilibrium(BaseParams(r=0.5, a1=1, a2=1, b1=1, b2=1))


def test_rhs_vanishes_at_fig1a_equilibrium():
    du, dv = rhs_full(ParameterState.full_family(FIG1A), 10 / 11, 40 / 33)
    assert abs(du) < 1e-12 and abs(dv) < 1e-12


def test_rhs_origin_without_constant_terms():
    aug = AugmentParams(alpha1=0.3, alpha3=-2.0, beta2=1.5, beta4=0.7)
    state = ParameterState.full_family(BaseParams(r=1.3, a1=0.2, a2=4.0, b1=0.9, b2=0.1), aug)
    assert rhs_full(state, 0.0, 0.0) == (0.0, 0.0)


def test_rhs_coefficients_summing_to_one():
    du, _ = rhs_full(ParameterState.base_model(FIG1A), 1.0, 1.0)
    assert du == pytest.approx(0.0, abs=1e-15)


def test_rhs_full_term_by_term():
    vals = dict(zip(PARAM_NAMES, np.linspace(0.1, 1.5, 15)))
    state = ParameterState.from_values(vals)
    u, v = 0.7, 1.9
    p = vals
    du = u * (1 - p["a1"] * u - p["a2"] * v) + p["alpha0"] + p["alpha1"] * u + p["alpha2"] * v \
        + p["alpha3"] * u * u * v + p["alpha4"] * u * v * v
    dv = p["r"] * v * (1 - p["b1"] * u - p["b2"] * v) + p["beta0"] + p["beta1"] * u \
        + p["beta2"] * v + p["beta3"] * u * u * v + p["beta4"] * u * v * v
    assert rhs_full(state, u, v) == pytest.approx((du, dv), rel=1e-14)


def test_rhs_rejects_non_finite():
    with pytest.raises(InvalidInput):
        rhs_full(ParameterState.base_model(FIG1A), float("nan"), 1.0)
    with pytest.raises(InvalidInput):
        rhs_full(ParameterState.base_model(FIG1A), np.array([1.0, np.inf]), np.ones(2))


def test_masked_parameters_are_hard_zeros():
    aug = AugmentParams(*np.arange(1, 11, dtype=float))
    state = ParameterState.full_family(FIG1A, aug).deactivate(AUGMENT_NAMES)
    assert np.all(state.values()[5:] == 0.0)
    assert state.raw_values()[5] == 1.0


def test_masked_rhs_equals_base_model_bitwise(rng):
    aug = AugmentParams(*rng.normal(size=10))
    state = ParameterState.full_family(FIG1A, aug).deactivate(AUGMENT_NAMES)
    u, v = rng.uniform(-3, 3, size=(2, 500))
    du, dv = rhs_full(state, u, v)
    bu, bv = rhs_base(FIG1A, u, v)
    assert np.array_equal(du, bu) and np.array_equal(dv, bv)


@pytest.mark.parametrize("base, expected", [
    (FIG1A, PhaseClass.STABLE_COEXISTENCE),
    (FIG1B, PhaseClass.FOUNDER_CONTROL),
    (BaseParams(a1=0.5, a2=0.5, b1=0.5, b2=0.5), PhaseClass.DEGENERATE),
    (BaseParams(a1=0.3, a2=0.3, b1=0.7, b2=0.6), PhaseClass.EXCLUSION_U_WINS),
    (BaseParams(a1=0.7, a2=0.6, b1=0.3, b2=0.3), PhaseClass.EXCLUSION_V_WINS),
])
def test_classify_phase(base, expected):
    assert classify_phase(base) is expected


def test_classify_rejects_non_positive():
    with pytest.raises(InvalidInput):
        classify_phase(BaseParams(a1=0.0))


coef = st.floats(0.05, 5.0, allow_nan=False)


@given(coef, coef, coef, coef)
def test_classification_is_role_swap_equivariant(a1, a2, b1, b2):
    base = BaseParams(r=0.5, a1=a1, a2=a2, b1=b1, b2=b2)
    assert classify_phase(base.swapped()) is classify_phase(base).swapped()


@given(coef, coef, coef, coef)
@settings(max_examples=200)
def test_equilibrium_residuals(a1, a2, b1, b2):
    base = BaseParams(r=0.5, a1=a1, a2=a2, b1=b1, b2=b2)
    det = a1 * b2 - a2 * b1
    if abs(det) < 1e-3:
        return
    u, v = coexistence_equilibrium(base)
    scale = max(1.0, abs(u), abs(v))
    assert abs(a1 * u + a2 * v - 1) <= 1e-12 * scale * 10
    assert abs(b1 * u + b2 * v - 1) <= 1e-12 * scale * 10


def test_equilibrium_residuals_fig1a():
    u, v = coexistence_equilibrium(FIG1A)
    assert abs(0.7 * u + 0.3 * v - 1) <= 1e-12
    assert abs(0.3 * u + 0.6 * v - 1) <= 1e-12
    du, dv = rhs_full(ParameterState.base_model(FIG1A), u, v)
    assert np.hypot(du, dv) <= 1e-12


def test_active_parameter_count():
    assert active_parameter_count(ParameterState.full_family()) == 15
    final = ParameterState.full_family().with_mask(
        n in STRUCTURAL_NAMES + ("alpha0",) for n in PARAM_NAMES)
    assert active_parameter_count(final) == 6
    assert active_parameter_count(ParameterState.full_family().with_mask([False] * 15)) == 0


def test_from_values_roundtrip():
    state = ParameterState.from_values({"r": 0.5, "a1": 0.7, "beta1": 0.35})
    assert state.active_names == ("r", "a1", "beta1")
    again = ParameterState.from_values(state.raw_values(), active=state.active_names)
    assert again == state


def test_parameters_must_be_finite():
    with pytest.raises(InvalidInput):
        BaseParams(r=float("inf"))
    with pytest.raises(InvalidInput):
        ParameterState.from_values({"gamma": 1.0})
