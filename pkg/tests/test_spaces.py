import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majorant_pde.errors import ValidationError
from majorant_pde.kernels import KernelSpec
from majorant_pde.spaces import (Field, OrliczSpec, ball_averages, ball_weights, check_initial_condition,
                                 log_critical_field, morrey_norm, morrey_sup, orlicz_phi, orlicz_phi_inverse,
                                 power_law_field, rho_weight, uloc_ball_average_sup)
from majorant_pde.structure import classify, preset

KERNEL = KernelSpec(dim=1, order=2.0, decay_exponent=1.0)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-5.0, 5.0), sigma=st.floats(0.05, 4.0))
def test_uloc_of_constant(c, sigma):
    field = Field.constant(c, 10.0, 256)
    assert uloc_ball_average_sup(field, sigma) == pytest.approx(abs(c), rel=1e-12, abs=1e-300)


def test_uloc_single_cell():
    field = Field(np.zeros(256), 10.0)
    values = field.values.copy()
    values[128] = 1.0
    field = Field(values, 10.0)
    h = field.spacing
    sigma = 10.5 * h
    assert uloc_ball_average_sup(field, sigma) == pytest.approx(h / (2.0 * sigma), rel=1e-12)


def test_uloc_inverse_square_root():
    # ⨍_{B(0,1)} |x|^{-1/2} = (1/2) ∫_{-1}^{1} |x|^{-1/2} dx = 2
    field = power_law_field(1.0, 0.5, 8.0, 4096)
    assert uloc_ball_average_sup(field, 1.0) == pytest.approx(2.0, rel=1e-3)


def test_ball_weights_volume():
    field = Field.constant(1.0, 10.0, 200)
    assert ball_weights(field, 1.23).sum() * field.spacing == pytest.approx(2.46, rel=1e-12)
    f2 = Field.constant(1.0, 10.0, 128, dim=2)
    area = ball_weights(f2, 3.0).sum() * f2.cell_volume
    assert area == pytest.approx(math.pi * 9.0, rel=1e-2)


def test_ball_average_rejects_bad_radius():
    field = Field.constant(1.0, 4.0, 64)
    with pytest.raises(ValidationError):
        ball_averages(field, 0.0)
    with pytest.raises(ValidationError):
        uloc_ball_average_sup(field, 3.0)


@pytest.mark.parametrize("r", [1.5, 2.0, 4.0])
def test_morrey_of_constant_peaks_at_cap(r):
    field = Field.constant(3.0, 20.0, 512)
    val, _, sigma = morrey_sup(field, r, radius_cap=2.0)
    assert sigma == pytest.approx(2.0)
    assert val == pytest.approx(3.0 * 2.0 ** (1.0 / r), rel=1e-12)


def test_morrey_of_critical_profile_is_scale_stable():
    field = power_law_field(1.0, 0.5, 20.0, 8192)
    small = morrey_norm(field, 2.0, radius_cap=1.0)
    large = morrey_norm(field, 2.0, radius_cap=8.0)
    assert large == pytest.approx(small, rel=2e-2)


@settings(max_examples=10, deadline=None)
@given(lam=st.sampled_from([2.0, 4.0]), r=st.floats(1.0, 6.0))
def test_morrey_scaling_identity(lam, r):
    f = lambda x: np.exp(-x ** 2)
    base = Field.from_function(f, 20.0, 2048, average=True)
    scaled = Field.from_function(lambda x: f(lam * x), 20.0, 2048, average=True)
    radii = np.geomspace(1.0, 5.0, 8)
    a = morrey_norm(base, r, radii=radii)
    b = morrey_norm(scaled, r, radii=radii / lam)
    assert b == pytest.approx(lam ** (-1.0 / r) * a, rel=2e-3)


def test_morrey_validation():
    field = Field.constant(1.0, 20.0, 64)
    with pytest.raises(ValidationError):
        morrey_sup(field, 0.5)
    with pytest.raises(ValidationError):
        morrey_sup(field, 2.0, q=3.0)


@settings(max_examples=50, deadline=None)
@given(s=st.floats(0.0, 1e8), beta=st.floats(0.1, 3.0), shift=st.floats(0.0, 20.0))
def test_orlicz_inverse_roundtrip(s, beta, shift):
    M = math.e + shift
    y = orlicz_phi(s, beta, M)
    assert orlicz_phi_inverse(y, beta, M) == pytest.approx(s, rel=1e-9, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.0, 1e6), b=st.floats(0.0, 1e6), beta=st.floats(0.1, 3.0))
def test_orlicz_phi_monotone(a, b, beta):
    lo, hi = sorted((a, b))
    assert orlicz_phi(lo, beta) <= orlicz_phi(hi, beta)


def test_orlicz_spec_validation():
    beta, p = 1.0, 3.0
    good = OrliczSpec(beta=beta, M=OrliczSpec.minimal_M(beta, p), A=0.0, p_bracket_0=0.0, d=2.0, p_abs=p)
    assert good.validate() is good
    assert good.sandwich_constant() >= 1.0
    with pytest.raises(ValidationError):
        OrliczSpec(beta=beta, M=2.0, A=0.0, p_bracket_0=0.0, d=2.0, p_abs=p).validate()
    with pytest.raises(ValidationError):
        OrliczSpec(beta=50.0, M=math.e, A=0.0, p_bracket_0=0.0, d=2.0, p_abs=p).validate()


def test_rho_weight():
    assert rho_weight(1.0, 1, 1.5) == pytest.approx(math.log(math.e + 1.0) ** -1.5)


def test_case_b_constant_condition():
    report = classify(preset("SP", p=2).spec, KERNEL)
    T, gamma = 0.25, 0.5
    threshold = gamma * T ** (-1.0 / (2.0 * 0.5))
    ok = check_initial_condition(Field.constant(0.99 * threshold, 20.0, 512), report, T, gamma)
    bad = check_initial_condition(Field.constant(1.01 * threshold, 20.0, 512), report, T, gamma)
    assert ok.passed and not bad.passed
    assert ok.rhs == pytest.approx(threshold)


def test_case_c_power_profile_scales_with_amplitude():
    report = classify(preset("SP", p=4).spec, KERNEL)
    a = check_initial_condition(power_law_field(0.1, 2.0 / 3.0, 20.0, 2048), report, 1.0, 1.0, q=2.0 - 1e-9)
    b = check_initial_condition(power_law_field(0.2, 2.0 / 3.0, 20.0, 2048), report, 1.0, 1.0, q=2.0 - 1e-9)
    assert b.lhs == pytest.approx(2.0 * a.lhs, rel=1e-9)
    assert a.passed


def test_case_d_log_profile():
    report = classify(preset("SP", p=3).spec, KERNEL)
    orlicz = OrliczSpec(beta=1.0, M=OrliczSpec.minimal_M(1.0, 3.0), A=0.0, p_bracket_0=0.0, d=2.0, p_abs=3.0)
    small = check_initial_condition(log_critical_field(0.02, 20.0, 2048), report, 1.0, 1.0, orlicz=orlicz)
    large = check_initial_condition(log_critical_field(200.0, 20.0, 2048), report, 1.0, 1.0, orlicz=orlicz)
    assert small.passed and not large.passed


def test_condition_argument_checks():
    report = classify(preset("SP", p=2).spec, KERNEL)
    field = Field.constant(1.0, 20.0, 256)
    with pytest.raises(ValidationError):
        check_initial_condition(field, report, 1.0, 1.0, q=1.5)
    with pytest.raises(ValidationError):
        check_initial_condition(field, report, 1000.0, 1.0)
    with pytest.raises(ValidationError):
        check_initial_condition(field, report, 1.0, -1.0)


def test_field_validation():
    with pytest.raises(ValidationError):
        Field(np.zeros((4, 5)), 1.0, 2)
    with pytest.raises(ValidationError):
        Field(np.array([0.0, np.nan]), 1.0)
    with pytest.raises(ValidationError):
        Field.from_function(np.sin, 1.0, 7)
    with pytest.raises(ValidationError):
        power_law_field(1.0, 1.0, 10.0, 64)
