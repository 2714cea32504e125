import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majorant_pde.errors import ValidationError
from majorant_pde.kernels import KernelSpec
from majorant_pde.solver import truncate_nonlinearity
from majorant_pde.structure import (INF, StructureSpec, classify, envelope, evaluate_nonlinearity,
                                    flux_components, multi_indices, preset, state_length, to_fraction)

fractions = st.fractions(min_value=Fraction(11, 10), max_value=Fraction(6), max_denominator=12)
dims = st.sampled_from([1, 2])


def kernel(N, d):
    return KernelSpec(dim=N, order=float(d), decay_exponent=1.0)


def test_examples_from_family_tables():
    k = kernel(1, 2)
    sp3 = classify(preset("SP", p=3).spec, k)
    assert (sp3.p_bracket_n, sp3.r_n, sp3.case) == (0, 1, "D")
    vhj = classify(preset("VHJ", p=3, n=1).spec, k)
    assert (vhj.p_bracket_n, vhj.r_n, vhj.case) == (1, 2, "A")
    sp2 = classify(preset("SP", p=2).spec, k)
    assert (sp2.r_n, sp2.case) == (Fraction(1, 2), "B")
    assert preset("VHJ", order=2).derived["p_HJ"] == Fraction(3, 2)
    hg = preset("HG", order=4, p=2).derived
    assert (hg["r_0"], hg["r_1"]) == (1, Fraction(1, 2))
    assert preset("gCD", order=2, ell=1, p=2).derived["r_0"] == 1


@settings(max_examples=60, deadline=None)
@given(N=dims, d=st.integers(2, 6), p=fractions)
def test_sp_exponents(N, d, p):
    rep = classify(preset("SP", dim=N, order=d, p=p).spec, kernel(N, d))
    assert rep.r_n == N * (p - 1) / d
    expected_case = "B" if rep.r_n < 1 else "C" if rep.r_n > 1 else "D"
    assert rep.case == expected_case
    assert rep.kappa == (Fraction(N, d) if rep.r_n < 1 else N / (d * rep.r_n))
    assert rep.rho_exponent == Fraction(N, d)


@settings(max_examples=60, deadline=None)
@given(N=dims, d=st.integers(2, 6), p=fractions)
def test_vhj_exponents(N, d, p):
    pr = preset("VHJ", dim=N, order=d, p=p)
    rep1 = classify(pr.variants[1], kernel(N, d))
    assert rep1.r_n == pr.derived["r_1"] == N * (p - 1) / (d - 1)
    assert rep1.case == "A"
    assert pr.derived["p_HJ"] == Fraction(N + d, N + 1)
    if d > p:
        assert classify(pr.variants[0], kernel(N, d)).r_n == N * (p - 1) / (d - p)


@settings(max_examples=60, deadline=None)
@given(N=dims, d=st.integers(3, 7), p=fractions)
def test_hg_exponents(N, d, p):
    pr = preset("HG", dim=N, order=d, p=p)
    assert classify(pr.variants[1], kernel(N, d)).r_n == N * (p - 1) / (d - 2)
    if d > p + 1:
        assert classify(pr.variants[0], kernel(N, d)).r_n == pr.derived["r_0"] == N * (p - 1) / (d - p - 1)


@settings(max_examples=60, deadline=None)
@given(N=dims, d=st.integers(2, 6), p=fractions, data=st.data())
def test_gcd_exponents(N, d, p, data):
    ell = data.draw(st.integers(1, d - 1))
    rep = classify(preset("gCD", dim=N, order=d, p=p, ell=ell).spec, kernel(N, d))
    assert rep.r_n == N * (p - 1) / (d - ell)
    assert rep.case == "A"


@settings(max_examples=60, deadline=None)
@given(ps=st.dictionaries(st.integers(0, 2), st.fractions(Fraction(1, 2), Fraction(3), max_denominator=6),
                          min_size=1, max_size=3),
       n=st.integers(0, 2))
def test_bracket_identity(ps, n):
    """``⟨p⟩_n = n + Σ (j - n) p_j`` and ``⟨p⟩_n - n = ⟨p⟩_0 - n|p|``."""
    ps = {j: v for j, v in ps.items() if j >= n}
    if not ps or sum(ps.values()) <= 1:
        return
    spec = StructureSpec(ell=0, m=2, n=n, p=ps, a={(0,): 1.0}, func=lambda t, s: 0.0)
    assert spec.p_bracket() == n + sum((j - n) * v for j, v in ps.items())
    assert spec.p_bracket() - n == spec.p_bracket(0) - n * spec.p_abs


def test_critical_case_has_infinite_exponent():
    pr = preset("HG", order=4, p=3)
    assert pr.derived["r_0"] == INF
    rep = classify(pr.variants[0], kernel(1, 4))
    assert rep.r_n == INF and rep.kappa == 0 and math.isinf(rep.r_float)


def test_classify_rejections():
    with pytest.raises(ValidationError):
        classify(preset("VHJ", p=2).spec, kernel(1, 1))
    # ⟨p⟩_0 = 3 exceeds d(1 + A) = 2
    spec = StructureSpec(ell=0, m=1, n=0, p={1: 3}, a={(0,): 1.0}, func=lambda t, s: 0.0)
    with pytest.raises(ValidationError, match="balance"):
        classify(spec, kernel(1, 2))


@pytest.mark.parametrize("kwargs", [dict(ell=0, m=1, n=2, p={1: 2}),
                                    dict(ell=0, m=1, n=1, p={0: 2}),
                                    dict(ell=0, m=0, n=0, p={0: 1}),
                                    dict(ell=0, m=0, n=0, p={0: 2}, A=-1),
                                    dict(ell=1, m=0, n=0, p={0: 2}, a={(0,): 1.0})])
def test_structure_spec_validation(kwargs):
    kwargs.setdefault("a", {})
    with pytest.raises(ValidationError):
        StructureSpec(family="SP", **kwargs)


def test_unknown_family():
    with pytest.raises(ValidationError):
        preset("XYZ")


def test_nonlinearity_examples():
    sp = preset("SP", p=3).spec
    assert evaluate_nonlinearity(sp, 1.0, [2.0]) == 8.0
    vhj = preset("VHJ", p=2).spec
    assert evaluate_nonlinearity(vhj, 1.0, [0.0, -3.0]) == 9.0
    hg = preset("HG", order=4, p=2).spec
    assert evaluate_nonlinearity(hg, 1.0, [0.0, -3.0]) == -9.0


@settings(max_examples=40, deadline=None)
@given(family=st.sampled_from(["SP", "VHJ", "gCD", "HG"]), p=st.floats(1.2, 4.0),
       z=st.lists(st.floats(-10.0, 10.0), min_size=4, max_size=4), t=st.floats(0.01, 10.0))
def test_envelope_holds_with_equality(family, p, z, t):
    spec = preset(family, order=4, p=p).spec
    state = [np.array(z), np.array(z[::-1])]
    F = evaluate_nonlinearity(spec, t, state)
    assert np.allclose(np.abs(F), envelope(spec, t, state), rtol=1e-12, atol=0)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(1.2, 4.0), z=st.lists(st.floats(-100.0, 100.0), min_size=3, max_size=3),
       eps=st.floats(1e-3, 10.0))
def test_clamp_bounds(p, z, eps):
    spec = preset("SP", p=p).spec
    F = lambda t, state, dim=1: evaluate_nonlinearity(spec, t, state, dim)
    Fe = truncate_nonlinearity(F, eps)
    state = [np.array(z)]
    assert np.all(np.abs(Fe(1.0, state)) <= np.minimum(1.0 / eps, np.abs(F(1.0, state))) + 1e-12)


def test_clamp_examples():
    spec = preset("SP", p=2).spec
    Fe = truncate_nonlinearity(lambda t, s, dim=1: evaluate_nonlinearity(spec, t, s, dim), 1.0)
    assert Fe(0.0, [np.array(3.0)]) == 1.0
    assert Fe(0.0, [np.array(0.5)]) == 0.25


def test_flux_components_2d():
    hg = preset("HG", dim=2, order=4, p=3).spec
    grad = np.array([[3.0], [4.0]])
    flux = flux_components(hg, 1.0, [np.zeros(1), grad], dim=2)
    # |∇u|^{p-1} ∂_i u with |∇u| = 5
    assert flux[(1, 0)] == pytest.approx([75.0])
    assert flux[(0, 1)] == pytest.approx([100.0])


def test_helpers():
    assert state_length(1, 2) == 3 and state_length(2, 2) == 7
    assert sorted(multi_indices(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert to_fraction(0.5) == Fraction(1, 2)
