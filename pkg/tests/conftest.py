"""Shared, session-cached kernel profiles and certified constants."""
import pytest

from majorant_pde.kernels import make_profile
from majorant_pde.majorant import (MajorantConstants, certify_composition, certify_domination,
                                   make_majorant)
from majorant_pde.samples import composition_samples, kernel_samples


@pytest.fixture(scope="session")
def poisson_1d():
    return make_profile(1.0, dim=1, budget=2)


@pytest.fixture(scope="session")
def gauss_1d():
    return make_profile(2.0, dim=1, budget=2)


@pytest.fixture(scope="session")
def biharmonic_1d():
    return make_profile(4.0, dim=1, budget=2)


@pytest.fixture(scope="session")
def gauss_2d():
    return make_profile(2.0, dim=2, budget=2)


@pytest.fixture(scope="session")
def majorant_d2(poisson_1d):
    return make_majorant(poisson_1d, 2.0, 1.0)


@pytest.fixture(scope="session")
def majorant_d4(poisson_1d):
    return make_majorant(poisson_1d, 4.0, 1.0)


@pytest.fixture(scope="session")
def certified_d2(gauss_1d, majorant_d2):
    """Domination constants ``c_0..c_2`` and ``C_*`` for ``d = 2, θ = 1``."""
    dom = certify_domination(gauss_1d, majorant_d2, 2, kernel_samples(2.0, 1, n=256))
    comp = certify_composition(majorant_d2, composition_samples(2.0, 1, n=64))
    return dom, comp


@pytest.fixture(scope="session")
def constants_factory(certified_d2):
    """``MajorantConstants`` for a structure spec paired with ``d = 2``."""
    dom, comp = certified_d2

    def make(spec):
        return MajorantConstants.assemble(dom.c[: spec.ell + spec.m + 1], comp.C_star, a_sum=spec.a_sum)

    return make
