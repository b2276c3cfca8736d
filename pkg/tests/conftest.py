import pytest

from rose import MediumSpec


@pytest.fixture
def er_medium():
    return MediumSpec(alphaL=0.71, L=7.5e-3, T1=10e-3, T2=230e-6, wavelength=1.536e-6,
                      inhom_halfwidth=2.5e6)
