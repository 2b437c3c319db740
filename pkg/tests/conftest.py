import math

import numpy as np
import pytest

from cavsfwm import FiberSpec, nonlinear_coefficient, phasematch_solve
from cavsfwm.constants import C

CORE_RADIUS = 0.68e-6
AIR_FILL = 0.5
OMEGA_P = 2.0 * math.pi * C / 1.064e-6


def um_to_omega(lam_um):
    return 2.0 * math.pi * C / (lam_um * 1e-6)


@pytest.fixture(scope="session")
def gamma_pcf():
    """Shipped gamma assumption: the effective-area estimate at the pump."""
    return nonlinear_coefficient(OMEGA_P, FiberSpec(CORE_RADIUS, AIR_FILL, 0.01))


@pytest.fixture(scope="session")
def fiber1cm(gamma_pcf):
    return FiberSpec(CORE_RADIUS, AIR_FILL, 0.01, gamma=gamma_pcf)


@pytest.fixture(scope="session")
def fiber5cm(gamma_pcf):
    return FiberSpec(CORE_RADIUS, AIR_FILL, 0.05, gamma=gamma_pcf)


@pytest.fixture(scope="session")
def centers(fiber1cm):
    """Linear phasematched (signal, idler) pair for the 1.064 um pump."""
    return phasematch_solve(fiber1cm, OMEGA_P)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def closed_form_fft_error(M, delta_over_Delta, sigma, n=512, pad=4, exact=False):
    """Largest pointwise gap, relative to the peak, between the closed-form JTI
    and the zero-padded FFT of the Gaussian-mode JSA sampled on an n x n grid."""
    from cavsfwm.spectral import SpectralGrid
    from cavsfwm.temporal import (
        ClosedFormParams,
        jsa_gaussian_modes,
        jti_closed_form,
        jti_gaussian_modes_exact,
        jti_numeric,
    )

    Dw = 1.0e10
    p = ClosedFormParams(delta_over_Delta * Dw, Dw, sigma, M)
    half = M * Dw + 9.0 * p.delta_omega
    nu = np.linspace(-half, half, n)
    ns, ni = np.meshgrid(nu, nu, indexing="ij")
    g = SpectralGrid(nu, nu, jsa_gaussian_modes(ns, ni, p).astype(complex), "amplitude")
    j = jti_numeric(g, pad=pad)
    ts, ti = np.meshgrid(j.t_s_axis, j.t_i_axis, indexing="ij")
    tm = (ts - ti) / math.sqrt(2.0)
    tp = (ts + ti) / math.sqrt(2.0)
    ref = (jti_gaussian_modes_exact if exact else jti_closed_form)(tm, tp, p)
    num = j.values
    k0 = np.unravel_index(np.argmin(np.abs(ts) + np.abs(ti)), ts.shape)
    num = num / num[k0]
    ref = ref / ref[k0]
    return float(np.max(np.abs(num - ref)) / ref.max())
