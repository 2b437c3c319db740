import math

import numpy as np
import pytest
from scipy import ndimage

from cavsfwm import (
    CavitySpec,
    ContractError,
    DomainError,
    FiberSpec,
    FilterSpec,
    PumpSpec,
    airy,
    effective_index,
    finesse_coefficient,
    free_spectral_range,
    jsa_grid,
    jsa_no_cavity,
    jsi,
    mode_filter,
    mode_spacing,
    mode_width,
    phase_mismatch,
    pump_envelope,
    resonance_phase_offset,
    tune_cavity,
)
from cavsfwm.constants import C
from cavsfwm.design import r2_from_finesse
from cavsfwm.spectral import QuadratureWarning, centered_axis, check_uniform

from conftest import OMEGA_P, um_to_omega

SIGMA = 8e10


def frozen_k(fiber, omega0):
    """Wavenumber with the index frozen at ``omega0`` (constant-index model)."""
    n0 = effective_index(omega0, fiber)
    return lambda w: n0 * np.asarray(w, dtype=float) / C


# ---------------------------------------------------------------- pump & mismatch


def test_pump_envelope_convention():
    p = PumpSpec(OMEGA_P, SIGMA)
    assert pump_envelope(OMEGA_P, p) == 1.0
    assert pump_envelope(OMEGA_P + SIGMA, p) == pytest.approx(math.exp(-1.0), rel=1e-15)
    d = 0.37 * SIGMA
    assert pump_envelope(OMEGA_P + d, p) == pump_envelope(OMEGA_P - d, p)


def test_sigma_I_is_intensity_fwhm():
    p = PumpSpec(OMEGA_P, SIGMA)
    half = p.sigma_I / 2.0
    assert pump_envelope(OMEGA_P + half, p) ** 2 == pytest.approx(0.5, rel=1e-11)


def test_pulse_duration_and_peak_power():
    p = PumpSpec.from_sigma_I(OMEGA_P, 0.164e9, avg_power=0.3, rep_rate=1e5)
    assert p.pulse_duration == pytest.approx(16.9e-9, rel=2e-3)
    assert p.with_derived_peak_power().peak_power == pytest.approx(0.3 / (1e5 * p.pulse_duration))


def test_pump_validation():
    with pytest.raises(DomainError):
        PumpSpec(OMEGA_P, 0.0)
    with pytest.raises(DomainError):
        PumpSpec(-1.0, SIGMA)


def test_mismatch_degenerate_zero(fiber1cm):
    p = PumpSpec(OMEGA_P, SIGMA)
    f0 = FiberSpec(fiber1cm.core_radius, fiber1cm.air_fill_fraction, 0.01)
    assert phase_mismatch(OMEGA_P, OMEGA_P, OMEGA_P, f0, p) == 0.0


def test_mismatch_swap_symmetry(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA, peak_power=3.0)
    ws, wi = centers[0] + 1e11, centers[1] - 3e10
    w = OMEGA_P + 2e10
    assert phase_mismatch(ws, wi, w, fiber1cm, p) == phase_mismatch(wi, ws, w, fiber1cm, p)


def test_mismatch_nonlinear_shift(centers):
    lin = FiberSpec(0.68e-6, 0.5, 0.01, gamma=0.0)
    nl = FiberSpec(0.68e-6, 0.5, 0.01, gamma=0.5)
    p = PumpSpec(OMEGA_P, SIGMA, peak_power=1.0)
    assert phase_mismatch(OMEGA_P, OMEGA_P, OMEGA_P, nl, p) == -1.0
    ws, wi = centers
    d = phase_mismatch(ws, wi, OMEGA_P, nl, p) - phase_mismatch(ws, wi, OMEGA_P, lin, p)
    assert d == pytest.approx(-1.0, abs=1e-12)


# ---------------------------------------------------------------- cavity-free JSA


def test_jsa_exchange_symmetry(fiber1cm):
    ax = centered_axis(OMEGA_P, 4e11, 65)
    p = PumpSpec(OMEGA_P, SIGMA)
    ws, wi = np.meshgrid(ax, ax, indexing="ij")
    f = jsa_no_cavity(ws, wi, fiber1cm, p)
    assert np.max(np.abs(f - f.T)) <= 1e-12 * np.max(np.abs(f))


def test_jsa_peak_on_energy_conservation_locus(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA)
    ws = centered_axis(centers[0], 6e11, 121)
    wi = centered_axis(centers[1], 6e11, 121)
    g = jsa_grid(ws, wi, fiber1cm, p)
    k = np.unravel_index(np.argmax(np.abs(g.values)), g.values.shape)
    step = ws[1] - ws[0]
    assert abs(ws[k[0]] + wi[k[1]] - 2 * OMEGA_P) <= 2 * step


def test_jsa_node_doubling(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA)
    ws = centered_axis(centers[0], 3e11, 31)
    wi = centered_axis(centers[1], 3e11, 31)
    g = jsa_grid(ws, wi, fiber1cm, p, check=True)
    assert g.meta["node_doubling_change"] < 1e-8


def test_jsa_quadrature_warning(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA)
    ws = centered_axis(centers[0], 3e11, 9)
    with pytest.warns(QuadratureWarning):
        jsa_grid(ws, ws - centers[0] + centers[1], fiber1cm, p, nodes=5, check=True)


def test_scalar_and_array_inputs_agree(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA)
    ws, wi = centers[0] + 1e10, centers[1]
    a = jsa_no_cavity(ws, wi, fiber1cm, p)
    b = jsa_no_cavity(np.array([ws]), np.array([wi]), fiber1cm, p)[0]
    assert a == b


# ---------------------------------------------------------------- finesse & Airy


@pytest.mark.parametrize("r2, expected, rel", [(0.8, 80.0, 1e-12), (0.992, 6.2e4, 1e-2),
                                               (0.998, 9.98e5, 1e-3), (0.0, 0.0, 0.0)])
def test_finesse_coefficient(r2, expected, rel):
    assert finesse_coefficient(r2) == pytest.approx(expected, rel=rel, abs=0.0)


@pytest.mark.parametrize("bad", [-0.1, 1.0, 1.2])
def test_finesse_domain(bad):
    with pytest.raises(DomainError):
        finesse_coefficient(bad)


def test_airy_non_resonant_is_one(fiber1cm):
    cav = CavitySpec(r2_s=0.0, t2_s=1.0)
    w = np.linspace(2.2e15, 2.3e15, 11)
    assert np.all(airy(w, "s", fiber1cm, cav) == 1.0)


def test_airy_extremes(fiber1cm, centers):
    ws = centers[0]
    cav = tune_cavity(CavitySpec.from_configuration("Cs", 0.8), fiber1cm, ws)
    assert airy(ws, "s", fiber1cm, cav) == pytest.approx(9.0, rel=1e-12)
    # antiresonance: shift the mirror phase by pi
    anti = cav.tuned("s", cav.delta1_s + cav.delta2_s + math.pi)
    assert airy(ws, "s", fiber1cm, anti) == pytest.approx(1.0 / 9.0, rel=1e-12)


def test_resonance_offset_contract(fiber1cm, centers):
    cav = CavitySpec.from_configuration("Csi", 0.8)
    for mu, w in zip("si", centers):
        off = resonance_phase_offset(w, mu, fiber1cm, cav)
        assert 0.0 <= off < 2 * math.pi
    tuned = tune_cavity(cav, fiber1cm, *centers)
    peak = (1 + 0.8) / (1 - 0.8)
    assert airy(centers[0], "s", fiber1cm, tuned) == pytest.approx(peak, rel=1e-12)
    assert airy(centers[1], "i", fiber1cm, tuned) == pytest.approx(peak, rel=1e-12)


@pytest.mark.xfail(strict=True, reason=(
    "group/phase index ratio of this fiber is 1.071, so the round-trip phase at "
    "w + dw/2 is 1.071 pi and the Airy value is 1.25% above the minimum"))
def test_half_spacing_is_near_minimum(fiber1cm, centers):
    ws = centers[0]
    cav = tune_cavity(CavitySpec.from_configuration("Cs", 0.8), fiber1cm, ws)
    dw = mode_spacing(fiber1cm, ws, cav)
    val = airy(ws + dw / 2, "s", fiber1cm, cav)
    assert val == pytest.approx((1 - 0.8) / (1 + 0.8), rel=1e-2)


def test_half_spacing_is_minimum_with_frozen_index(fiber1cm, centers):
    ws = centers[0]
    k = frozen_k(fiber1cm, ws)
    cav = tune_cavity(CavitySpec.from_configuration("Cs", 0.8), fiber1cm, ws, wavenumber=k)
    dw = mode_spacing(fiber1cm, ws, cav)
    assert airy(ws + dw / 2, "s", fiber1cm, cav, k) == pytest.approx(1 / 9, rel=1e-9)


def test_local_periodicity_with_frozen_index(fiber1cm, centers):
    ws = centers[0]
    k = frozen_k(fiber1cm, ws)
    cav = tune_cavity(CavitySpec.from_configuration("Cs", 0.8), fiber1cm, ws, wavenumber=k)
    dw = mode_spacing(fiber1cm, ws, cav)
    w = ws + np.linspace(-2.0, 2.0, 41) * dw
    a = airy(w, "s", fiber1cm, cav, k)
    b = airy(w + dw, "s", fiber1cm, cav, k)
    assert np.max(np.abs(a / b - 1.0)) < 1e-9


def _fwhm(x, y):
    half = y.max() / 2
    above = np.flatnonzero(y >= half)
    i0, i1 = above[0], above[-1]
    left = np.interp(half, [y[i0 - 1], y[i0]], [x[i0 - 1], x[i0]])
    right = np.interp(half, [y[i1 + 1], y[i1]], [x[i1 + 1], x[i1]])
    return right - left


@pytest.mark.parametrize("r2", [0.8, 0.95, 0.992])
def test_airy_fwhm_matches_width_formula(fiber1cm, centers, r2):
    ws = centers[0]
    k = frozen_k(fiber1cm, ws)
    cav = tune_cavity(CavitySpec.from_configuration("Cs", r2), fiber1cm, ws, wavenumber=k)
    lw = mode_width(fiber1cm, cav, "s", ws)
    x = ws + np.linspace(-3, 3, 20001) * lw
    assert _fwhm(x, airy(x, "s", fiber1cm, cav, k)) == pytest.approx(lw, rel=2e-2)


def test_airy_fwhm_with_dispersion_follows_group_index(fiber1cm, centers):
    ws = centers[0]
    cav = tune_cavity(CavitySpec.from_configuration("Cs", 0.8), fiber1cm, ws)
    fsr = free_spectral_range(fiber1cm, ws, cav)
    expected = 2 * fsr / (math.pi * math.sqrt(80.0))
    x = ws + np.linspace(-3, 3, 20001) * expected
    assert _fwhm(x, airy(x, "s", fiber1cm, cav)) == pytest.approx(expected, rel=2e-2)


def test_airy_bounds_lossy_mirror(fiber1cm, centers):
    cav = CavitySpec(r2_s=0.8, t2_s=0.5, resonant_s=True, lossless=False)
    w = centers[0] + np.linspace(-1e11, 1e11, 501)
    a = airy(w, "s", fiber1cm, cav)
    assert a.max() <= 0.25 / 0.04 * (1 + 1e-12)


# ---------------------------------------------------------------- spacing & width


def test_mode_spacing_design_fiber(fiber5cm):
    dw = mode_spacing(fiber5cm, um_to_omega(0.852))
    assert dw == pytest.approx(1.35e10, rel=0.05)


def test_mode_spacing_scaling(fiber1cm):
    w = um_to_omega(0.852)
    assert mode_spacing(fiber1cm.with_length(0.02), w) == mode_spacing(fiber1cm, w) / 2


def test_mode_spacing_oracle(fiber1cm):
    # n_eff(0.852 um) from the independent eigenvalue oracle
    expected = math.pi * C / (0.01 * 1.399023204354029866)
    assert mode_spacing(fiber1cm, um_to_omega(0.852)) == pytest.approx(expected, rel=1e-14)


def test_ring_uses_half_length(fiber1cm):
    w = um_to_omega(0.852)
    ring = CavitySpec.from_configuration("Cs", 0.8, topology="ring", delta1_s=1.0)
    assert ring.delta1_s == 0.0
    assert mode_spacing(fiber1cm, w, ring) == pytest.approx(2 * mode_spacing(fiber1cm, w), rel=1e-15)


def test_mode_width_design_value(fiber5cm):
    cav = CavitySpec.from_configuration("Csi", r2_from_finesse(6.2e4))
    lw = mode_width(fiber5cm, cav, "s", um_to_omega(0.852))
    assert lw == pytest.approx(2 * math.pi * 5.22e6, rel=0.07)


def test_mode_width_identities(fiber1cm):
    w = um_to_omega(0.852)
    cav = CavitySpec.from_configuration("Csi", 0.8)
    ratio = mode_width(fiber1cm, cav, "s", w) / mode_spacing(fiber1cm, w, cav)
    assert ratio == pytest.approx(2 / (math.pi * math.sqrt(80.0)), rel=1e-14)
    cav4 = CavitySpec.from_configuration("Csi", r2_from_finesse(320.0))
    assert mode_width(fiber1cm, cav4, "s", w) == pytest.approx(mode_width(fiber1cm, cav, "s", w) / 2, rel=1e-12)


def test_mode_width_non_resonant(fiber1cm):
    with pytest.raises(DomainError, match="not resonant"):
        mode_width(fiber1cm, CavitySpec.from_configuration("Cs", 0.8), "i", um_to_omega(1.4))


def test_cavity_validation():
    with pytest.raises(DomainError):
        CavitySpec(r2_s=1.0, resonant_s=True)
    with pytest.raises(DomainError):
        CavitySpec(topology="triangle")
    with pytest.raises(DomainError):
        CavitySpec.from_configuration("Cx", 0.5)
    c = CavitySpec(r2_s=0.7, resonant_s=False)
    assert (c.r2_s, c.t2_s) == (0.0, 1.0)


def test_configuration_names():
    for name in ("None", "Cs", "Ci", "Csi"):
        assert CavitySpec.from_configuration(name, 0.5).configuration == name


# ---------------------------------------------------------------- JSI


def test_jsi_non_resonant_equals_cavity_free(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA)
    ws = centered_axis(centers[0], 2e11, 41)
    wi = centered_axis(centers[1], 2e11, 41)
    a = jsi(ws, wi, fiber1cm, p, CavitySpec()).values
    b = np.abs(jsa_grid(ws, wi, fiber1cm, p).values) ** 2
    assert np.max(np.abs(a - b)) <= 1e-12 * b.max()


def test_jsi_cavity_free_limit_bitwise(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA)
    ws = centered_axis(centers[0], 2e11, 33)
    wi = centered_axis(centers[1], 2e11, 33)
    zero = CavitySpec(r2_s=0.0, r2_i=0.0, resonant_s=True, resonant_i=True)
    a = jsi(ws, wi, fiber1cm, p, zero)
    b = jsi(ws, wi, fiber1cm, p, None)
    assert np.array_equal(a.values, b.values)
    assert a.meta["configuration"] == "Csi" and b.meta["configuration"] == "None"


def test_jsi_is_amplitude_squared(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA)
    cav = tune_cavity(CavitySpec.from_configuration("Csi", 0.8), fiber1cm, *centers)
    ws = centered_axis(centers[0], 1e11, 31)
    wi = centered_axis(centers[1], 1e11, 31)
    a = jsi(ws, wi, fiber1cm, p, cav).values
    g = jsa_grid(ws, wi, fiber1cm, p, cav).values
    assert np.allclose(a, np.abs(g) ** 2, rtol=1e-12, atol=0)


def test_filter_is_hard_mask(fiber1cm, centers):
    p = PumpSpec(OMEGA_P, SIGMA)
    flt = FilterSpec(centers[0], centers[1], 1e11, 1e11)
    ws = centered_axis(centers[0], 1e11, 41)
    wi = centered_axis(centers[1], 1e11, 41)
    a = jsi(ws, wi, fiber1cm, p, None, flt).values
    b = jsi(ws, wi, fiber1cm, p).values
    m = flt.mask(*np.meshgrid(ws, wi, indexing="ij"))
    assert np.all(a[~m] == 0.0) and np.array_equal(a[m], b[m])
    with pytest.raises(DomainError):
        FilterSpec(0.0, 0.0, 0.0, 1.0)


def _fig2_jsi(fiber, centers, conf, n=256):
    p = PumpSpec(OMEGA_P, SIGMA)
    cav = tune_cavity(CavitySpec.from_configuration(conf, 0.8), fiber, *centers)
    flt = mode_filter(fiber, cav, *centers, 5)
    hw = 0.51 * max(flt.width_s, flt.width_i)
    ws = centered_axis(centers[0], hw, n)
    wi = centered_axis(centers[1], hw, n)
    return jsi(ws, wi, fiber, p, cav, flt), cav


def _local_maxima(v, rel=0.05):
    peak = ndimage.maximum_filter(v, size=5, mode="constant") == v
    return np.argwhere(peak & (v > rel * v.max()))


def test_csi_checkerboard(fiber1cm, centers):
    g, cav = _fig2_jsi(fiber1cm, centers, "Csi")
    pk = _local_maxima(g.values)
    fsr_s = free_spectral_range(fiber1cm, centers[0], cav)
    fsr_i = free_spectral_range(fiber1cm, centers[1], cav)
    # the five-mode filters admit at most a 5 x 5 lattice, weighted along the anti-diagonal
    assert 5 <= len(pk) <= 25
    xs = np.unique(np.round((g.omega_s_axis[pk[:, 0]] - centers[0]) / fsr_s))
    xi = np.unique(np.round((g.omega_i_axis[pk[:, 1]] - centers[1]) / fsr_i))
    assert len(xs) == 5 and len(xi) == 5
    # each maximum sits on a lattice point within one grid step
    off_s = g.omega_s_axis[pk[:, 0]] - centers[0]
    off_i = g.omega_i_axis[pk[:, 1]] - centers[1]
    assert np.all(np.abs(off_s - fsr_s * np.round(off_s / fsr_s)) <= g.step_s)
    assert np.all(np.abs(off_i - fsr_i * np.round(off_i / fsr_i)) <= g.step_i)


def test_cs_modes_elongated_along_idler(fiber1cm, centers):
    g, cav = _fig2_jsi(fiber1cm, centers, "Cs")
    v = g.values
    lw = mode_width(fiber1cm, cav, "s", centers[0])
    row = v[np.argmax(v.max(axis=1))]
    col = v[:, np.argmax(v.max(axis=0))]
    width_i = np.count_nonzero(row > row.max() / 2) * g.step_i
    width_s = np.count_nonzero(col > col.max() / 2) * g.step_s
    # along the signal axis the half-maximum set is a few cavity lines of width
    # about delta_omega; along the idler axis it spans the pump bandwidth
    assert width_i > 5 * width_s
    assert width_s < 6 * lw * 5


def test_check_uniform():
    check_uniform(np.linspace(0, 1, 11))
    with pytest.raises(ContractError):
        check_uniform(np.array([0.0, 1.0, 3.0]))
    with pytest.raises(ContractError):
        check_uniform(np.array([1.0]))
