"""Absolute and relative photon-pair flux.

Pulsed pumping
    ``N = K_p * (pi/2) * iint W(ws) W(wi) A_s(ws) A_i(wi) |F(ws, wi)|^2 dws dwi``
    with ``W(w) = w k'(w) / n_eff(w)^2`` and
    ``K_p = 2^5 c^2 n(w0)^2 L^2 gamma_fwm^2 p^2 / (pi^3 w0^2 sigma^2 R)``.
    F is the JSA computed with the unit-peak envelope, so it carries rad/s.
    The pair amplitude is taken as ``sqrt(pi/2) F``, hence the ``pi/2``; an
    extra factor sigma there would leave the result in s^-3 instead of s^-1.
Continuous-wave pumping
    ``N = K_c * int W(w) W(2wp - w) A_s(w) A_i(2wp - w) sinc^2(L dk_cw / 2) dw``
    with ``K_c = 2^5 c^2 n(wp)^2 L^2 gamma_fwm^2 p^2 / (pi wp^2)`` and
    ``dk_cw = 2 k(wp) - k(w) - k(2wp - w) - 2 gamma p``.

Both integrals are restricted to a rectangular window (a :class:`FilterSpec`)
and evaluated with Gauss-Legendre panels graded geometrically around every
cavity resonance; a second pass with every panel halved provides the
convergence estimate.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .constants import C
from .dispersion import dispersion_table
from .errors import CavsfwmError, DomainError, NumericalError
from .quadrature import graded_breaks, panel_rule, refine
from .spectral import (
    airy,
    effective_length,
    finesse_coefficient,
    free_spectral_range,
    jsa_no_cavity,
    mode_spacing,
)

SQRT2 = math.sqrt(2.0)


@dataclass
class FluxResult:
    rate: float
    reference_rate_nc: float = None
    ratio: float = None
    quadrature_meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GeomModelInputs:
    r2_mag: float
    delta_omega: float
    Delta_omega: float
    sigma_I: float
    config: str = "Csi"

    def __post_init__(self):
        if not 0.0 < self.r2_mag < 1.0:
            raise DomainError("r2_mag must lie in (0, 1)")
        if not 0.0 < self.delta_omega < self.Delta_omega:
            raise DomainError("need 0 < delta_omega < Delta_omega")
        if not self.sigma_I > 0:
            raise DomainError("sigma_I must be > 0")
        if self.config not in ("Csi", "Cs", "Ci"):
            raise DomainError("config must be 'Csi', 'Cs' or 'Ci'")


def _weight(omega, table):
    n = table.n_eff(omega)
    return omega * table.k_prime(omega) / (n * n)


def resonances(mu, fiber, cavity, lo, hi):
    """Resonance frequencies of mode ``mu`` in [lo, hi] (empty if non-resonant)."""
    if not cavity.mode(mu)[4]:
        return np.empty(0)
    _, _, d1, d2, _ = cavity.mode(mu)
    table = dispersion_table(fiber)
    leff = effective_length(fiber, cavity)
    mid = 0.5 * (lo + hi)
    fsr = free_spectral_range(fiber, mid, cavity)
    n = np.arange(math.floor((lo - mid) / fsr) - 1, math.ceil((hi - mid) / fsr) + 2)
    w = mid + n * fsr
    phase = 2.0 * table.k(w) * leff + d1 + d2
    m = np.round(phase / (2.0 * math.pi))
    w = w - (phase - 2.0 * math.pi * m) / (2.0 * leff * table.k_prime(w))
    for _ in range(3):
        phase = 2.0 * table.k(w) * leff + d1 + d2
        w = w - (phase - 2.0 * math.pi * m) / (2.0 * leff * table.k_prime(w))
    return np.sort(w[(w >= lo) & (w <= hi)])


def _resonance_width(fiber, cavity, center_s, center_i):
    """Smallest FWHM of the resonant modes (dispersive spacing), or None."""
    widths = []
    for mu, c in (("s", center_s), ("i", center_i)):
        r2, _, _, _, res = cavity.mode(mu)
        if res and r2 > 0:
            widths.append(2.0 * free_spectral_range(fiber, c, cavity)
                          / (math.pi * math.sqrt(finesse_coefficient(r2))))
    return min(widths) if widths else None


def _merge(points, tol):
    p = np.unique(np.asarray(points, dtype=float))
    if p.size < 2:
        return p
    keep = np.concatenate(([True], np.diff(p) > tol))
    return p[keep]


class _PairIntegral:
    """Nested panel quadrature of W W A_s A_i |F|^2 over a rectangular window."""

    def __init__(self, fiber, pump, cavity, window, panel_nodes=8, cheb_nodes=16,
                 jsa_nodes=201, outer_cut=8.0):
        self.fiber, self.pump, self.cavity, self.window = fiber, pump, cavity, window
        self.table = dispersion_table(fiber)
        self.panel_nodes = panel_nodes
        self.cheb_nodes = cheb_nodes
        self.jsa_nodes = jsa_nodes
        cs, ci = window.center_s, window.center_i
        self.cs, self.ci = cs, ci
        self.hs, self.hi = 0.5 * window.width_s, 0.5 * window.width_i
        self.s0 = 2.0 * pump.omega0 - cs - ci
        self.peaks_s = resonances("s", fiber, cavity, cs - self.hs, cs + self.hs) - cs
        self.peaks_i = resonances("i", fiber, cavity, ci - self.hi, ci + self.hi) - ci
        self.width = _resonance_width(fiber, cavity, cs, ci)
        sig = pump.sigma
        self.lo = max(-self.hs - self.hi, self.s0 - outer_cut * sig)
        self.hi_sum = min(self.hs + self.hi, self.s0 + outer_cut * sig)

    def outer_breaks(self):
        lo, hi = self.lo, self.hi_sum
        sig = self.pump.sigma
        pts = [lo, hi, self.hs - self.hi, self.hi - self.hs]
        pts.extend(self.s0 + 0.5 * sig * np.arange(-16, 17))
        if self.width is not None:
            # the inner integral changes quickly where two resonances coincide
            # and where a resonance crosses an edge of the other window
            ps, pi = self.peaks_s, self.peaks_i
            sums = [(ps[:, None] + pi[None, :]).ravel(), ps + self.hi, ps - self.hi,
                    pi + self.hs, pi - self.hs]
            sums = _merge(np.concatenate(sums), self.width / 8)
            pts.extend(graded_breaks(sums, self.width, lo, hi))
        b = np.unique(np.clip(pts, lo, hi))
        return b[np.concatenate(([True], np.diff(b) > 1e-12 * max(abs(lo), abs(hi), 1.0)))]

    def inner_breaks(self, ssum, ulo, uhi):
        centers = np.concatenate((self.peaks_s, ssum - self.peaks_i))
        if self.width is None or centers.size == 0:
            return np.array([ulo, uhi])
        return graded_breaks(_merge(centers, self.width / 8), self.width, ulo, uhi)

    def evaluate(self, level=0):
        """Integral with every panel split into ``2**level`` parts."""
        if self.lo >= self.hi_sum:
            return 0.0, {"outer_panels": 0, "points": 0}
        fac = 2**level
        ob = refine(self.outer_breaks(), fac)
        so, wo = panel_rule(ob, self.panel_nodes)
        ulo = np.maximum(-self.hs, so - self.hi)
        uhi = np.minimum(self.hs, so + self.hi)
        ok = uhi > ulo
        so, wo, ulo, uhi = so[ok], wo[ok], ulo[ok], uhi[ok]
        # |F|^2 is smooth in u on the window scale: Chebyshev interpolation per sum
        nc = self.cheb_nodes + 8 * level
        x = np.cos(math.pi * (np.arange(nc) + 0.5) / nc)
        mid, half = 0.5 * (ulo + uhi), 0.5 * (uhi - ulo)
        uc = mid[:, None] + half[:, None] * x[None, :]
        ws = self.cs + uc
        wi = self.ci + so[:, None] - uc
        f = jsa_no_cavity(ws, wi, self.fiber, self.pump, nodes=self.jsa_nodes)
        f2 = f.real**2 + f.imag**2
        coefs = _cheb.chebfit(x, f2.T, nc - 1).T
        total = 0.0
        npts = 0
        for j in range(so.size):
            ib = refine(self.inner_breaks(so[j], ulo[j], uhi[j]), fac)
            u, wu = panel_rule(ib, self.panel_nodes)
            xs = (u - mid[j]) / half[j]
            fsq = _cheb.chebval(xs, coefs[j])
            oms = self.cs + u
            omi = self.ci + so[j] - u
            g = _weight(oms, self.table) * _weight(omi, self.table) * fsq
            if self.cavity.resonant_s:
                g = g * airy(oms, "s", self.fiber, self.cavity, self.table.k)
            if self.cavity.resonant_i:
                g = g * airy(omi, "i", self.fiber, self.cavity, self.table.k)
            total += wo[j] * float(np.dot(wu, g))
            npts += u.size
        return total, {"outer_panels": int(ob.size - 1), "points": int(npts),
                       "chebyshev_nodes": int(nc)}


def _converged(fn, tol, label):
    v0, m0 = fn(0)
    v1, m1 = fn(1)
    est = abs(v1 - v0) / abs(v1) if v1 != 0 else 0.0
    meta = {"convergence_estimate": est, "tolerance": tol, "panels_coarse": m0, "panels_fine": m1}
    if not np.isfinite(v1) or est > tol:
        raise NumericalError(
            f"{label}: panel doubling changed the rate by {est:.3e} (> {tol:g})", estimate=est
        )
    return v1, meta


def pulsed_prefactor(fiber, pump):
    table = dispersion_table(fiber)
    n0 = float(table.n_eff(pump.omega0))
    w0 = pump.omega0
    return (2**5 * C**2 * n0**2 * fiber.length**2 * fiber.gamma_fwm**2 * pump.avg_power**2
            / (math.pi**3 * w0**2 * pump.sigma**2 * pump.rep_rate)) * (math.pi / 2.0)


def flux_pulsed(fiber, pump, cavity, window, tol=1e-4, reference=True, panel_nodes=8):
    """Pair rate (pairs/s) for a pulsed Gaussian pump, restricted to ``window``.

    The peak power entering the nonlinear phase is derived from the average
    power, repetition rate and transform-limited pulse duration.
    """
    pump = pump.with_derived_peak_power()
    pref = pulsed_prefactor(fiber, pump)

    def run(cav, label):
        integ = _PairIntegral(fiber, pump, cav, window, panel_nodes=panel_nodes)
        val, meta = _converged(integ.evaluate, tol, label)
        return pref * val, meta

    rate, meta = run(cavity, "pulsed flux")
    out = FluxResult(rate, quadrature_meta={"cavity": meta, "peak_power_W": pump.peak_power,
                                            "window": _window_meta(window)})
    if reference:
        if not (cavity.resonant_s or cavity.resonant_i):
            out.reference_rate_nc, ref_meta = rate, meta
        else:
            out.reference_rate_nc, ref_meta = run(cavity.without_cavity(), "pulsed reference flux")
        out.quadrature_meta["reference"] = ref_meta
        out.ratio = rate / out.reference_rate_nc if out.reference_rate_nc > 0 else float("nan")
    return out


def _window_meta(window):
    return {"center_s": window.center_s, "center_i": window.center_i,
            "width_s": window.width_s, "width_i": window.width_i}


def cw_prefactor(fiber, omega_p, avg_power):
    n = float(dispersion_table(fiber).n_eff(omega_p))
    return 2**5 * C**2 * n**2 * fiber.length**2 * fiber.gamma_fwm**2 * avg_power**2 / (math.pi * omega_p**2)


def _cw_integrand(w, omega_p, fiber, cavity, avg_power):
    table = dispersion_table(fiber)
    w2 = 2.0 * omega_p - w
    dk = 2.0 * table.k(omega_p) - (table.k(w) + table.k(w2)) - 2.0 * fiber.gamma * avg_power
    y = 0.5 * fiber.length * dk
    sinc = np.sinc(y / math.pi)
    g = _weight(w, table) * _weight(w2, table) * sinc * sinc
    if cavity.resonant_s:
        g = g * airy(w, "s", fiber, cavity, table.k)
    if cavity.resonant_i:
        g = g * airy(w2, "i", fiber, cavity, table.k)
    return g


def flux_cw(fiber, omega_p, avg_power, cavity, window, tol=1e-4, reference=True, panel_nodes=8):
    """Pair rate (pairs/s) for a monochromatic pump at ``omega_p``."""
    lo = max(window.center_s - 0.5 * window.width_s, 2.0 * omega_p - window.center_i - 0.5 * window.width_i)
    hi = min(window.center_s + 0.5 * window.width_s, 2.0 * omega_p - window.center_i + 0.5 * window.width_i)
    pref = cw_prefactor(fiber, omega_p, avg_power)

    def run(cav, label):
        if hi <= lo:
            return 0.0, {"empty_window": True}
        peaks = np.concatenate((resonances("s", fiber, cav, lo, hi),
                                2.0 * omega_p - resonances("i", fiber, cav, 2 * omega_p - hi, 2 * omega_p - lo)))
        width = _resonance_width(fiber, cav, window.center_s, window.center_i)
        if width is None:
            base = np.linspace(lo, hi, 9)
        else:
            base = graded_breaks(_merge(peaks, width / 8), width, lo, hi)

        def fn(level):
            x, w = panel_rule(refine(base, 2**level), panel_nodes)
            return float(np.dot(w, _cw_integrand(x, omega_p, fiber, cav, avg_power))), {
                "points": int(x.size)}

        val, meta = _converged(fn, tol, label)
        return pref * val, meta

    rate, meta = run(cavity, "cw flux")
    out = FluxResult(rate, quadrature_meta={"cavity": meta, "window": _window_meta(window)})
    if reference:
        out.reference_rate_nc, ref_meta = run(cavity.without_cavity(), "cw reference flux")
        out.quadrature_meta["reference"] = ref_meta
        out.ratio = rate / out.reference_rate_nc if out.reference_rate_nc > 0 else float("nan")
    return out


def zone_boundaries(fiber, cavity, center_s):
    """(delta_omega, sqrt(2) Delta_omega) of the signal mode; zones i/ii/iii lie above/between/below."""
    dw = mode_spacing(fiber, center_s, cavity)
    r2 = cavity.r2_s if cavity.resonant_s else cavity.r2_i
    lw = 2.0 * dw / (math.pi * math.sqrt(finesse_coefficient(r2))) if r2 > 0 else 0.0
    return lw, SQRT2 * dw


def zone_of(sigma_I, linewidth, upper):
    if sigma_I > upper:
        return "i"
    if sigma_I > linewidth:
        return "ii"
    return "iii"


def flux_ratio_sweep(fiber, pump, cavity, sigma_I_list, window, tol=1e-4, workers=1):
    """N/N_nc versus pump bandwidth at constant average power.

    Returns a dict with ``rows`` (sigma_I, rate, rate_nc, ratio), per-point
    ``errors`` (the sweep continues past failures) and the zone boundaries.
    """
    lw, upper = zone_boundaries(fiber, cavity, window.center_s)

    def point(sI):
        p = pump.from_sigma_I(pump.omega0, sI, avg_power=pump.avg_power, rep_rate=pump.rep_rate)
        try:
            r = flux_pulsed(fiber, p, cavity, window, tol=tol)
            return (sI, r.rate, r.reference_rate_nc, r.ratio), None
        except CavsfwmError as exc:
            return None, {"sigma_I": sI, "error": type(exc).__name__, "message": str(exc)}

    sig = [float(s) for s in sigma_I_list]
    if any(not s > 0 for s in sig):
        raise DomainError("every sigma_I must be > 0")
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            res = list(ex.map(point, sig))
    else:
        res = [point(s) for s in sig]
    rows = [r for r, e in res if r is not None]
    errors = [e for r, e in res if e is not None]
    return {
        "rows": rows,
        "errors": errors,
        "zones": {"delta_omega": lw, "sqrt2_Delta_omega": upper,
                  "labels": [zone_of(r[0], lw, upper) for r in rows]},
    }


def geom_a(r2, config):
    q = (1.0 + r2) / (1.0 - r2)
    return q * q if config == "Csi" else q


def geom_xi1(inp):
    return geom_a(inp.r2_mag, "Csi") * math.pi * inp.delta_omega**2 / (4.0 * inp.Delta_omega**2)


def geom_xi2(inp):
    if not inp.delta_omega < inp.sigma_I < SQRT2 * inp.Delta_omega:
        raise DomainError("xi2 is defined only in zone ii: delta_omega < sigma_I < sqrt(2) Delta_omega")
    a = geom_a(inp.r2_mag, "Csi")
    return a * math.pi * inp.delta_omega**2 / (
        4.0 * inp.sigma_I * (SQRT2 * inp.Delta_omega - inp.sigma_I / 2.0))


def geom_xi3(inp, sigma_I=None):
    s = inp.sigma_I if sigma_I is None else sigma_I
    if not s < inp.delta_omega:
        raise DomainError("xi3 is defined only in zone iii: sigma_I < delta_omega")
    return geom_a(inp.r2_mag, "Csi") * inp.delta_omega / (SQRT2 * inp.Delta_omega - s / 2.0)


def geom_model(inp):
    """Area-times-height estimate of N/N_nc and the small-bandwidth enhancement."""
    out = {"config": inp.config, "a": geom_a(inp.r2_mag, inp.config)}
    if inp.config != "Csi":
        out["xi"] = out["a"] * inp.delta_omega / inp.Delta_omega
        return out
    out["xi1"] = geom_xi1(inp)
    out["xi1_reflectivity_form"] = (1.0 + inp.r2_mag) ** 2 / (4.0 * math.pi * inp.r2_mag)
    zone = zone_of(inp.sigma_I, inp.delta_omega, SQRT2 * inp.Delta_omega)
    out["zone"] = zone
    if zone == "ii":
        out["xi2"] = geom_xi2(inp)
    elif zone == "iii":
        out["xi3"] = geom_xi3(inp)
    out["E"] = geom_xi3(inp, sigma_I=0.0) / out["xi1"]
    return out
