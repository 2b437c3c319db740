"""Source design: phasematching, cavity finesse and predicted flux."""
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .constants import C, SELLMEIER_WINDOW_M
from .dispersion import wavenumber
from .errors import CavsfwmError, DomainError, InfeasibleDesignError, NumericalError
from .flux import flux_pulsed
from .spectral import (
    CavitySpec,
    PumpSpec,
    mode_filter,
    mode_spacing,
    mode_width,
    tune_cavity,
)

RECOMMENDED_SIGMA_I_OVER_LINEWIDTH = 5.0


@dataclass(frozen=True)
class TransitionTarget:
    omega_target: float
    linewidth: float

    def __post_init__(self):
        if not self.omega_target > 0:
            raise DomainError("omega_target must be > 0")
        if not self.linewidth > 0:
            raise DomainError("linewidth must be > 0")


@dataclass(frozen=True)
class DesignReport:
    omega_p: float
    omega_s: float
    omega_i: float
    wavelength_s: float
    wavelength_i: float
    target_mismatch: float
    length: float
    finesse: float
    r2: float
    Delta_omega_s: float
    Delta_omega_i: float
    delta_omega_s: float
    delta_omega_i: float
    sigma_I: float
    predicted_rate: float

    def to_text(self):
        """Flat ``key = value`` document, floats with 17 significant digits."""
        return "".join(f"{k} = {v:.17g}\n" for k, v in asdict(self).items())


def cw_mismatch(omega_s, omega_p, fiber, peak_power=0.0, strict=True):
    """2 k(wp) - k(ws) - k(2wp - ws) - 2 gamma P (rad/m)."""
    ws = np.asarray(omega_s, dtype=float)
    k = lambda w: wavenumber(w, fiber, strict)  # noqa: E731
    return 2.0 * k(omega_p) - (k(ws) + k(2.0 * omega_p - ws)) - 2.0 * fiber.gamma * peak_power


def phasematch_solve(fiber, omega_p, peak_power=0.0, scan_points=2000):
    """Non-degenerate phasematched pair (ws > wp, wi = 2 wp - ws).

    The signal frequency is scanned over ``(wp, min(band_hi, 2 wp - band_lo))``
    where the band is the Sellmeier window; unguided points are skipped.  Every
    sign change is refined by Brent's method and the root farthest from the
    pump is returned.
    """
    band_lo = 2.0 * math.pi * C / SELLMEIER_WINDOW_M[1]
    band_hi = 2.0 * math.pi * C / SELLMEIER_WINDOW_M[0]
    if not band_lo < omega_p < band_hi:
        raise DomainError("pump frequency outside the material band")
    top = min(band_hi, 2.0 * omega_p - band_lo)
    ws = np.linspace(omega_p, top, scan_points + 2)[1:-1]
    dk = cw_mismatch(ws, omega_p, fiber, peak_power, strict=False)
    finite = np.isfinite(dk)
    idx = np.flatnonzero(finite[:-1] & finite[1:] & (np.sign(dk[:-1]) * np.sign(dk[1:]) < 0))
    if idx.size == 0:
        raise NumericalError(
            f"no phasematched pair: no sign change of the mismatch for signal frequencies in "
            f"[{ws[0]:.6e}, {ws[-1]:.6e}] rad/s"
        )
    roots = []
    for j in idx:
        f = lambda w: float(cw_mismatch(w, omega_p, fiber, peak_power))  # noqa: E731
        roots.append(optimize.brentq(f, ws[j], ws[j + 1], xtol=1e-3, rtol=4 * np.finfo(float).eps))
    s = max(roots, key=lambda w: abs(w - omega_p))
    return s, 2.0 * omega_p - s


def required_finesse(target_linewidth, length, fiber, omega, cavity=None):
    """Coefficient of finesse and |r2| that give the target resonance width.

    Returns ``{"finesse": F, "r2": r2, "Delta_omega": dw}``.
    """
    if not target_linewidth > 0:
        raise DomainError("target linewidth must be > 0")
    dw = mode_spacing(fiber.with_length(length), omega, cavity)
    if target_linewidth >= dw:
        raise InfeasibleDesignError(
            f"linewidth {target_linewidth:.4g} rad/s is not below the mode spacing "
            f"{dw:.4g} rad/s at L = {length:g} m; the spacing grows as 1/L, so use a shorter cavity"
        )
    f = (2.0 * dw / (math.pi * target_linewidth)) ** 2
    r2 = r2_from_finesse(f)
    return {"finesse": f, "r2": r2, "Delta_omega": dw}


def r2_from_finesse(f):
    """Inverse of :func:`finesse_coefficient` on [0, 1)."""
    if f < 0:
        raise DomainError("finesse coefficient must be >= 0")
    if f == 0:
        return 0.0
    # (2 + F - 2 sqrt(1 + F)) / F written without cancellation
    q = math.sqrt(1.0 + f) - 1.0
    return q * q / f


def _staged(stage, exc):
    exc.args = (f"[{stage}] {exc.args[0] if exc.args else ''}",) + tuple(exc.args[1:])
    return exc


def design_report(fiber, pump, target, length, predict_flux=True, window_modes=1):
    """Compose phasematching, finesse and flux into a :class:`DesignReport`.

    The pump bandwidth is set to ``5 * linewidth`` first, so phasematching
    sees the peak power of the recommended pulses.  The signal resonance is
    placed at the phasematched signal frequency and the flux is computed for
    a Csi cavity with single-mode filters.
    """
    fib = fiber.with_length(length)
    sigma_I = RECOMMENDED_SIGMA_I_OVER_LINEWIDTH * target.linewidth
    p = PumpSpec.from_sigma_I(pump.omega0, sigma_I, avg_power=pump.avg_power,
                              rep_rate=pump.rep_rate).with_derived_peak_power()
    try:
        ws, wi = phasematch_solve(fib, p.omega0, p.peak_power)
    except CavsfwmError as exc:
        raise _staged("phasematch", exc)
    try:
        req = required_finesse(target.linewidth, length, fib, ws)
    except CavsfwmError as exc:
        raise _staged("finesse", exc)
    cav = CavitySpec.from_configuration("Csi", req["r2"])
    cav = tune_cavity(cav, fib, ws, wi)
    rate = float("nan")
    if predict_flux:
        try:
            rate = flux_pulsed(fib, p, cav, mode_filter(fib, cav, ws, wi, window_modes),
                               reference=False).rate
        except CavsfwmError as exc:
            raise _staged("flux", exc)
    return DesignReport(
        omega_p=pump.omega0,
        omega_s=ws,
        omega_i=wi,
        wavelength_s=2 * math.pi * C / ws,
        wavelength_i=2 * math.pi * C / wi,
        target_mismatch=ws - target.omega_target,
        length=length,
        finesse=req["finesse"],
        r2=req["r2"],
        Delta_omega_s=req["Delta_omega"],
        Delta_omega_i=mode_spacing(fib, wi, cav),
        delta_omega_s=mode_width(fib, cav, "s", ws),
        delta_omega_i=mode_width(fib, cav, "i", wi),
        sigma_I=sigma_I,
        predicted_rate=rate,
    )
