"""Joint spectral amplitude of SFWM and its modification by a cavity.

Conventions
-----------
Pump envelope ``alpha(w) = exp(-(w - w0)^2 / sigma^2)`` with unit peak, so the
intensity FWHM is ``sigma_I = sqrt(2 ln 2) sigma``.  ``sinc(x) = sin(x)/x``.
Spectral grids are indexed ``values[i_s, i_i]``: rows follow the signal axis.
"""
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .constants import C
from .dispersion import dispersion_table, group_slowness, effective_index
from .errors import ContractError, DomainError

CONFIGURATIONS = ("None", "Cs", "Ci", "Csi")
TOPOLOGIES = ("linear", "ring")
MODES = ("s", "i")


class QuadratureWarning(RuntimeWarning):
    """Node doubling changed a quadrature result by more than its tolerance."""


@dataclass(frozen=True)
class PumpSpec:
    """Gaussian pump.  ``sigma`` is the amplitude bandwidth (rad/s)."""

    omega0: float
    sigma: float
    peak_power: float = 0.0
    avg_power: float = 0.0
    rep_rate: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError("pump omega0 must be > 0")
        if not self.sigma > 0:
            raise DomainError("pump sigma must be > 0")
        if not (self.peak_power >= 0 and self.avg_power >= 0):
            raise DomainError("pump powers must be >= 0")
        if not self.rep_rate > 0:
            raise DomainError("rep_rate must be > 0")

    @property
    def sigma_I(self):
        return math.sqrt(2.0 * math.log(2.0)) * self.sigma

    @classmethod
    def from_sigma_I(cls, omega0, sigma_I, **kw):
        return cls(omega0, sigma_I / math.sqrt(2.0 * math.log(2.0)), **kw)

    @property
    def pulse_duration(self):
        """Intensity FWHM duration of the transform-limited pulse, 4 ln2 / sigma_I."""
        return 4.0 * math.log(2.0) / self.sigma_I

    def with_sigma(self, sigma):
        return replace(self, sigma=sigma)

    def with_derived_peak_power(self):
        """Return a copy with ``peak_power = avg_power / (rep_rate * pulse_duration)``."""
        return replace(self, peak_power=self.avg_power / (self.rep_rate * self.pulse_duration))


@dataclass(frozen=True)
class CavitySpec:
    """Mirror parameters for the signal (``_s``) and idler (``_i``) modes.

    A non-resonant mode has ``r2 = 0`` and ``t2 = 1`` (its Airy factor is 1).
    With ``lossless`` set, ``t2 = sqrt(1 - r2^2)``.  The ring topology drops
    mirror 1 (``delta1 = 0``) and uses half the circulation length.
    """

    r2_s: float = 0.0
    r2_i: float = 0.0
    t2_s: float = 1.0
    t2_i: float = 1.0
    delta1_s: float = 0.0
    delta2_s: float = 0.0
    delta1_i: float = 0.0
    delta2_i: float = 0.0
    topology: str = "linear"
    resonant_s: bool = False
    resonant_i: bool = False
    lossless: bool = True

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise DomainError(f"topology must be one of {TOPOLOGIES}")
        for mu in MODES:
            res = getattr(self, f"resonant_{mu}")
            r2 = getattr(self, f"r2_{mu}")
            if not res:
                object.__setattr__(self, f"r2_{mu}", 0.0)
                object.__setattr__(self, f"t2_{mu}", 1.0)
                continue
            if not 0.0 <= r2 < 1.0:
                raise DomainError(f"r2_{mu} must lie in [0, 1), got {r2}")
            if self.lossless:
                object.__setattr__(self, f"t2_{mu}", math.sqrt(1.0 - r2 * r2))
            elif not 0.0 <= getattr(self, f"t2_{mu}") <= 1.0:
                raise DomainError(f"t2_{mu} must lie in [0, 1]")
        if self.topology == "ring":
            object.__setattr__(self, "delta1_s", 0.0)
            object.__setattr__(self, "delta1_i", 0.0)

    @classmethod
    def from_configuration(cls, configuration, r2, topology="linear", **kw):
        """Symmetric mirrors resonant for the modes named by ``configuration``."""
        if configuration not in CONFIGURATIONS:
            raise DomainError(f"configuration must be one of {CONFIGURATIONS}")
        rs = configuration in ("Cs", "Csi")
        ri = configuration in ("Ci", "Csi")
        return cls(r2_s=r2, r2_i=r2, topology=topology, resonant_s=rs, resonant_i=ri, **kw)

    @property
    def configuration(self):
        return {(False, False): "None", (True, False): "Cs", (False, True): "Ci",
                (True, True): "Csi"}[(self.resonant_s, self.resonant_i)]

    def mode(self, mu):
        """(r2, t2, delta1, delta2, resonant) for mode ``mu``."""
        if mu not in MODES:
            raise DomainError(f"mode must be 's' or 'i', got {mu!r}")
        g = lambda name: getattr(self, f"{name}_{mu}")  # noqa: E731
        return g("r2"), g("t2"), g("delta1"), g("delta2"), g("resonant")

    def without_cavity(self):
        return replace(self, resonant_s=False, resonant_i=False)

    def tuned(self, mu, delta_total):
        """Copy with ``delta1 + delta2`` of mode ``mu`` set to ``delta_total``."""
        d1 = getattr(self, f"delta1_{mu}")
        return replace(self, **{f"delta2_{mu}": (delta_total - d1) % (2 * math.pi)})


@dataclass(frozen=True)
class FilterSpec:
    """Rectangular band-pass filters (full widths, rad/s)."""

    center_s: float
    center_i: float
    width_s: float
    width_i: float

    def __post_init__(self):
        if not (self.width_s > 0 and self.width_i > 0):
            raise DomainError("filter widths must be > 0")

    def mask(self, omega_s, omega_i):
        return (np.abs(omega_s - self.center_s) <= 0.5 * self.width_s) & (
            np.abs(omega_i - self.center_i) <= 0.5 * self.width_i
        )


@dataclass
class SpectralGrid:
    omega_s_axis: np.ndarray
    omega_i_axis: np.ndarray
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omega_s_axis = np.asarray(self.omega_s_axis, dtype=float)
        self.omega_i_axis = np.asarray(self.omega_i_axis, dtype=float)
        for ax in (self.omega_s_axis, self.omega_i_axis):
            check_uniform(ax)
        if self.values.shape != (self.omega_s_axis.size, self.omega_i_axis.size):
            raise ContractError("values shape does not match the axes")
        if self.kind not in ("amplitude", "intensity"):
            raise ContractError("kind must be 'amplitude' or 'intensity'")
        if self.kind == "intensity" and (np.iscomplexobj(self.values) or np.any(self.values < 0)):
            raise ContractError("intensity grids must be real and non-negative")

    @property
    def step_s(self):
        return self.omega_s_axis[1] - self.omega_s_axis[0]

    @property
    def step_i(self):
        return self.omega_i_axis[1] - self.omega_i_axis[0]


def check_uniform(axis, rtol=1e-9):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 2:
        raise ContractError("axis must be 1-D with at least two samples")
    d = np.diff(axis)
    if np.any(d <= 0):
        raise ContractError("axis must be strictly increasing")
    if np.max(np.abs(d - d.mean())) > rtol * abs(axis).max():
        raise ContractError("axis is not uniformly spaced")
    return d.mean()


def centered_axis(center, half_width, n):
    return center + np.linspace(-half_width, half_width, n)


def _kfun(fiber, wavenumber):
    return wavenumber if wavenumber is not None else dispersion_table(fiber).k


def pump_envelope(omega, pump):
    """Gaussian envelope alpha(w) with unit peak."""
    x = (np.asarray(omega, dtype=float) - pump.omega0) / pump.sigma
    return np.exp(-x * x)


def phase_mismatch(omega_s, omega_i, omega, fiber, pump, wavenumber=None):
    """Delta k = k(w) + k(ws + wi - w) - k(ws) - k(wi) - 2 gamma P  (rad/m)."""
    k = _kfun(fiber, wavenumber)
    omega_s, omega_i, omega = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (omega_s, omega_i, omega))
    )
    out = (k(omega) + k(omega_s + omega_i - omega)) - (k(omega_s) + k(omega_i))
    out = out - 2.0 * fiber.gamma * pump.peak_power
    return out if out.ndim else float(out)


def jsa_no_cavity(omega_s, omega_i, fiber, pump, nodes=201, window=5.0, wavenumber=None):
    """Cavity-free JSA F(ws, wi) by Gauss-Legendre quadrature over the pump frequency.

    The integration runs over ``sum/2 +- window*sigma`` where
    ``sum = ws + wi``, i.e. over the support of ``alpha(w) alpha(sum - w)``.
    Points sharing the same ``ws + wi`` share the node set, so the result is
    exactly symmetric under ``ws <-> wi``.
    """
    k = _kfun(fiber, wavenumber)
    ws, wi = np.broadcast_arrays(np.asarray(omega_s, float), np.asarray(omega_i, float))
    shape = ws.shape
    ws, wi = ws.ravel(), wi.ravel()
    total = ws + wi
    sums, group = np.unique(total, return_inverse=True)
    group = group.ravel()
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    half = window * pump.sigma
    om = 0.5 * sums[:, None] + half * x[None, :]
    om2 = sums[:, None] - om
    ksum = k(om) + k(om2)
    weight = (half * w)[None, :] * pump_envelope(om, pump) * pump_envelope(om2, pump)
    ksub = (k(ws) + k(wi)) + 2.0 * fiber.gamma * pump.peak_power
    out = kernels.jsa_sum(ksum, weight, group, ksub, fiber.length)
    return out.reshape(shape) if shape else complex(out[0])


def effective_length(fiber, cavity):
    return 0.5 * fiber.length if cavity is not None and cavity.topology == "ring" else fiber.length


def finesse_coefficient(r2_mag):
    """Coefficient of finesse 4 r / (1 - r)^2."""
    r = np.asarray(r2_mag, dtype=float)
    if np.any(~((r >= 0) & (r < 1))):
        raise DomainError("mirror reflectivity must satisfy 0 <= |r2| < 1")
    out = 4.0 * r / (1.0 - r) ** 2
    return float(out) if out.ndim == 0 else out


def round_trip_phase(omega, mu, fiber, cavity, wavenumber=None):
    """Delta(w) = 2 k(w) L + delta1 + delta2 (L -> L_r/2 for a ring)."""
    _, _, d1, d2, _ = cavity.mode(mu)
    k = _kfun(fiber, wavenumber)
    return 2.0 * k(np.asarray(omega, float)) * effective_length(fiber, cavity) + d1 + d2


def airy(omega, mu, fiber, cavity, wavenumber=None):
    """Intensity transfer factor of the cavity for mode ``mu``."""
    r2, t2, _, _, res = cavity.mode(mu)
    omega = np.asarray(omega, dtype=float)
    if not res:
        return np.ones_like(omega) if omega.ndim else 1.0
    f = finesse_coefficient(r2)
    s = np.sin(0.5 * round_trip_phase(omega, mu, fiber, cavity, wavenumber))
    out = (t2 * t2 / (1.0 - r2) ** 2) / (1.0 + f * s * s)
    return out if out.ndim else float(out)


def airy_amplitude(omega, mu, fiber, cavity, wavenumber=None):
    """Complex field transfer t2 / (1 - r2 exp(i Delta)); |.|^2 equals :func:`airy`."""
    r2, t2, _, _, res = cavity.mode(mu)
    omega = np.asarray(omega, dtype=float)
    if not res:
        return np.ones(omega.shape, dtype=complex) if omega.ndim else 1.0 + 0j
    d = round_trip_phase(omega, mu, fiber, cavity, wavenumber)
    return t2 / (1.0 - r2 * np.exp(1j * d))


def resonance_phase_offset(omega_target, mu, fiber, cavity, wavenumber=None):
    """delta1 + delta2 in [0, 2 pi) that puts a resonance of mode ``mu`` at ``omega_target``."""
    k = _kfun(fiber, wavenumber)
    beta2 = 2.0 * float(k(np.asarray(float(omega_target)))) * effective_length(fiber, cavity)
    off = (-beta2) % (2.0 * math.pi)
    return 0.0 if off == 2.0 * math.pi else off


def tune_cavity(cavity, fiber, center_s=None, center_i=None, wavenumber=None):
    """Set the mirror phases so each resonant mode has a resonance at its center."""
    for mu, c in (("s", center_s), ("i", center_i)):
        if c is not None and cavity.mode(mu)[4]:
            cavity = cavity.tuned(mu, resonance_phase_offset(c, mu, fiber, cavity, wavenumber))
    return cavity


def mode_spacing(fiber, center_omega, cavity=None):
    """Mode spacing pi c / (L n_eff) of the constant-index model."""
    n = effective_index(float(center_omega), fiber)
    return math.pi * C / (effective_length(fiber, cavity) * n)


def free_spectral_range(fiber, center_omega, cavity=None):
    """Actual resonance spacing pi / (L k') including dispersion of the index."""
    kp = float(group_slowness(float(center_omega), fiber))
    return math.pi / (effective_length(fiber, cavity) * kp)


def mode_width(fiber, cavity, mu, center_omega):
    """Resonance FWHM 2 dw / (pi sqrt(F)) with dw from :func:`mode_spacing`."""
    r2, _, _, _, res = cavity.mode(mu)
    if not res or r2 == 0:
        raise DomainError(f"mode {mu!r} is not resonant: mode has no cavity width")
    return 2.0 * mode_spacing(fiber, center_omega, cavity) / (math.pi * math.sqrt(finesse_coefficient(r2)))


def mode_filter(fiber, cavity, center_s, center_i, n_modes):
    """Rectangular filters ``n_modes`` resonance spacings wide around each center."""
    return FilterSpec(
        center_s, center_i,
        n_modes * free_spectral_range(fiber, center_s, cavity),
        n_modes * free_spectral_range(fiber, center_i, cavity),
    )


def _jsa_checked(ws, wi, fiber, pump, nodes, check, wavenumber):
    f = jsa_no_cavity(ws, wi, fiber, pump, nodes=nodes, wavenumber=wavenumber)
    meta = {"quadrature_nodes": int(nodes), "quadrature_window_sigma": 5.0}
    if check:
        f2 = jsa_no_cavity(ws, wi, fiber, pump, nodes=2 * nodes - 1, wavenumber=wavenumber)
        scale = np.max(np.abs(f2))
        est = float(np.max(np.abs(f2 - f)) / scale) if scale > 0 else 0.0
        meta["node_doubling_change"] = est
        if est > 1e-8:
            meta["warning"] = f"node doubling changed the JSA by {est:.3e} (> 1e-8)"
            warnings.warn(meta["warning"], QuadratureWarning, stacklevel=3)
    return f, meta


def jsa_grid(omega_s_axis, omega_i_axis, fiber, pump, cavity=None, filter=None,
             nodes=201, check=False, wavenumber=None):
    """Complex joint spectral amplitude G = F A_s A_i on a grid (mask applied)."""
    ws, wi = np.meshgrid(omega_s_axis, omega_i_axis, indexing="ij")
    f, meta = _jsa_checked(ws, wi, fiber, pump, nodes, check, wavenumber)
    if cavity is not None:
        f = f * airy_amplitude(ws, "s", fiber, cavity, wavenumber)
        f = f * airy_amplitude(wi, "i", fiber, cavity, wavenumber)
    if filter is not None:
        f = np.where(filter.mask(ws, wi), f, 0.0)
    meta["configuration"] = cavity.configuration if cavity is not None else "None"
    meta["filter"] = filter is not None
    return SpectralGrid(omega_s_axis, omega_i_axis, f, "amplitude", meta)


def jsi(omega_s_axis, omega_i_axis, fiber, pump, cavity=None, filter=None,
        nodes=201, check=False, wavenumber=None):
    """Joint spectral intensity S = |F|^2 A_s A_i (with Airy factors 1 for non-resonant modes)."""
    ws, wi = np.meshgrid(omega_s_axis, omega_i_axis, indexing="ij")
    f, meta = _jsa_checked(ws, wi, fiber, pump, nodes, check, wavenumber)
    s = f.real**2 + f.imag**2
    if cavity is not None:
        if cavity.resonant_s:
            s = s * airy(ws, "s", fiber, cavity, wavenumber)
        if cavity.resonant_i:
            s = s * airy(wi, "i", fiber, cavity, wavenumber)
    if filter is not None:
        s = np.where(filter.mask(ws, wi), s, 0.0)
    meta["configuration"] = cavity.configuration if cavity is not None else "None"
    meta["filter"] = filter is not None
    return SpectralGrid(omega_s_axis, omega_i_axis, s, "intensity", meta)
