"""Step-index model of a photonic crystal fiber.

The PCF is replaced by a fused-silica core of radius ``a`` surrounded by a
homogeneous cladding whose index is an average of air and silica weighted by
the air-fill fraction.  The fundamental mode index is the root of the
characteristic equation of the step-index fiber, found by bracketed bisection
run down to machine precision (well below the 1e-12 relative requirement, so
that finite differences of ``k`` stay clean).

Two mode models are available:

``"vector"`` (default)
    exact HE11 equation of the step-index fiber.
``"scalar"``
    weak-guidance LP01 equation ``u J1(u)/J0(u) = w K1(w)/K0(w)``.

and two cladding rules, ``"linear"`` (default, ``n = f + (1-f) n_si``) and
``"permittivity"`` (``n^2 = f + (1-f) n_si^2``).  The defaults are the
combination that phasematches 1.064 um -> 0.852 um + 1.417 um for the
r = 0.68 um, f = 0.5 design fiber.
"""
import functools
import threading
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy import integrate, special

from .constants import (
    AIR_INDEX,
    C,
    J0_FIRST_ZERO,
    SELLMEIER_B,
    SELLMEIER_C,
    SELLMEIER_WINDOW_M,
    SILICA_N2_M2_PER_W,
)
from .errors import DomainError, ModeCutoffError, NumericalError

CLADDING_RULES = ("linear", "permittivity")
MODE_MODELS = ("vector", "scalar")


@dataclass(frozen=True)
class FiberSpec:
    """Fiber geometry and nonlinearity.

    ``length`` is the cavity (Bragg mirror) separation L; for a ring cavity it
    is the circulation length L_r.  ``gamma`` enters the nonlinear phase
    shift of the phase mismatch, ``gamma_fwm`` the pair-generation prefactor.
    When ``gamma_fwm`` is omitted it takes the value of ``gamma``.
    """

    core_radius: float
    air_fill_fraction: float
    length: float
    gamma: float = 0.0
    gamma_fwm: float = None
    cladding_rule: str = "linear"
    mode_model: str = "vector"

    def __post_init__(self):
        if self.gamma_fwm is None:
            object.__setattr__(self, "gamma_fwm", self.gamma)
        if not self.core_radius > 0:
            raise DomainError(f"core_radius must be > 0, got {self.core_radius}")
        if not 0.0 <= self.air_fill_fraction <= 1.0:
            raise DomainError(
                f"air_fill_fraction must lie in [0, 1], got {self.air_fill_fraction}"
            )
        if not self.length > 0:
            raise DomainError(f"length must be > 0, got {self.length}")
        if not self.gamma >= 0 or not self.gamma_fwm >= 0:
            raise DomainError("gamma and gamma_fwm must be >= 0")
        if self.cladding_rule not in CLADDING_RULES:
            raise DomainError(f"cladding_rule must be one of {CLADDING_RULES}")
        if self.mode_model not in MODE_MODELS:
            raise DomainError(f"mode_model must be one of {MODE_MODELS}")

    def with_length(self, length):
        return replace(self, length=length)

    @property
    def geometry_key(self):
        """Fields that determine dispersion (length and gamma do not)."""
        return (self.core_radius, self.air_fill_fraction, self.cladding_rule, self.mode_model)


@dataclass(frozen=True)
class DispersionSample:
    omega: float
    n_eff: float
    k: float
    k_prime: float


def silica_index(wavelength):
    """Refractive index of fused silica (Malitson Sellmeier fit).

    Parameters
    ----------
    wavelength : float or ndarray
        Vacuum wavelength in metres, within 0.21-6.7 um.
    """
    lam = np.asarray(wavelength, dtype=float)
    lo, hi = SELLMEIER_WINDOW_M
    if np.any(~((lam >= lo) & (lam <= hi))):
        raise DomainError(
            f"wavelength outside the Sellmeier validity window "
            f"[{lo * 1e6:.2f} um, {hi * 1e6:.2f} um]"
        )
    x2 = (lam * 1e6) ** 2
    total = 1.0
    for b, c in zip(SELLMEIER_B, SELLMEIER_C):
        total = total + b * x2 / (x2 - c * c)
    n = np.sqrt(total)
    return float(n) if n.ndim == 0 else n


def cladding_index(n_silica, air_fill_fraction, rule="linear"):
    """Homogenised cladding index of the air/silica lattice."""
    f = air_fill_fraction
    if rule == "linear":
        return f * AIR_INDEX + (1.0 - f) * n_silica
    if rule == "permittivity":
        return np.sqrt(f * AIR_INDEX**2 + (1.0 - f) * n_silica**2)
    raise DomainError(f"unknown cladding rule {rule!r}")


def _char_vector(u, V, n1, n2, k0a):
    # HE11 branch of the exact step-index eigenvalue equation; > 0 below the root
    w = np.sqrt(V * V - u * u)
    ne2 = n1 * n1 - (u / k0a) ** 2
    kp = -special.k0e(w) / (w * special.k1e(w)) - 1.0 / (w * w)
    inv = 1.0 / (u * u) + 1.0 / (w * w)
    a = (n1 * n1 - n2 * n2) / (2.0 * n1 * n1)
    r = np.sqrt(a * a * kp * kp + (ne2 / (n1 * n1)) * inv * inv)
    jr = special.j0(u) / (u * special.j1(u))
    return jr + (n1 * n1 + n2 * n2) / (2.0 * n1 * n1) * kp - 1.0 / (u * u) + r


def _char_scalar(u, V, n1, n2, k0a):
    w = np.sqrt(V * V - u * u)
    return w * special.k1e(w) / special.k0e(w) - u * special.j1(u) / special.j0(u)


_CHAR = {"vector": _char_vector, "scalar": _char_scalar}


def mode_parameters(omega, fiber, strict=True):
    """Solve the fundamental-mode eigenvalue problem.

    Returns a dict of arrays ``u``, ``w``, ``V``, ``n_core``, ``n_clad``,
    ``n_eff`` (scalars for scalar input).  With ``strict=False`` frequencies
    without a resolvable guided mode give NaN instead of raising.
    """
    omega = np.asarray(omega, dtype=float)
    scalar = omega.ndim == 0
    omega = np.atleast_1d(omega)
    if np.any(~(omega > 0)):
        raise DomainError("omega must be positive")
    lam = 2.0 * np.pi * C / omega
    n1 = np.atleast_1d(silica_index(lam))
    n2 = np.atleast_1d(cladding_index(n1, fiber.air_fill_fraction, fiber.cladding_rule))
    k0a = omega / C * fiber.core_radius
    if np.any(n2 >= n1):
        raise ModeCutoffError("cladding index is not below the core index; no guided mode")
    V = k0a * np.sqrt(n1 * n1 - n2 * n2)
    char = _CHAR[fiber.mode_model]

    umax = np.minimum(V, J0_FIRST_ZERO)
    lo = umax * 1e-6
    hi = umax * (1.0 - 1e-12)
    g_lo = char(lo, V, n1, n2, k0a)
    g_hi = char(hi, V, n1, n2, k0a)
    cut = ~(g_hi < 0)
    if not strict and np.any(cut):
        lo = np.where(cut, umax * 0.5, lo)
        hi = np.where(cut, umax * 0.5, hi)
    elif np.any(cut):
        bad = omega[cut][0]
        raise ModeCutoffError(
            f"fundamental mode not resolvable at omega={bad:.6e} rad/s "
            f"(lambda={2 * np.pi * C / bad * 1e6:.4f} um): mode too close to cutoff"
        )
    if np.any(~(g_lo > 0) & ~cut):
        raise NumericalError("eigenvalue bracket failed at the lower end (u -> 0)")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        done = (mid == lo) | (mid == hi)
        if np.all(done):
            break
        pos = char(mid, V, n1, n2, k0a) > 0
        lo = np.where(pos & ~done, mid, lo)
        hi = np.where(~pos & ~done, mid, hi)
    else:
        raise NumericalError("bisection on the eigenvalue equation did not terminate")
    u = np.where(cut, np.nan, 0.5 * (lo + hi))
    n_eff = np.sqrt(n1 * n1 - (u / k0a) ** 2)
    out = dict(u=u, w=np.sqrt(V * V - u * u), V=V, n_core=n1, n_clad=n2, n_eff=n_eff)
    if scalar:
        out = {k: float(v[0]) for k, v in out.items()}
    return out


def effective_index(omega, fiber, strict=True):
    """Effective index of the fundamental mode at angular frequency ``omega``."""
    return mode_parameters(omega, fiber, strict)["n_eff"]


def wavenumber(omega, fiber, strict=True):
    """Propagation constant k = n_eff omega / c in rad/m."""
    return effective_index(omega, fiber, strict) * np.asarray(omega, dtype=float) / C


_STENCILS = {
    3: ((-1, -0.5), (1, 0.5)),
    5: ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12)),
}


def group_slowness(omega, fiber, rel_step=1e-6, stencil=5):
    """k'(omega) = dk/domega by central finite differences (s/m).

    The default five-point stencil with step ``1e-6 * omega`` has a truncation
    error far below the rounding floor of ~1e-10 relative.
    """
    omega = np.asarray(omega, dtype=float)
    h = rel_step * omega
    try:
        coeffs = _STENCILS[stencil]
    except KeyError:
        raise DomainError("stencil must be 3 or 5") from None
    offsets = np.array([m for m, _ in coeffs], dtype=float)
    pts = omega[..., None] + offsets * h[..., None]
    try:
        k = wavenumber(pts.ravel(), fiber).reshape(pts.shape)
    except ModeCutoffError as exc:
        raise NumericalError(f"finite-difference stencil crosses mode cutoff: {exc}") from exc
    weights = np.array([wt for _, wt in coeffs])
    return (k * weights).sum(axis=-1) / h


def sample(omega, fiber):
    n = effective_index(omega, fiber)
    return DispersionSample(
        omega=float(omega),
        n_eff=float(n),
        k=float(n * omega / C),
        k_prime=float(group_slowness(omega, fiber)),
    )


def nonlinear_coefficient(omega, fiber, n2=SILICA_N2_M2_PER_W):
    """Estimate gamma = n2 omega / (c A_eff) from the fundamental mode field.

    The transverse field is approximated by the LP01 shape
    ``J0(u r/a)`` / ``K0(w r/a)`` built from the solved (u, w).
    """
    p = mode_parameters(float(omega), fiber)
    u, w, a = p["u"], p["w"], fiber.core_radius

    def core(r):
        return special.j0(u * r / a) / special.j0(u)

    def clad(r):
        return special.k0e(w * r / a) * np.exp(-w * (r / a - 1.0)) / special.k0e(w)

    def moment(power):
        ic = integrate.quad(lambda r: core(r) ** power * r, 0.0, a, epsabs=0, epsrel=1e-12)[0]
        io = integrate.quad(lambda r: clad(r) ** power * r, a, np.inf, epsabs=0, epsrel=1e-12)[0]
        return 2 * np.pi * (ic + io)

    a_eff = moment(2) ** 2 / moment(4)
    return n2 * omega / (C * a_eff)


class WavenumberTable:
    """Piecewise-Chebyshev interpolant of n_eff(omega) for bulk evaluation.

    The frequency axis is cut into fixed segments of width ``segment`` (an
    absolute grid, so results do not depend on evaluation order); each segment
    is fitted lazily by a degree-``degree`` Chebyshev interpolant of the
    direct eigenvalue solve.  Interpolation error is ~1e-16 relative.
    """

    def __init__(self, fiber, segment=1e13, degree=16):
        self.fiber = fiber
        self.segment = float(segment)
        self.degree = int(degree)
        self._coef = {}
        self._dcoef = {}
        self._lock = threading.Lock()

    def _build(self, idx):
        lo = idx * self.segment
        hi = lo + self.segment
        nodes = np.cos(np.pi * (np.arange(self.degree + 1) + 0.5) / (self.degree + 1))
        om = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
        try:
            n = effective_index(om, self.fiber)
        except DomainError:
            # segment straddles the guided/Sellmeier band edge: solve directly
            return None, None
        coef = _cheb.chebfit(nodes, n, self.degree)
        return coef, _cheb.chebder(coef) * (2.0 / (hi - lo))

    def _ensure(self, indices):
        missing = [i for i in indices if i not in self._coef]
        if not missing:
            return
        with self._lock:
            for i in missing:
                if i not in self._coef:
                    coef, dcoef = self._build(i)
                    self._dcoef[i] = dcoef
                    self._coef[i] = coef

    def _eval(self, omega, which):
        omega = np.asarray(omega, dtype=float)
        flat = omega.ravel()
        seg = np.floor(flat / self.segment).astype(np.int64)
        uniq, inv = np.unique(seg, return_inverse=True)
        inv = inv.ravel()
        self._ensure(uniq.tolist())
        out = np.empty_like(flat)
        table = self._coef if which == "n" else self._dcoef
        for j, s in enumerate(uniq):
            m = inv == j
            coef = table[int(s)]
            if coef is None:
                if which == "n":
                    out[m] = effective_index(flat[m], self.fiber)
                else:
                    # dn/dw from k' = (n + w n')/c
                    n = effective_index(flat[m], self.fiber)
                    out[m] = (group_slowness(flat[m], self.fiber) * C - n) / flat[m]
                continue
            x = (flat[m] - (s + 0.5) * self.segment) * (2.0 / self.segment)
            out[m] = _cheb.chebval(x, coef)
        return out.reshape(omega.shape)

    def n_eff(self, omega):
        return self._eval(omega, "n")

    def k(self, omega):
        omega = np.asarray(omega, dtype=float)
        return self._eval(omega, "n") * omega / C

    def k_prime(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (self._eval(omega, "n") + omega * self._eval(omega, "d")) / C


@functools.lru_cache(maxsize=64)
def _table_for(key):
    a, f, rule, model = key
    return WavenumberTable(FiberSpec(a, f, 1.0, cladding_rule=rule, mode_model=model))


def dispersion_table(fiber):
    """Shared (cached) :class:`WavenumberTable` for the fiber's geometry."""
    return _table_for(fiber.geometry_key)
