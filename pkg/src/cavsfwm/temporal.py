"""Joint temporal amplitude and intensity.

Fourier convention: ``f(ts, ti) = (1/2pi) iint G(ws, wi) exp(-i(ws ts + wi ti)) dws dwi``
so that ``iint |G|^2 dw dw = iint |f|^2 dt dt``.  With this sign a cavity
delay ``exp(+i w tau)`` appears at ``t = +tau``.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, ndimage

from .dispersion import group_slowness
from .errors import ContractError, DomainError
from .spectral import SpectralGrid, check_uniform, effective_length


@dataclass
class TemporalGrid:
    t_s_axis: np.ndarray
    t_i_axis: np.ndarray
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)
    axes_kind: str = "si"  # "si" for (t_s, t_i), "pm" for (t_plus, t_minus)

    def __post_init__(self):
        check_uniform(self.t_s_axis)
        check_uniform(self.t_i_axis)
        if self.values.shape != (len(self.t_s_axis), len(self.t_i_axis)):
            raise ContractError("values shape does not match the axes")
        if self.kind == "intensity" and (np.iscomplexobj(self.values) or np.any(self.values < 0)):
            raise ContractError("intensity grids must be real and non-negative")

    @property
    def step_s(self):
        return self.t_s_axis[1] - self.t_s_axis[0]

    @property
    def step_i(self):
        return self.t_i_axis[1] - self.t_i_axis[0]

    def total(self):
        v = np.abs(self.values) ** 2 if self.kind == "amplitude" else self.values
        return float(v.sum() * self.step_s * self.step_i)


@dataclass
class ModeAmplitudeMatrix:
    """Cell-integrated JTI ``values[i, j]`` (signal cell i, idler cell j)."""

    values: np.ndarray
    round_trip_time: tuple
    origin: tuple
    index_offset: tuple = (0, 0)

    def single_line_fraction(self):
        """Largest fraction of the total weight held by one row or one column."""
        tot = self.values.sum()
        return float(max(self.values.sum(axis=1).max(), self.values.sum(axis=0).max()) / tot)


def _next_pow2(n):
    return 1 << (int(n) - 1).bit_length()


def _time_axis(n, dw):
    dt = 2.0 * math.pi / (n * dw)
    return (np.arange(n) - n // 2) * dt


def jta_numeric(jsa, pad=4):
    """Joint temporal amplitude by zero-padded 2-D FFT of a complex JSA grid."""
    if not isinstance(jsa, SpectralGrid) or jsa.kind != "amplitude":
        raise ContractError("jta_numeric needs an amplitude SpectralGrid")
    if pad < 4:
        raise ContractError("zero-padding factor must be >= 4")
    dws = check_uniform(jsa.omega_s_axis)
    dwi = check_uniform(jsa.omega_i_axis)
    ns = _next_pow2(pad * jsa.values.shape[0])
    ni = _next_pow2(pad * jsa.values.shape[1])
    spec = np.fft.fft2(jsa.values, s=(ns, ni)) * (dws * dwi / (2.0 * math.pi))
    spec = np.fft.fftshift(spec)
    ts = _time_axis(ns, dws)
    ti = _time_axis(ni, dwi)
    # absolute frequency of the first sample: exp(-i w0 t) carrier
    spec *= np.exp(-1j * jsa.omega_s_axis[0] * ts)[:, None]
    spec *= np.exp(-1j * jsa.omega_i_axis[0] * ti)[None, :]
    meta = dict(jsa.meta)
    meta.update(fft_shape=[ns, ni], pad=pad)
    return TemporalGrid(ts, ti, spec, "amplitude", meta)


def jti_numeric(jsa, pad=4):
    jta = jta_numeric(jsa, pad)
    v = jta.values
    return TemporalGrid(jta.t_s_axis, jta.t_i_axis, v.real**2 + v.imag**2, "intensity", jta.meta)


def round_trip_time(fiber, mode_center_omega, cavity=None):
    """T = 2 L k'(w) for a linear cavity, L_r k'(w) for a ring."""
    return 2.0 * effective_length(fiber, cavity) * float(group_slowness(float(mode_center_omega), fiber))


def rotate_to_sum_diff(jti):
    """Resample a JTI onto ``t_+ = (ts+ti)/sqrt2`` (rows) and ``t_- = (ts-ti)/sqrt2`` (columns).

    The output axes equal the input axes; bilinear interpolation, zero outside.
    """
    if jti.kind != "intensity":
        raise ContractError("rotate_to_sum_diff needs an intensity grid")
    ts, ti = jti.t_s_axis, jti.t_i_axis
    if len(ts) != len(ti) or not np.isclose(jti.step_s, jti.step_i, rtol=1e-12, atol=0):
        raise ContractError("rotation needs a square grid with equal steps")
    tp, tm = np.meshgrid(ts, ti, indexing="ij")
    s = (tp + tm) / math.sqrt(2.0)
    i = (tp - tm) / math.sqrt(2.0)
    coords = np.array([(s - ts[0]) / jti.step_s, (i - ti[0]) / jti.step_i])
    out = ndimage.map_coordinates(jti.values, coords, order=1, mode="constant", cval=0.0)
    out = np.maximum(out, 0.0)
    meta = dict(jti.meta)
    meta["rotated"] = True
    return TemporalGrid(ts.copy(), ti.copy(), out, "intensity", meta, axes_kind="pm")


def time_difference_marginal(jti_rot):
    """Integrate a rotated JTI over t_+; returns (t_minus, curve) with unit peak."""
    if jti_rot.axes_kind != "pm":
        raise ContractError("time_difference_marginal needs a rotated grid")
    m = integrate.trapezoid(jti_rot.values, jti_rot.t_s_axis, axis=0)
    peak = m.max()
    if peak > 0:
        m = m / peak
    return jti_rot.t_i_axis.copy(), m


def marginal_peaks(t_minus, curve, threshold=1e-3):
    """Local maxima of a marginal above ``threshold`` (relative); returns their t_minus."""
    c = np.asarray(curve)
    inner = (c[1:-1] > c[:-2]) & (c[1:-1] >= c[2:]) & (c[1:-1] > threshold * c.max())
    return np.asarray(t_minus)[1:-1][inner]


def mode_amplitudes(jti, T, cutoff=1e-3, T_i=None):
    """Integrate the JTI over round-trip cells centred on its global maximum.

    Cell (i, j) covers ``[ts0 + (i - 1/2) T_s, ts0 + (i + 1/2) T_s)`` times the
    analogous idler interval, where (ts0, ti0) is the location of the global
    maximum.  The matrix is cropped to cells holding at least ``cutoff`` times
    the largest cell weight.
    """
    if jti.kind != "intensity" or jti.axes_kind != "si":
        raise ContractError("mode_amplitudes needs a (t_s, t_i) intensity grid")
    Ts, Ti = float(T), float(T if T_i is None else T_i)
    if not (Ts > 0 and Ti > 0):
        raise DomainError("round-trip time must be > 0")
    ts, ti = jti.t_s_axis, jti.t_i_axis
    k = np.unravel_index(np.argmax(jti.values), jti.values.shape)
    ts0, ti0 = ts[k[0]], ti[k[1]]

    def cells(axis, t0, T):
        idx = np.floor((axis - t0) / T + 0.5).astype(np.int64)
        lo = math.ceil((axis[0] - t0) / T + 0.5)  # first complete cell
        hi = math.floor((axis[-1] + (axis[1] - axis[0]) - t0) / T - 0.5)
        return idx, lo, hi

    ci, lo_i, hi_i = cells(ts, ts0, Ts)
    cj, lo_j, hi_j = cells(ti, ti0, Ti)
    if hi_i < lo_i or hi_j < lo_j:
        raise ContractError("grid shorter than one round-trip cell")
    ki = (ci >= lo_i) & (ci <= hi_i)
    kj = (cj >= lo_j) & (cj <= hi_j)
    sub = jti.values[np.ix_(ki, kj)] * (jti.step_s * jti.step_i)
    ri = ci[ki] - lo_i
    rj = cj[kj] - lo_j
    ni, nj = hi_i - lo_i + 1, hi_j - lo_j + 1
    rows = np.zeros((ni, sub.shape[1]))
    np.add.at(rows, ri, sub)
    mat = np.zeros((ni, nj))
    np.add.at(mat.T, rj, rows.T)

    keep = mat >= cutoff * mat.max()
    ii = np.flatnonzero(keep.any(axis=1))
    jj = np.flatnonzero(keep.any(axis=0))
    if ii[0] == 0 or jj[0] == 0 or ii[-1] == ni - 1 or jj[-1] == nj - 1:
        need_s = (max(abs(ii[0] + lo_i), abs(ii[-1] + lo_i)) + 1.5) * Ts
        need_i = (max(abs(jj[0] + lo_j), abs(jj[-1] + lo_j)) + 1.5) * Ti
        raise ContractError(
            "grid too small: cells above cutoff reach the grid edge; need a time span of "
            f"at least +-{need_s:.4g} s (signal) and +-{need_i:.4g} s (idler) around the maximum"
        )
    out = mat[ii[0]:ii[-1] + 1, jj[0]:jj[-1] + 1]
    off = (int(ii[0] + lo_i), int(jj[0] + lo_j))
    origin = (ts0 + off[0] * Ts, ti0 + off[1] * Ti)
    return ModeAmplitudeMatrix(out, (Ts, Ti), origin, off)


@dataclass(frozen=True)
class ClosedFormParams:
    """Parameters of the Gaussian-mode approximation of a filtered cavity JSA."""

    delta_omega: float
    Delta_omega: float
    sigma: float
    M: int = 0

    def __post_init__(self):
        if not (self.delta_omega > 0 and self.Delta_omega > 0 and self.sigma > 0):
            raise DomainError("delta_omega, Delta_omega and sigma must be > 0")
        if int(self.M) != self.M or self.M < 0:
            raise DomainError("M must be a non-negative integer")

    @property
    def tau_c(self):
        return math.sqrt(2.0) / self.delta_omega

    @property
    def tau(self):
        return self.tau_c * math.sqrt(self.delta_omega**2 + self.sigma**2) / self.sigma


def dirichlet_ratio(y, n):
    """sin(n y) / sin(y) for odd ``n``, continuous through the zeros of sin(y)."""
    y = np.asarray(y, dtype=float)
    # odd n: the quotient has period pi
    yr = y - math.pi * np.round(y / math.pi)
    small = np.abs(yr) < 1e-8
    safe = np.where(small, 1.0, yr)
    out = np.where(small, n * (1.0 - (n * n - 1.0) * yr * yr / 6.0), np.sin(n * safe) / np.sin(safe))
    return out


def jti_closed_form(t_minus, t_plus, params):
    """Closed-form JTI of the Gaussian-mode JSA (unit-free, peak (2M+1)^4)."""
    tm = np.asarray(t_minus, dtype=float)
    tp = np.asarray(t_plus, dtype=float)
    p = params
    n = 2 * int(p.M) + 1
    rho = (p.tau_c / p.tau) ** 2
    env = np.exp(-tm**2 / p.tau_c**2 - tp**2 / p.tau**2)
    y1 = p.Delta_omega / (2.0 * math.sqrt(2.0)) * (tm - rho * tp)
    y2 = p.Delta_omega / (2.0 * math.sqrt(2.0)) * (tm + rho * tp)
    out = env * dirichlet_ratio(y1, n) ** 2 * dirichlet_ratio(y2, n) ** 2
    return out if out.ndim else float(out)


def jsa_gaussian_modes(nu_s, nu_i, params):
    """Gaussian-mode approximation of the filtered cavity JSA over detunings."""
    p = params
    nu_s = np.asarray(nu_s, dtype=float)
    nu_i = np.asarray(nu_i, dtype=float)
    ls = np.arange(-p.M, p.M + 1) * p.Delta_omega
    gs = np.exp(-((nu_s[..., None] - ls) ** 2) / p.delta_omega**2).sum(axis=-1)
    gi = np.exp(-((nu_i[..., None] - ls) ** 2) / p.delta_omega**2).sum(axis=-1)
    return np.exp(-((nu_s + nu_i) ** 2) / (2.0 * p.sigma**2)) * gs * gi


def jti_gaussian_modes_exact(t_minus, t_plus, params):
    """Exact transform of :func:`jsa_gaussian_modes`, normalized like the closed form.

    Unlike the closed form it keeps the weight ``exp(-(l+m)^2 dw^2 / (2 (sigma^2 + delta^2)))``
    of each mode pair, which the closed form sets to one.  The two agree for
    ``M = 0`` and for ``sigma >> M dw``.
    """
    p = params
    tm = np.asarray(t_minus, dtype=float)
    tp = np.asarray(t_plus, dtype=float)
    rho = (p.tau_c / p.tau) ** 2
    x1 = p.Delta_omega / math.sqrt(2.0) * (tm + rho * tp)
    x2 = p.Delta_omega / math.sqrt(2.0) * (rho * tp - tm)
    idx = np.arange(-p.M, p.M + 1)
    amp = np.zeros(np.broadcast(tm, tp).shape, dtype=complex)
    for l in idx:
        for m in idx:
            w = math.exp(-((l + m) * p.Delta_omega) ** 2 / (2.0 * (p.sigma**2 + p.delta_omega**2)))
            amp = amp + w * np.exp(-1j * (l * x1 + m * x2))
    env = np.exp(-tm**2 / p.tau_c**2 - tp**2 / p.tau**2)
    out = env * (amp.real**2 + amp.imag**2)
    return out if out.ndim else float(out)
