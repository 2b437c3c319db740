"""Command-line entry point: ``cavsfwm <subcommand> --config run.ini --out DIR``.

Every subcommand writes one data file plus ``<file>.meta.json`` holding the
subcommand, config hash, canonical config text, applied defaults, tool
version and numerical diagnostics.  Exit codes: 0 success, 2 configuration
or domain error, 3 numerical error, 4 infeasible design.
"""
import argparse
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, kernels
from .config import (
    AUTO,
    build_cavity,
    build_centers,
    build_fiber,
    build_filter,
    build_pump,
    parse_config,
)
from .constants import C
from .errors import CavsfwmError, ConfigError, NumericalError

SUBCOMMANDS = ("jsi", "jta", "jti", "jti-closed", "marginal", "modes", "flux", "cw-flux",
               "flux-sweep", "geom", "design")


# ---------------------------------------------------------------- output


def _clean(obj):
    """Make ``obj`` JSON-serializable; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _atomic_write(path, data):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, columns):
    buf = io.StringIO()
    np.savetxt(buf, np.column_stack(columns), fmt="%.17g", delimiter=",", header=header,
               comments="")
    return buf.getvalue()


def _report_text(items):
    lines = []
    for k, v in items:
        if isinstance(v, (float, np.floating)):
            v = "%.17g" % float(v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def _grid_columns(ax0, ax1, values):
    a, b = np.meshgrid(ax0, ax1, indexing="ij")
    cols = [a.ravel(), b.ravel()]
    if np.iscomplexobj(values):
        cols += [values.real.ravel(), values.imag.ravel()]
    else:
        cols.append(values.ravel())
    return cols


# ---------------------------------------------------------------- context


class _Run:
    """Lazily built physical objects shared by the subcommands."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.fiber = build_fiber(cfg)
        self.pump = build_pump(cfg)
        self.centers = build_centers(cfg, self.fiber, self.pump)
        self.cavity = build_cavity(cfg, self.fiber, self.centers)
        self.filter = build_filter(cfg, self.fiber, self.cavity, self.centers)

    def setup_meta(self):
        f, p = self.fiber, self.pump
        return {
            "gamma_per_W_per_m": f.gamma,
            "gamma_fwm_per_W_per_m": f.gamma_fwm,
            "pump_omega0_rad_per_s": p.omega0,
            "pump_sigma_rad_per_s": p.sigma,
            "pump_peak_power_W": p.peak_power,
            "omega_s_rad_per_s": self.centers[0],
            "omega_i_rad_per_s": self.centers[1],
            "configuration": self.cavity.configuration,
            "mirror_phases": [self.cavity.delta2_s, self.cavity.delta2_i],
            "filter": None if self.filter is None else {
                "width_s": self.filter.width_s, "width_i": self.filter.width_i},
        }

    def axes(self):
        from .spectral import centered_axis, free_spectral_range

        g = self.cfg["grid"]
        hw = g["half_width_rad_per_s"]
        if hw == AUTO:
            if self.filter is not None:
                hw = 0.51 * max(self.filter.width_s, self.filter.width_i)
            else:
                hw = 2.5 * max(free_spectral_range(self.fiber, w, self.cavity) for w in self.centers)
        return (centered_axis(self.centers[0], hw, g["n"]),
                centered_axis(self.centers[1], hw, g["n"]))

    def jsa(self):
        from .spectral import jsa_grid

        ws, wi = self.axes()
        return jsa_grid(ws, wi, self.fiber, self.pump, self.cavity, self.filter,
                        nodes=self.cfg["grid"]["quadrature_nodes"], check=True)

    def jti(self):
        from .temporal import jti_numeric

        return jti_numeric(self.jsa(), pad=self.cfg["temporal"]["pad"])

    def round_trip(self):
        from .temporal import round_trip_time

        return tuple(round_trip_time(self.fiber, w, self.cavity) for w in self.centers)

    def window(self, kind=None):
        kind = kind or self.cfg["flux"]["window"]
        if kind == "filter":
            return self.filter
        return build_filter(self.cfg, self.fiber, self.cavity, self.centers, kind)


# ---------------------------------------------------------------- subcommands


def _cmd_jsi(run):
    from .spectral import jsi

    ws, wi = run.axes()
    g = jsi(ws, wi, run.fiber, run.pump, run.cavity, run.filter,
            nodes=run.cfg["grid"]["quadrature_nodes"], check=True)
    return "jsi.csv", _csv_text("omega_s_rad_per_s,omega_i_rad_per_s,value",
                                _grid_columns(ws, wi, g.values)), g.meta


def _cmd_jta(run):
    from .temporal import jta_numeric

    a = jta_numeric(run.jsa(), pad=run.cfg["temporal"]["pad"])
    return "jta.csv", _csv_text("t_s_s,t_i_s,re,im",
                                _grid_columns(a.t_s_axis, a.t_i_axis, a.values)), a.meta


def _cmd_jti(run):
    j = run.jti()
    meta = dict(j.meta, round_trip_time_s=run.round_trip())
    return "jti.csv", _csv_text("t_s_s,t_i_s,value",
                                _grid_columns(j.t_s_axis, j.t_i_axis, j.values)), meta


def _closed_params(run):
    from .spectral import free_spectral_range, mode_width
    from .temporal import ClosedFormParams

    t = run.cfg["temporal"]
    sigma = run.pump.sigma if t["closed_sigma_rad_per_s"] == AUTO else t["closed_sigma_rad_per_s"]
    return ClosedFormParams(
        delta_omega=mode_width(run.fiber, run.cavity, "s", run.centers[0]),
        Delta_omega=free_spectral_range(run.fiber, run.centers[0], run.cavity),
        sigma=sigma, M=t["closed_M"])


def _cmd_jti_closed(run):
    from .temporal import jti_closed_form

    p = _closed_params(run)
    n = run.cfg["temporal"]["closed_n"]
    t = np.linspace(-1.0, 1.0, n) * 3.0 * max(p.tau, p.tau_c)
    tp, tm = np.meshgrid(t, t, indexing="ij")
    v = jti_closed_form(tm, tp, p)
    meta = {"delta_omega": p.delta_omega, "Delta_omega": p.Delta_omega, "sigma": p.sigma,
            "M": p.M, "tau_c_s": p.tau_c, "tau_s": p.tau}
    return "jti_closed.csv", _csv_text("t_plus_s,t_minus_s,value", [tp.ravel(), tm.ravel(), v.ravel()]), meta


def _cmd_marginal(run):
    from .temporal import marginal_peaks, rotate_to_sum_diff, time_difference_marginal

    rot = rotate_to_sum_diff(run.jti())
    tm, m = time_difference_marginal(rot)
    T = run.round_trip()
    peaks = marginal_peaks(tm, m, run.cfg["temporal"]["peak_threshold"])
    meta = dict(rot.meta, round_trip_time_s=T, peaks_t_minus_s=peaks,
                peaks_in_round_trips=peaks * math.sqrt(2.0) / T[0])
    return "marginal.csv", _csv_text("t_minus_s,value", [tm, m]), meta


def _cmd_modes(run):
    from .temporal import mode_amplitudes

    j = run.jti()
    Ts, Ti = run.round_trip()
    mat = mode_amplitudes(j, Ts, cutoff=run.cfg["temporal"]["cutoff"], T_i=Ti)
    ii, jj = np.meshgrid(np.arange(mat.values.shape[0]) + mat.index_offset[0],
                         np.arange(mat.values.shape[1]) + mat.index_offset[1], indexing="ij")
    w = mat.values / mat.values.sum()
    meta = {"round_trip_time_s": (Ts, Ti), "origin_s": mat.origin,
            "single_line_fraction": mat.single_line_fraction()}
    return "modes.csv", _csv_text("i,j,weight", [ii.ravel(), jj.ravel(), w.ravel()]), meta


def _flux_report(r, extra=()):
    return _report_text(list(extra) + [
        ("rate_pairs_per_s", r.rate),
        ("rate_nc_pairs_per_s", r.reference_rate_nc),
        ("ratio", r.ratio),
        ("convergence_estimate", r.quadrature_meta["cavity"]["convergence_estimate"]),
    ])


def _cmd_flux(run):
    from .flux import flux_pulsed

    f = run.cfg["flux"]
    r = flux_pulsed(run.fiber, run.pump, run.cavity, run.window(), tol=f["tolerance"],
                    panel_nodes=f["panel_nodes"])
    return "flux.txt", _flux_report(r, [("sigma_I_rad_per_s", run.pump.sigma_I)]), r.quadrature_meta


def _cmd_cw_flux(run):
    from .flux import flux_cw

    f = run.cfg["flux"]
    r = flux_cw(run.fiber, run.pump.omega0, run.pump.avg_power, run.cavity, run.window(),
                tol=f["tolerance"], panel_nodes=f["panel_nodes"])
    return "cw_flux.txt", _flux_report(r), r.quadrature_meta


def _cmd_flux_sweep(run):
    from .flux import flux_ratio_sweep, zone_boundaries

    s = run.cfg["sweep"]
    win = run.window()
    lw, upper = zone_boundaries(run.fiber, run.cavity, run.centers[0])
    lo = s["sigma_I_min_rad_per_s"]
    hi = s["sigma_I_max_rad_per_s"]
    lo = 0.03 * (lw if lw > 0 else upper) if lo == AUTO else lo
    hi = 3.0 * upper if hi == AUTO else hi
    if not lo < hi:
        raise ConfigError("sweep range is empty", key="sweep.sigma_I_min_rad_per_s")
    sig = np.geomspace(lo, hi, s["points"])
    res = flux_ratio_sweep(run.fiber, run.pump, run.cavity, sig, win,
                           tol=run.cfg["flux"]["tolerance"], workers=kernels.get_num_threads())
    if not res["rows"]:
        raise NumericalError(f"every sweep point failed: {res['errors'][0]['message']}")
    rows = np.array(res["rows"], dtype=float)
    text = _csv_text("sigma_I_rad_per_s,rate_pairs_per_s,rate_nc_pairs_per_s,ratio", rows.T)
    return "flux_sweep.csv", text, {"zones": res["zones"], "errors": res["errors"]}


def _cmd_geom(run):
    from .flux import GeomModelInputs, geom_model
    from .spectral import mode_spacing, mode_width

    conf = run.cavity.configuration
    if conf == "None":
        raise ConfigError("geom needs a resonant cavity", key="cavity.resonant_s")
    mu = "s" if run.cavity.resonant_s else "i"
    c = run.centers[0 if mu == "s" else 1]
    inp = GeomModelInputs(
        r2_mag=run.cavity.r2_s if mu == "s" else run.cavity.r2_i,
        delta_omega=mode_width(run.fiber, run.cavity, mu, c),
        Delta_omega=mode_spacing(run.fiber, c, run.cavity),
        sigma_I=run.pump.sigma_I, config=conf)
    out = geom_model(inp)
    items = [("r2", inp.r2_mag), ("delta_omega_rad_per_s", inp.delta_omega),
             ("Delta_omega_rad_per_s", inp.Delta_omega), ("sigma_I_rad_per_s", inp.sigma_I)]
    items += [(k, v) for k, v in out.items()]
    return "geom.txt", _report_text(items), {}


def _cmd_design(run):
    from .design import TransitionTarget, design_report

    d = run.cfg["design"]
    target = TransitionTarget(2.0 * math.pi * C / d["target_wavelength_m"],
                              2.0 * math.pi * d["linewidth_Hz"])
    length = run.fiber.length if d["length_m"] == AUTO else d["length_m"]
    rep = design_report(run.fiber, run.pump, target, length, predict_flux=d["predict_flux"])
    return "design.txt", rep.to_text(), {}


_COMMANDS = {
    "jsi": _cmd_jsi, "jta": _cmd_jta, "jti": _cmd_jti, "jti-closed": _cmd_jti_closed,
    "marginal": _cmd_marginal, "modes": _cmd_modes, "flux": _cmd_flux, "cw-flux": _cmd_cw_flux,
    "flux-sweep": _cmd_flux_sweep, "geom": _cmd_geom, "design": _cmd_design,
}


# ---------------------------------------------------------------- driver


def build_parser():
    ap = argparse.ArgumentParser(prog="cavsfwm", description="Cavity-enhanced SFWM simulations.")
    ap.add_argument("--version", action="version", version=f"cavsfwm {__version__}")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override one configuration value (repeatable)")
    ap.add_argument("--threads", type=int, default=0, help="worker threads, 0 = all cores")
    return ap


def run_subcommand(name, cfg, out_dir):
    """Run one subcommand on a parsed config; returns the written data path."""
    stage = "setup"
    try:
        run = _Run(cfg)
        stage = name
        fname, text, diag = _COMMANDS[name](run)
    except CavsfwmError as exc:
        exc.stage = getattr(exc, "stage", stage)
        raise
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, fname)
    meta = {
        "subcommand": name,
        "config_hash": cfg.hash(),
        "config": cfg.text(),
        "defaults_applied": cfg.defaults,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "output": fname,
        "setup": run.setup_meta(),
        "diagnostics": diag,
    }
    _atomic_write(path, text)
    _atomic_write(path + ".meta.json",
                  json.dumps(_clean(meta), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _error_line(exc, stage):
    rec = {"status": "error", "stage": stage, "error": type(exc).__name__,
           "exit_code": exc.exit_code, "message": f"[{stage}] {exc}"}
    for attr in ("line", "column", "key", "estimate"):
        v = getattr(exc, attr, None)
        if v is not None:
            rec[attr] = _clean(v)
    return json.dumps(rec, sort_keys=True)


def main(argv=None):
    args = build_parser().parse_args(argv)
    kernels.set_num_threads(args.threads)
    stage = "config"
    try:
        try:
            with open(args.config, "rb") as fh:
                raw = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read configuration: {e.strerror}") from None
        cfg = parse_config(raw, args.override)
        path = run_subcommand(args.subcommand, cfg, args.out)
    except CavsfwmError as exc:
        print(_error_line(exc, getattr(exc, "stage", stage)), file=sys.stderr)
        return exc.exit_code
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
