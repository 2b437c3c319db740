"""Run configuration: INI-style text with unit-suffixed keys.

Keys carry their SI unit in the suffix (``_m``, ``_rad_per_s``, ``_W``,
``_Hz``, ``_per_W_per_m``, ``_s``); keys without a suffix are dimensionless.
Unknown sections and keys are rejected, duplicates are syntax errors, and
every default that gets applied is recorded in :attr:`RunConfig.defaults`.
"""
import configparser
import hashlib
import math
from dataclasses import dataclass, field

from .constants import C
from .errors import ConfigError, DomainError

AUTO = "auto"


def _float(v):
    return float(v)


def _pos(v):
    v = float(v)
    if not v > 0:
        raise ValueError("must be > 0")
    return v


def _nonneg(v):
    v = float(v)
    if not v >= 0:
        raise ValueError("must be >= 0")
    return v


def _unit_interval(v):
    v = float(v)
    if not 0.0 <= v <= 1.0:
        raise ValueError("must lie in [0, 1]")
    return v


def _reflectivity(v):
    v = float(v)
    if not 0.0 <= v < 1.0:
        raise ValueError("must lie in [0, 1)")
    return v


def _int_pos(v):
    iv = int(v)
    if iv <= 0 or str(iv) != str(v).strip():
        raise ValueError("must be a positive integer")
    return iv


def _int_nonneg(v):
    iv = int(v)
    if iv < 0 or str(iv) != str(v).strip():
        raise ValueError("must be a non-negative integer")
    return iv


def _bool(v):
    s = str(v).strip().lower()
    if s in ("true", "yes", "1", "on"):
        return True
    if s in ("false", "no", "0", "off"):
        return False
    raise ValueError("must be true or false")


def _choice(*opts):
    def conv(v):
        if v not in opts:
            raise ValueError(f"must be one of {', '.join(opts)}")
        return v
    return conv


def _or_auto(conv, word=AUTO):
    def c(v):
        return word if str(v).strip() == word else conv(v)
    return c


# section -> key -> (converter, default); default None means required
SCHEMA = {
    "fiber": {
        "core_radius_m": (_pos, None),
        "air_fill_fraction": (_unit_interval, None),
        "length_m": (_pos, None),
        "gamma_per_W_per_m": (_or_auto(_nonneg), 0.0),
        "gamma_fwm_per_W_per_m": (_or_auto(_nonneg, "same"), "same"),
        "cladding_rule": (_choice("linear", "permittivity"), "linear"),
        "mode_model": (_choice("vector", "scalar"), "vector"),
    },
    "pump": {
        "wavelength_m": (_pos, None),
        "sigma_I_rad_per_s": (_pos, None),
        "avg_power_W": (_nonneg, 0.0),
        "peak_power_W": (_or_auto(_nonneg), AUTO),
        "rep_rate_Hz": (_pos, 1.0e5),
        "degenerate": (_bool, True),
    },
    "cavity": {
        "topology": (_choice("linear", "ring"), "linear"),
        "resonant_s": (_bool, None),
        "resonant_i": (_bool, None),
        "r2_s": (_reflectivity, 0.0),
        "r2_i": (_reflectivity, 0.0),
        "lossless": (_bool, True),
        "t2_s": (_unit_interval, 1.0),
        "t2_i": (_unit_interval, 1.0),
        "delta1_s": (_float, 0.0),
        "delta2_s": (_float, 0.0),
        "delta1_i": (_float, 0.0),
        "delta2_i": (_float, 0.0),
        "tune": (_choice("auto", "none"), "auto"),
    },
    "centers": {
        "signal_rad_per_s": (_or_auto(_pos), AUTO),
    },
    "grid": {
        "n": (_int_pos, 128),
        "half_width_rad_per_s": (_or_auto(_pos), AUTO),
        "quadrature_nodes": (_int_pos, 201),
    },
    "filter": {
        "type": (_choice("none", "single", "five", "custom"), "none"),
        "width_s_rad_per_s": (_or_auto(_pos), AUTO),
        "width_i_rad_per_s": (_or_auto(_pos), AUTO),
    },
    "temporal": {
        "pad": (_int_pos, 4),
        "cutoff": (_pos, 1.0e-2),
        "peak_threshold": (_pos, 0.1),
        "closed_M": (_int_nonneg, 0),
        "closed_n": (_int_pos, 512),
        "closed_sigma_rad_per_s": (_or_auto(_pos), AUTO),
    },
    "flux": {
        "tolerance": (_pos, 1.0e-4),
        "panel_nodes": (_int_pos, 8),
        "window": (_choice("single", "five", "filter"), "single"),
    },
    "sweep": {
        "sigma_I_min_rad_per_s": (_or_auto(_pos), AUTO),
        "sigma_I_max_rad_per_s": (_or_auto(_pos), AUTO),
        "points": (_int_pos, 12),
    },
    "design": {
        "target_wavelength_m": (_pos, 852.0e-9),
        "linewidth_Hz": (_pos, 5.22e6),
        "length_m": (_or_auto(_pos), AUTO),
        "predict_flux": (_bool, True),
    },
}
REQUIRED_SECTIONS = ("fiber", "pump", "cavity")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


@dataclass
class RunConfig:
    """Validated configuration; ``values[section][key]`` holds typed values."""

    values: dict
    defaults: list = field(default_factory=list, compare=False)

    def __getitem__(self, section):
        return self.values[section]

    def text(self):
        return serialize(self)

    def hash(self):
        return hashlib.sha256(self.text().encode("utf-8")).hexdigest()


def serialize(cfg):
    """Canonical text form; ``parse_config(serialize(c)) == c``."""
    out = []
    for sec, keys in SCHEMA.items():
        out.append(f"[{sec}]")
        for k in keys:
            out.append(f"{k} = {_fmt(cfg.values[sec][k])}")
        out.append("")
    return "\n".join(out)


def _reader():
    p = configparser.ConfigParser(
        strict=True,
        interpolation=None,
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        empty_lines_in_values=False,
        delimiters=("=",),
    )
    p.optionxform = str
    return p


def _read_text(text, source="<config>"):
    p = _reader()
    try:
        p.read_string(text, source=source)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key in section [{e.section}]", line=e.lineno, column=1,
                          key=f"{e.section}.{e.option}") from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", line=e.lineno, column=1) from None
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("syntax error: key/value outside a [section]", line=e.lineno, column=1) from None
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ConfigError(f"syntax error: cannot parse {line.strip()!r}", line=lineno, column=1) from None
    return p


def _line_of(text, section, key):
    sec = None
    for n, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            sec = s[1:-1].strip()
        elif sec == section and s.split("=", 1)[0].strip() == key:
            return n, raw.index(key) + 1
    return None, None


def apply_override(raw, spec):
    """Apply ``section.key=value`` to a raw ``{section: {key: str}}`` mapping.

    Returns the ``(section, key)`` pair that was set.
    """
    if "=" not in spec or "." not in spec.split("=", 1)[0]:
        raise ConfigError(f"override must look like section.key=value, got {spec!r}")
    lhs, value = spec.split("=", 1)
    section, key = (x.strip() for x in lhs.split(".", 1))
    raw.setdefault(section, {})[key] = value.strip()
    return section, key


def parse_config(text, overrides=()):
    """Parse and validate configuration text into a :class:`RunConfig`."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ConfigError(f"configuration is not valid UTF-8: {e}") from None
    p = _read_text(text)
    raw = {s: dict(p[s]) for s in p.sections()}
    overridden = {apply_override(raw, ov) for ov in overrides}

    def where(sec, key):
        # overridden values have no location in the text
        return (None, None) if (sec, key) in overridden else _line_of(text, sec, key)

    values, defaults = {}, []
    for sec in raw:
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
    for sec in REQUIRED_SECTIONS:
        if sec not in raw:
            raise ConfigError(f"missing required section [{sec}]")
    for sec, keys in SCHEMA.items():
        given = raw.get(sec, {})
        for k in given:
            if k not in keys:
                line, col = where(sec, k)
                raise ConfigError(f"unknown key in section [{sec}]", line=line, column=col,
                                  key=f"{sec}.{k}")
        vals = {}
        for k, (conv, default) in keys.items():
            if k in given:
                s = given[k]
                if s == "":
                    line, col = where(sec, k)
                    raise ConfigError("empty value", line=line, column=col, key=f"{sec}.{k}")
                try:
                    vals[k] = conv(s)
                except ValueError as e:
                    line, col = where(sec, k)
                    raise ConfigError(f"invalid value {s!r}: {e}", line=line, column=col,
                                      key=f"{sec}.{k}") from None
            elif default is None:
                raise ConfigError(f"missing required key in section [{sec}]", key=f"{sec}.{k}")
            else:
                vals[k] = default
                defaults.append(f"{sec}.{k}")
        values[sec] = vals
    _cross_checks(values)
    return RunConfig(values, defaults)


def _cross_checks(v):
    if not v["pump"]["degenerate"]:
        raise ConfigError("only degenerate-pump SFWM is supported", key="pump.degenerate")
    cav = v["cavity"]
    for mu in ("s", "i"):
        if not cav[f"resonant_{mu}"] and cav[f"r2_{mu}"] > 0:
            raise ConfigError(f"inconsistent flags: resonant_{mu} = false with r2_{mu} > 0",
                              key=f"cavity.r2_{mu}")
        if cav[f"resonant_{mu}"] and cav["lossless"] and cav[f"t2_{mu}"] != 1.0:
            raise ConfigError(f"t2_{mu} is derived for lossless mirrors; set lossless = false to give it",
                              key=f"cavity.t2_{mu}")
    if cav["topology"] == "ring" and (cav["delta1_s"] != 0 or cav["delta1_i"] != 0):
        raise ConfigError("a ring cavity has no mirror 1: delta1 must be 0", key="cavity.delta1_s")
    flt = v["filter"]
    if flt["type"] == "custom" and AUTO in (flt["width_s_rad_per_s"], flt["width_i_rad_per_s"]):
        raise ConfigError("custom filter needs width_s_rad_per_s and width_i_rad_per_s",
                          key="filter.width_s_rad_per_s")
    if flt["type"] != "custom" and AUTO not in (flt["width_s_rad_per_s"],) + (flt["width_i_rad_per_s"],):
        raise ConfigError("filter widths are only accepted with type = custom",
                          key="filter.width_s_rad_per_s")
    if v["flux"]["window"] == "filter" and flt["type"] == "none":
        raise ConfigError("flux window 'filter' needs a filter", key="flux.window")
    sw = v["sweep"]
    if AUTO not in (sw["sigma_I_min_rad_per_s"], sw["sigma_I_max_rad_per_s"]) and \
            not sw["sigma_I_min_rad_per_s"] < sw["sigma_I_max_rad_per_s"]:
        raise ConfigError("sweep needs sigma_I_min < sigma_I_max", key="sweep.sigma_I_min_rad_per_s")


# ---------------------------------------------------------------- builders


def build_fiber(cfg, length=None):
    from .dispersion import FiberSpec, nonlinear_coefficient

    f = cfg["fiber"]
    base = FiberSpec(f["core_radius_m"], f["air_fill_fraction"], length or f["length_m"],
                     cladding_rule=f["cladding_rule"], mode_model=f["mode_model"])
    wp = pump_omega(cfg)
    g = f["gamma_per_W_per_m"]
    if g == AUTO:
        g = nonlinear_coefficient(wp, base)
    gf = f["gamma_fwm_per_W_per_m"]
    if gf == "same":
        gf = g
    elif gf == AUTO:
        gf = nonlinear_coefficient(wp, base)
    return FiberSpec(base.core_radius, base.air_fill_fraction, base.length, g, gf,
                     base.cladding_rule, base.mode_model)


def pump_omega(cfg):
    return 2.0 * math.pi * C / cfg["pump"]["wavelength_m"]


def build_pump(cfg, sigma_I=None):
    from .spectral import PumpSpec

    p = cfg["pump"]
    pump = PumpSpec.from_sigma_I(pump_omega(cfg), sigma_I or p["sigma_I_rad_per_s"],
                                 avg_power=p["avg_power_W"], rep_rate=p["rep_rate_Hz"])
    if p["peak_power_W"] == AUTO:
        return pump.with_derived_peak_power()
    return PumpSpec(pump.omega0, pump.sigma, p["peak_power_W"], pump.avg_power, pump.rep_rate)


def build_centers(cfg, fiber, pump):
    from .design import phasematch_solve

    ws = cfg["centers"]["signal_rad_per_s"]
    if ws == AUTO:
        # linear phasematching: the self-phase shift of short intense pulses can
        # remove every root, and it already enters every mismatch evaluation
        ws, wi = phasematch_solve(fiber, pump.omega0, 0.0)
        return ws, wi
    return ws, 2.0 * pump.omega0 - ws


def build_cavity(cfg, fiber, centers):
    from .spectral import CavitySpec, tune_cavity

    c = cfg["cavity"]
    try:
        cav = CavitySpec(
            r2_s=c["r2_s"], r2_i=c["r2_i"], t2_s=c["t2_s"], t2_i=c["t2_i"],
            delta1_s=c["delta1_s"], delta2_s=c["delta2_s"],
            delta1_i=c["delta1_i"], delta2_i=c["delta2_i"],
            topology=c["topology"], resonant_s=c["resonant_s"], resonant_i=c["resonant_i"],
            lossless=c["lossless"],
        )
    except DomainError as e:
        raise ConfigError(str(e), key="cavity") from None
    if c["tune"] == "auto":
        cav = tune_cavity(cav, fiber, *centers)
    return cav


def build_filter(cfg, fiber, cavity, centers, kind=None):
    from .spectral import FilterSpec, mode_filter

    kind = kind or cfg["filter"]["type"]
    if kind == "none":
        return None
    if kind == "single":
        return mode_filter(fiber, cavity, centers[0], centers[1], 1)
    if kind == "five":
        return mode_filter(fiber, cavity, centers[0], centers[1], 5)
    f = cfg["filter"]
    return FilterSpec(centers[0], centers[1], f["width_s_rad_per_s"], f["width_i_rad_per_s"])
