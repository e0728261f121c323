"""Experiment configuration: flat key = value text with sections.

Example (all recognized keys; * marks required):

    [model]
    m = 100.0        ; * rest mass
    omega = 1.0      ; * oscillator frequency
    tau = 0.1        ; * imaginary-time step
    n_t = 100        ; * time slices (beta = n_t * tau)

    [sampler]
    n_paths = 100    ; * independent chains
    n_sweeps = 2000  ; * measurement sweeps per chain
    n_hits = 10      ;   proposal attempts per site (default 10)
    seed = 1         ;   master seed (default 1)
    therm_sweeps = 500 ; thermalization sweeps (default 500)
    delta = 0.1      ;   initial proposal half-width (default 0.1; auto-tuned)
    tuning = true    ;   tune delta to ~50% acceptance (default true)
    hot_start = false ;  random instead of cold start (default false)

    [observables]
    energy = true    ;   kinetic/potential/energy series (default true)
    q2 = true        ;   <q^2> series (default true)
    density = false  ;   position histogram (default false; needs [histogram])
    correlation = false ; correlation function (default false)

    [histogram]
    bin_width = 0.007 ; * bin width h (required when density = true)
    q_min = -0.35     ; * left edge
    q_max = 0.35      ; * right edge

    [scan]
    variable = m      ; * scan axis, m or omega
    values = 50, 100, 200 ; * scan values

    [output]
    dir = out         ;   output directory (default "out"; CLI --out overrides)

Unknown sections or keys are hard errors.  parse -> serialize -> parse is
the identity.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass

from .estimators import HistogramSpec
from .model import SimParams
from .sampler import SamplerConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ObservableFlags:
    energy: bool = True
    q2: bool = True
    density: bool = False
    correlation: bool = False


@dataclass(frozen=True)
class ScanSpec:
    variable: str
    values: tuple

    def __post_init__(self):
        if self.variable not in ("m", "omega"):
            raise ConfigError("scan variable must be 'm' or 'omega'")
        if not self.values:
            raise ConfigError("scan values must be a non-empty list")


@dataclass(frozen=True)
class ExperimentConfig:
    params: SimParams
    sampler: SamplerConfig
    observables: ObservableFlags = ObservableFlags()
    histogram: HistogramSpec | None = None
    scan: ScanSpec | None = None
    out_dir: str = "out"


_SCHEMA = {
    "model": {"m": float, "omega": float, "tau": float, "n_t": int},
    "sampler": {"n_paths": int, "n_sweeps": int, "n_hits": int, "seed": int,
                "therm_sweeps": int, "delta": float, "tuning": bool,
                "hot_start": bool},
    "observables": {"energy": bool, "q2": bool, "density": bool,
                    "correlation": bool},
    "histogram": {"bin_width": float, "q_min": float, "q_max": float},
    "scan": {"variable": str, "values": str},
    "output": {"dir": str},
}

_REQUIRED = {
    "model": ("m", "omega", "tau", "n_t"),
    "sampler": ("n_paths", "n_sweeps"),
    "histogram": ("bin_width", "q_min", "q_max"),
    "scan": ("variable", "values"),
}

_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def _convert(section, key, raw, kind):
    try:
        if kind is bool:
            return _BOOL[raw.strip().lower()]
        return kind(raw)
    except (ValueError, KeyError):
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config(text):
    """Parse and fully validate a configuration document."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[(section, key)] = _convert(section, key, raw, _SCHEMA[section][key])

    for section in ("model", "sampler"):
        for key in _REQUIRED[section]:
            if (section, key) not in values:
                raise ConfigError(f"missing required key {key!r} in section [{section}]")

    def get(section, key, default=None):
        return values.get((section, key), default)

    try:
        params = SimParams(m=get("model", "m"), omega=get("model", "omega"),
                           tau=get("model", "tau"), n_t=get("model", "n_t"))
        sampler = SamplerConfig(
            n_paths=get("sampler", "n_paths"),
            n_sweeps=get("sampler", "n_sweeps"),
            n_hits=get("sampler", "n_hits", 10),
            seed=get("sampler", "seed", 1),
            therm_sweeps=get("sampler", "therm_sweeps", 500),
            delta=get("sampler", "delta", 0.1),
            tuning=get("sampler", "tuning", True),
            hot_start=get("sampler", "hot_start", False),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    flags = ObservableFlags(
        energy=get("observables", "energy", True),
        q2=get("observables", "q2", True),
        density=get("observables", "density", False),
        correlation=get("observables", "correlation", False),
    )

    histogram = None
    if cp.has_section("histogram"):
        for key in _REQUIRED["histogram"]:
            if (("histogram", key)) not in values:
                raise ConfigError(f"missing required key {key!r} in section [histogram]")
        histogram = HistogramSpec(bin_width=get("histogram", "bin_width"),
                                  q_min=get("histogram", "q_min"),
                                  q_max=get("histogram", "q_max"))
        try:
            histogram.edges()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if flags.density and histogram is None:
        raise ConfigError("density observable enabled but no [histogram] section")

    scan = None
    if cp.has_section("scan"):
        for key in _REQUIRED["scan"]:
            if ("scan", key) not in values:
                raise ConfigError(f"missing required key {key!r} in section [scan]")
        raw = get("scan", "values").replace(",", " ").split()
        try:
            vals = tuple(float(v) for v in raw)
        except ValueError:
            raise ConfigError(f"[scan] values: cannot parse {get('scan', 'values')!r}") from None
        if any(v <= 0.0 for v in vals):
            raise ConfigError("[scan] values must be positive")
        scan = ScanSpec(variable=get("scan", "variable"), values=vals)

    return ExperimentConfig(params=params, sampler=sampler, observables=flags,
                            histogram=histogram, scan=scan,
                            out_dir=get("output", "dir", "out"))


def serialize_config(cfg):
    """Canonical text form; parse(serialize(cfg)) reproduces cfg."""
    cp = configparser.ConfigParser()
    cp["model"] = {"m": repr(cfg.params.m), "omega": repr(cfg.params.omega),
                   "tau": repr(cfg.params.tau), "n_t": str(cfg.params.n_t)}
    s = cfg.sampler
    cp["sampler"] = {
        "n_paths": str(s.n_paths), "n_sweeps": str(s.n_sweeps),
        "n_hits": str(s.n_hits), "seed": str(s.seed),
        "therm_sweeps": str(s.therm_sweeps), "delta": repr(s.delta),
        "tuning": str(s.tuning).lower(), "hot_start": str(s.hot_start).lower(),
    }
    f = cfg.observables
    cp["observables"] = {"energy": str(f.energy).lower(), "q2": str(f.q2).lower(),
                         "density": str(f.density).lower(),
                         "correlation": str(f.correlation).lower()}
    if cfg.histogram is not None:
        cp["histogram"] = {"bin_width": repr(cfg.histogram.bin_width),
                           "q_min": repr(cfg.histogram.q_min),
                           "q_max": repr(cfg.histogram.q_max)}
    if cfg.scan is not None:
        cp["scan"] = {"variable": cfg.scan.variable,
                      "values": ", ".join(repr(v) for v in cfg.scan.values)}
    cp["output"] = {"dir": cfg.out_dir}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def canonical_config_text(cfg):
    """Serialization without the [output] section: where results land does
    not change what experiment they describe."""
    return serialize_config(cfg).split("[output]", 1)[0]


def config_hash(cfg):
    """Hash of the canonical serialization; embedded in every output file."""
    return hashlib.sha256(canonical_config_text(cfg).encode()).hexdigest()[:16]


def with_overrides(cfg, seed=None, out_dir=None, m=None, omega=None,
                   scan=...):
    """A copy of cfg with selected fields replaced (scan=None removes it)."""
    params = cfg.params
    if m is not None or omega is not None:
        params = SimParams(m=params.m if m is None else m,
                           omega=params.omega if omega is None else omega,
                           tau=params.tau, n_t=params.n_t)
    sampler = cfg.sampler
    if seed is not None:
        sampler = SamplerConfig(
            n_paths=sampler.n_paths, n_sweeps=sampler.n_sweeps,
            n_hits=sampler.n_hits, delta=sampler.delta,
            therm_sweeps=sampler.therm_sweeps, seed=seed,
            tuning=sampler.tuning, hot_start=sampler.hot_start)
    return ExperimentConfig(
        params=params, sampler=sampler, observables=cfg.observables,
        histogram=cfg.histogram,
        scan=cfg.scan if scan is ... else scan,
        out_dir=cfg.out_dir if out_dir is None else out_dir)
