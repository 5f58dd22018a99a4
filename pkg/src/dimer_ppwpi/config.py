"""Run configuration: strict INI-style parsing with line-numbered errors.

Units at the file boundary: energies and frequencies in units of the
vibrational frequency, times and durations in units of the vibrational
period ``2 pi / omega``.  :func:`parse_config` converts times to the
internal unit ``1 / omega`` once.

Layout::

    [model]     omega, delta_sq, eps1, eps1p, eps2, J, m, n_max
    [pulse.P]   amplitude, sigma, omega_c, polarization, phase    (control)
    [pulse.A]   ...                                               (pump)
    [pulse.C]   ...                                               (probe)
    [delays]    t_PA, t_CA | t_CA_range
    [run]       mode, out, threads, sigma_A, sigma_C, impulsive_sigma

Required: ``model.delta_sq``, ``model.eps1``, ``model.J``, ``run.mode``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .pulse_propagators import PulseParams
from .vibronic_model import ModelParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_text", "MODES"]

MODES = ("pp", "ppd", "sweep-pp", "sweep-ppd-impulsive", "sweep-ppd-control", "selftest")
REQUIRED = (("model", "delta_sq"), ("model", "eps1"), ("model", "J"), ("run", "mode"))

_PULSE_KEYS = ("amplitude", "sigma", "omega_c", "polarization", "phase")
_SCHEMA = {
    "model": ("omega", "delta_sq", "eps1", "eps1p", "eps2", "J", "m", "n_max"),
    "pulse.P": _PULSE_KEYS,
    "pulse.A": _PULSE_KEYS,
    "pulse.C": _PULSE_KEYS,
    "delays": ("t_PA", "t_CA", "t_CA_range"),
    "run": ("mode", "out", "threads", "sigma_A", "sigma_C", "impulsive_sigma"),
}

# default pulse durations in periods; carrier defaults depend on the model
_DEFAULT_SIGMA = {"P": 1 / 8, "A": 1 / 4, "C": 1 / 4}
_DEFAULT_POLARIZATION = {"P": "V", "A": "H", "C": "H"}


class ConfigError(ValueError):
    def __init__(self, message, key_path="", line=None):
        self.key_path = key_path
        self.line = line
        where = key_path or "config"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    n_max: int
    pulses: dict  # "P" / "A" / "C" -> PulseParams, times in 1/omega
    mode: str
    t_PA: float = 0.0
    t_CA: tuple = (0.0,)
    sigma_grid: tuple = ()
    impulsive_sigma: float | None = None
    threads: int = 1
    out: str | None = None
    source: str = field(default="", compare=False)

    @property
    def period(self) -> float:
        return self.model.period


def _line_index(text):
    """(section, key) -> line number, plus section -> header line."""
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.fullmatch(r"\[(.+)\]", s)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), no)
            continue
        if section is not None and raw[:1] not in " \t":
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip()
            lines.setdefault((section, key), no)
    return lines


class _Reader:
    def __init__(self, parser, lines):
        self.parser = parser
        self.lines = lines

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key):
        return self.parser.get(section, key).strip()

    def fail(self, section, key, message):
        raise ConfigError(message, f"{section}.{key}", self.lines.get((section, key)))

    def number(self, section, key, default=None, *, positive=False, nonneg=False):
        if not self.has(section, key):
            return default
        text = self.raw(section, key)
        try:
            value = float(text)
        except ValueError:
            self.fail(section, key, f"expected a number, got {text!r}")
        if not math.isfinite(value):
            self.fail(section, key, f"non-physical value {text!r}: must be finite")
        if positive and value <= 0:
            self.fail(section, key, f"non-physical value {value!r}: must be > 0")
        if nonneg and value < 0:
            self.fail(section, key, f"non-physical value {value!r}: must be >= 0")
        return value

    def integer(self, section, key, default, minimum):
        if not self.has(section, key):
            return default
        text = self.raw(section, key)
        try:
            value = int(text)
        except ValueError:
            self.fail(section, key, f"expected an integer, got {text!r}")
        if value < minimum:
            self.fail(section, key, f"non-physical value {value}: must be >= {minimum}")
        return value

    def numbers(self, section, key, *, positive=False, nonneg=False):
        text = self.raw(section, key)
        out = []
        for item in text.split(","):
            item = item.strip()
            try:
                value = float(item)
            except ValueError:
                self.fail(section, key, f"expected a comma-separated list of numbers, got {text!r}")
            if not math.isfinite(value):
                self.fail(section, key, f"non-physical value {item!r}: must be finite")
            if positive and value <= 0:
                self.fail(section, key, f"non-physical value {value!r}: must be > 0")
            if nonneg and value < 0:
                self.fail(section, key, f"non-physical value {value!r}: must be >= 0")
            out.append(value)
        return out


def parse_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror or exc}") from exc
    return parse_config_text(text, source=str(path))


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"),
                                       default_section="\0none")
    parser.optionxform = str  # keys are case-sensitive (t_PA, J)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any [section]", line=exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError("section appears twice", f"[{exc.section}]", exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("key appears twice", f"{exc.section}.{exc.option}", exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("line is not 'key = value'", line=line) from exc

    lines = _line_index(text)
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section; expected one of {sorted(_SCHEMA)}",
                              f"[{section}]", lines.get((section, None)))
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key; allowed: {', '.join(_SCHEMA[section])}",
                                  f"{section}.{key}", lines.get((section, key)))
    for section, key in REQUIRED:
        if not parser.has_option(section, key):
            raise ConfigError("missing required key", f"{section}.{key}",
                              lines.get((section, None)))

    rd = _Reader(parser, lines)
    mode = rd.raw("run", "mode")
    if mode not in MODES:
        rd.fail("run", "mode", f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")

    omega = rd.number("model", "omega", 1.0, positive=True)
    delta_sq = rd.number("model", "delta_sq", nonneg=True)
    eps1 = rd.number("model", "eps1")
    eps1p = rd.number("model", "eps1p", eps1)
    eps2 = rd.number("model", "eps2", eps1 + eps1p)
    coupling = rd.number("model", "J")
    m = rd.number("model", "m", 1.0)
    n_max = rd.integer("model", "n_max", 16, 1)
    try:
        model = ModelParams(omega=omega, delta=math.sqrt(delta_sq) * 1.0, eps1=eps1 * omega,
                            J=coupling * omega, eps1p=eps1p * omega, eps2=eps2 * omega, m=m)
    except ValueError as exc:
        raise ConfigError(str(exc), "model", lines.get(("model", None))) from exc
    period = model.period

    carrier = {"P": eps1 - 5 * delta_sq, "A": eps1 + delta_sq, "C": eps1 - 3 * delta_sq}
    pulses = {}
    for pid in ("P", "A", "C"):
        sec = f"pulse.{pid}"
        pol = rd.raw(sec, "polarization") if rd.has(sec, "polarization") else _DEFAULT_POLARIZATION[pid]
        if pol not in ("H", "V"):
            rd.fail(sec, "polarization", f"expected H or V, got {pol!r}")
        pulses[pid] = PulseParams(
            amplitude=rd.number(sec, "amplitude", 1.0),
            sigma=rd.number(sec, "sigma", _DEFAULT_SIGMA[pid], positive=True) * period,
            omega_c=rd.number(sec, "omega_c", carrier[pid]) * omega,
            polarization=pol,
            phase=rd.number(sec, "phase", 0.0),
            name=pid,
        )

    t_PA = rd.number("delays", "t_PA", 0.0, nonneg=True) * period
    if rd.has("delays", "t_CA") and rd.has("delays", "t_CA_range"):
        rd.fail("delays", "t_CA_range", "give either t_CA or t_CA_range, not both")
    if rd.has("delays", "t_CA_range"):
        spec = rd.numbers("delays", "t_CA_range", nonneg=True)
        if len(spec) != 3 or spec[2] != int(spec[2]) or spec[2] < 1 or spec[1] < spec[0]:
            rd.fail("delays", "t_CA_range", "expected 'start, stop, count' with stop >= start, count >= 1")
        t_CA = tuple(float(v) for v in np.linspace(spec[0], spec[1], int(spec[2])) * period)
    elif rd.has("delays", "t_CA"):
        t_CA = tuple(v * period for v in rd.numbers("delays", "t_CA", nonneg=True))
    else:
        t_CA = (0.0,)

    grid = ()
    if mode.startswith("sweep"):
        for key in ("sigma_A", "sigma_C"):
            if not rd.has("run", key):
                raise ConfigError(f"missing required key for mode {mode}", f"run.{key}",
                                  lines.get(("run", None)))
        sa = rd.numbers("run", "sigma_A", positive=True)
        sc = rd.numbers("run", "sigma_C", positive=True)
        grid = tuple((a * period, c * period) for a in sa for c in sc)
    imp = rd.number("run", "impulsive_sigma", None, positive=True)

    return RunConfig(
        model=model,
        n_max=n_max,
        pulses=pulses,
        mode=mode,
        t_PA=t_PA,
        t_CA=t_CA,
        sigma_grid=grid,
        impulsive_sigma=None if imp is None else imp * period,
        threads=rd.integer("run", "threads", 1, 1),
        out=rd.raw("run", "out") if rd.has("run", "out") else None,
        source=source,
    )
