"""Pump-probe and pump-probe-difference signals from wave-packet overlaps.

Pathways are written in the bracket notation used for these signals, read
right to left: ``c(10)c(01)a(10)`` is the pump ``a`` taking the ground state
to site 1, then the probe ``c`` acting twice (1 -> 0, then 0 -> 1).  Two
adjacent factors of the same pulse form one second-order, time-ordered
block; a lone factor is first order.  Site 1' is written ``1'``.

Only the stimulated-emission contributions enter the anisotropies.  Pulses
never overlap in time: each acts as a complete propagator at its center
and free evolution fills the gaps.  Outputs at ``t_CA = 0`` are therefore
the anisotropy one vibrational period after the pump when transfer is
negligible, not the true overlapped-pulse value.
"""

from __future__ import annotations

import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .pulse_propagators import PulseParams, build_block
from .vibronic_model import GROUND, SITE1, SITE1P, SITES, TWO, DimerModel, PathwayState, manifold_of

__all__ = [
    "Action", "PathwaySpec", "parse_pathway", "ManifoldMismatch",
    "DegenerateDenominator", "SignalEngine", "OverlapTable",
    "PP_NUMERATOR", "PP_NUMERATOR_HALVED", "PP_DENOMINATOR",
    "PP_DENOMINATOR_HALVED", "PPD_NUMERATOR", "PPD_DENOMINATOR",
    "se_hh_minus_hv", "se_hh_plus_2hv", "se_hh_minus_hv_halved",
    "se_hh_plus_2hv_halved", "ppd_vhh_minus_vhv", "ppd_vhh_plus_2vhv",
    "anisotropy_from_parts", "r_pp_zero_delay", "r_ppd_zero_delay",
    "pp_ratio_term", "ppd_ratio_term", "PumpProbeResult",
    "pump_probe", "pump_probe_difference", "duration_sweep",
    "DEFAULT_FLOOR", "SweepPointError", "SWEEP_MODES",
]

DEFAULT_FLOOR = 1e-12


class ManifoldMismatch(ValueError):
    """Consecutive actions or an overlap's two sides do not connect."""


class DegenerateDenominator(ArithmeticError):
    """The isotropic combination is too small to divide by."""


class SweepPointError(RuntimeError):
    """A sweep point failed; ``point`` is (sigma_A, sigma_C), ``__cause__`` the error."""

    def __init__(self, point, cause):
        self.point = point
        super().__init__(f"sigma_A={point[0]:.6g}, sigma_C={point[1]:.6g}: "
                         f"{type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class Action:
    """One pulse action: ``kind`` in up, down, gsb, se, esa.

    ``via`` names the intermediate site of a ground-to-ground (gsb) pair.
    """

    pulse: str
    kind: str
    source: str
    target: str
    via: str = ""


@dataclass(frozen=True)
class PathwaySpec:
    actions: tuple
    project: str
    text: str = ""

    def __post_init__(self):
        if self.project not in (GROUND, SITE1, SITE1P, TWO):
            raise ValueError(f"bad projection label {self.project!r}")
        state = GROUND
        for act in self.actions:
            if manifold_of(act.source) != manifold_of(state):
                raise ManifoldMismatch(
                    f"{self.text or self.actions}: action {act} starts from {act.source}, "
                    f"state is in {state}")
            state = act.target
        if manifold_of(state) != manifold_of(self.project):
            raise ManifoldMismatch(
                f"{self.text}: ends in manifold of {state!r} but projects on {self.project!r}")

    @property
    def final_label(self) -> str:
        return self.actions[-1].target if self.actions else GROUND

    def relabeled(self) -> "PathwaySpec":
        """Same pathway with sites 1 and 1' exchanged."""
        swap = {SITE1: SITE1P, SITE1P: SITE1}
        acts = tuple(Action(a.pulse, a.kind, swap.get(a.source, a.source),
                            swap.get(a.target, a.target), swap.get(a.via, a.via))
                     for a in self.actions)
        return PathwaySpec(acts, swap.get(self.project, self.project))


_TOKEN = re.compile(r"([A-Za-z])\((1'|[012])(1'|[012])\)")


def _tokens(text):
    pos, out = 0, []
    text = text.replace(" ", "")
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse pathway {text!r} at position {pos}")
        # factor p(XY) takes Y -> X
        out.append((m.group(1).upper(), m.group(3), m.group(2)))
        pos = m.end()
    return out[::-1]  # chronological


def _pair_kind(first, second):
    (_, s1, t1), (_, s2, t2) = first, second
    if t1 != s2:
        raise ManifoldMismatch(f"factors {first} and {second} do not connect")
    if s1 == GROUND and t2 == GROUND:
        return Action(first[0], "gsb", GROUND, GROUND, via=t1) if t1 in SITES else None
    if s1 in SITES and t1 == GROUND and t2 in SITES:
        return Action(first[0], "se", s1, t2)
    if s1 in SITES and t1 == TWO and t2 in SITES:
        return Action(first[0], "esa", s1, t2)
    return None


def parse_pathway(text: str, project: str) -> PathwaySpec:
    """Parse bracket notation, e.g. ``parse_pathway("c(1'0)c(01)a(10)", "1'")``."""
    toks = _tokens(text)
    acts, i = [], 0
    while i < len(toks):
        pulse, src, dst = toks[i]
        if i + 1 < len(toks) and toks[i + 1][0] == pulse:
            act = _pair_kind(toks[i], toks[i + 1])
            if act is None:
                raise ValueError(f"unsupported second-order pair in {text!r}")
            acts.append(act)
            i += 2
            continue
        if src == GROUND and dst in SITES:
            acts.append(Action(pulse, "up", src, dst))
        elif src in SITES and dst == GROUND:
            acts.append(Action(pulse, "down", src, dst))
        else:
            raise ValueError(f"unsupported first-order factor {pulse}({dst}{src}) in {text!r}")
        i += 1
    return PathwaySpec(tuple(acts), project, text)


# Orientational tables: (weight, bra, bra projection, ket, ket projection).
# Rows follow the usual ordering of the stimulated-emission terms.
PP_NUMERATOR = (1 / 30, (
    (4, "a(10)", "1", "c(10)c(01)a(10)", "1"),
    (4, "a(1'0)", "1'", "c(1'0)c(01')a(1'0)", "1'"),
    (-2, "a(1'0)", "1", "c(10)c(01)a(1'0)", "1"),
    (3, "a(1'0)", "1'", "c(1'0)c(01)a(10)", "1'"),
    (3, "a(1'0)", "1", "c(10)c(01')a(10)", "1"),
    (3, "a(10)", "1'", "c(1'0)c(01)a(1'0)", "1'"),
    (3, "a(10)", "1", "c(10)c(01')a(1'0)", "1"),
    (-2, "a(10)", "1'", "c(1'0)c(01')a(10)", "1'"),
))
PP_NUMERATOR_HALVED = (2 / 30, (
    (4, "a(10)", "1", "c(10)c(01)a(10)", "1"),
    (-2, "a(1'0)", "1", "c(10)c(01)a(1'0)", "1"),
    (3, "a(1'0)", "1'", "c(1'0)c(01)a(10)", "1'"),
    (3, "a(1'0)", "1", "c(10)c(01')a(10)", "1"),
))
PP_DENOMINATOR = (1 / 3, (
    (1, "a(10)", "1", "c(10)c(01)a(10)", "1"),
    (1, "a(1'0)", "1", "c(10)c(01)a(1'0)", "1"),
    (1, "a(10)", "1'", "c(1'0)c(01')a(10)", "1'"),
    (1, "a(1'0)", "1'", "c(1'0)c(01')a(1'0)", "1'"),
))
PP_DENOMINATOR_HALVED = (2 / 3, (
    (1, "a(10)", "1", "c(10)c(01)a(10)", "1"),
    (1, "a(1'0)", "1", "c(10)c(01)a(1'0)", "1"),
))
PPD_NUMERATOR = (2 / 30, (
    (2, "a(10)", "1", "c(10)c(01)a(10)p(01')p(1'0)", "1"),
    (1, "a(1'0)", "1'", "c(1'0)c(01)a(10)p(01)p(10)", "1'"),
    (1, "a(1'0)", "1'", "c(1'0)c(01)a(10)p(01')p(1'0)", "1'"),
    (2, "a(10)p(01')p(1'0)", "1", "c(10)c(01)a(10)", "1"),
    (1, "a(1'0)p(01)p(10)", "1'", "c(1'0)c(01)a(10)", "1'"),
    (1, "a(1'0)p(01')p(1'0)", "1'", "c(1'0)c(01)a(10)", "1'"),
))
# A ket ending in c(1'0) lives on site 1', so the third and seventh rows
# project on 1' on both sides.
PPD_DENOMINATOR = (2 / 105, (
    (9, "a(10)", "1", "c(10)c(01)a(10)p(01)p(10)", "1"),
    (-1, "a(1'0)", "1'", "c(1'0)c(01)a(10)p(01)p(10)", "1'"),
    (-1, "a(1'0)", "1'", "c(1'0)c(01)a(10)p(01')p(1'0)", "1'"),
    (13, "a(10)", "1", "c(10)c(01)a(10)p(01')p(1'0)", "1"),
    (9, "a(10)p(01)p(10)", "1", "c(10)c(01)a(10)", "1"),
    (-1, "a(1'0)p(01)p(10)", "1'", "c(1'0)c(01)a(10)", "1'"),
    (-1, "a(1'0)p(01')p(1'0)", "1'", "c(1'0)c(01)a(10)", "1'"),
    (13, "a(10)p(01')p(1'0)", "1", "c(10)c(01)a(10)", "1"),
))

ALL_TABLES = (PP_NUMERATOR, PP_NUMERATOR_HALVED, PP_DENOMINATOR,
              PP_DENOMINATOR_HALVED, PPD_NUMERATOR, PPD_DENOMINATOR)


def _key(term):
    _, bra, bra_site, ket, ket_site = term
    return (bra, bra_site, ket, ket_site)


class OverlapTable(dict):
    """Overlap values keyed by (bra, bra projection, ket, ket projection)."""

    @classmethod
    def uniform(cls, value, tables=ALL_TABLES):
        """Every overlap any of ``tables`` needs set to ``value``."""
        return cls({_key(t): complex(value) for _, terms in tables for t in terms})

    def combine(self, table) -> float:
        weight, terms = table
        return float(weight * sum(c * self[_key(t)].real for t, c in
                                  ((t, t[0]) for t in terms)))

    def scale(self) -> float:
        return max((abs(v) for v in self.values()), default=0.0)


def se_hh_minus_hv(table: OverlapTable) -> float:
    return table.combine(PP_NUMERATOR)


def se_hh_plus_2hv(table: OverlapTable) -> float:
    return table.combine(PP_DENOMINATOR)


def se_hh_minus_hv_halved(table: OverlapTable) -> float:
    """Four-term form; equals the eight-term form for a homodimer."""
    return table.combine(PP_NUMERATOR_HALVED)


def se_hh_plus_2hv_halved(table: OverlapTable) -> float:
    return table.combine(PP_DENOMINATOR_HALVED)


def ppd_vhh_minus_vhv(table: OverlapTable) -> float:
    return table.combine(PPD_NUMERATOR)


def ppd_vhh_plus_2vhv(table: OverlapTable) -> float:
    return table.combine(PPD_DENOMINATOR)


def anisotropy_from_parts(numerator, denominator, scale, floor=DEFAULT_FLOOR):
    """(parallel - perpendicular) / (parallel + 2 perpendicular) with a guard.

    ``scale`` is the largest overlap magnitude entering the combination.
    """
    if not np.isfinite(denominator) or abs(denominator) <= floor * scale:
        raise DegenerateDenominator(
            f"isotropic signal {denominator:.3e} below floor {floor:.1e} x {scale:.3e}")
    return numerator / denominator


def pp_ratio_term(table: OverlapTable) -> float:
    """Re<a(1'0)|c(1'0)c(01)a(10)>_1' / Re<a(10)|c(10)c(01)a(10)>_1."""
    cross = table[("a(1'0)", "1'", "c(1'0)c(01)a(10)", "1'")].real
    same = table[("a(10)", "1", "c(10)c(01)a(10)", "1")].real
    return cross / same


def r_pp_zero_delay(table: OverlapTable) -> float:
    """Compact pump-probe anisotropy valid when transfer overlaps vanish."""
    return 0.4 + 0.3 * pp_ratio_term(table)


def ppd_ratio_term(table: OverlapTable) -> float:
    same = (table[("a(10)", "1", "c(10)c(01)a(10)p(01)p(10)", "1")]
            + table[("a(10)p(01)p(10)", "1", "c(10)c(01)a(10)", "1")]).real
    other = (table[("a(10)", "1", "c(10)c(01)a(10)p(01')p(1'0)", "1")]
             + table[("a(10)p(01')p(1'0)", "1", "c(10)c(01)a(10)", "1")]).real
    return same / other


def r_ppd_zero_delay(table: OverlapTable) -> float:
    """Compact difference anisotropy, valid when c(1'0)c(01) terms vanish."""
    return 7.0 / (13.0 + 9.0 * ppd_ratio_term(table))


class SignalEngine:
    """Evaluates pathways for one model and one pulse sequence.

    Pulse centers: control ``P`` at ``-t_PA``, pump ``A`` at 0, probe ``C``
    at ``t_CA``.  Propagator blocks are built on first use under a lock and
    reused; everything else is read-only.
    """

    def __init__(self, model: DimerModel, pulses: dict, t_PA: float = 0.0,
                 t_CA: float = 0.0):
        if t_PA < 0 or t_CA < 0:
            raise ValueError("delays must be non-negative")
        self.model = model
        self.t_PA = float(t_PA)
        self.t_CA = float(t_CA)
        times = {"P": -self.t_PA, "A": 0.0, "C": self.t_CA}
        self.pulses = {}
        for key, pulse in pulses.items():
            if key not in times:
                raise ValueError(f"unknown pulse id {key!r}; expected P, A or C")
            self.pulses[key] = replace(pulse, t_center=times[key], name=key)
        self._blocks = {}
        self._lock = threading.Lock()

    def block(self, action: Action) -> np.ndarray:
        key = (action.pulse, action.kind, action.source, action.target, action.via)
        with self._lock:
            if key not in self._blocks:
                try:
                    pulse = self.pulses[action.pulse]
                except KeyError:
                    raise ValueError(f"pathway uses pulse {action.pulse!r}, not configured") from None
                self._blocks[key] = build_block(action.kind, pulse, self.model,
                                                action.source, action.target,
                                                via=action.via).matrix
            return self._blocks[key]

    def pulse_time(self, pulse_id: str) -> float:
        try:
            return self.pulses[pulse_id].t_center
        except KeyError:
            raise ValueError(f"pathway uses pulse {pulse_id!r}, not configured") from None

    def evaluate_pathway(self, spec: PathwaySpec, until: float | None = None) -> PathwayState:
        """Apply the actions in order from the vibronic ground state.

        Free evolution runs between consecutive pulse centers, and after the
        last action up to ``until`` if given.
        """
        model = self.model
        label = GROUND
        state = PathwayState("ground", {GROUND: model.basis.ground_state()})
        now = None
        for act in spec.actions:
            t = self.pulse_time(act.pulse)
            if now is not None:
                if t < now:
                    raise ValueError(f"{spec.text}: actions out of time order")
                state = model.propagate(state, t - now)
            now = t
            if manifold_of(act.source) != manifold_of(label):
                raise ManifoldMismatch(f"{spec.text}: {act} applied to state in {label}")
            vec = self.block(act) @ state.component(act.source)
            label = act.target
            if manifold_of(label) == "one_exciton":
                state = PathwayState("one_exciton", {label: vec})
            else:
                state = PathwayState(manifold_of(label), {label: vec})
        if until is not None and now is not None and until > now:
            state = model.propagate(state, until - now)
        return state

    def end_time(self, spec: PathwaySpec) -> float:
        return max((self.pulse_time(a.pulse) for a in spec.actions), default=0.0)

    def overlap(self, bra: PathwaySpec, ket: PathwaySpec) -> complex:
        """<bra|ket> between the projected components at a common time."""
        if bra.project != ket.project:
            raise ManifoldMismatch(f"projections differ: {bra.project} vs {ket.project}")
        t_end = max(self.end_time(bra), self.end_time(ket))
        b = self.evaluate_pathway(bra, until=t_end)
        k = self.evaluate_pathway(ket, until=t_end)
        return complex(np.vdot(b.component(bra.project), k.component(ket.project)))

    def overlap_text(self, bra: str, bra_site: str, ket: str, ket_site: str) -> complex:
        return self.overlap(parse_pathway(bra, bra_site), parse_pathway(ket, ket_site))

    def table(self, tables) -> OverlapTable:
        out = OverlapTable()
        for _, terms in tables:
            for term in terms:
                key = _key(term)
                if key not in out:
                    out[key] = self.overlap_text(*key)
        return out


@dataclass(frozen=True)
class PumpProbeResult:
    difference: float  # HH - HV (or VHH - VHV)
    isotropic: float  # HH + 2 HV (or VHH + 2 VHV)
    anisotropy: float
    table: OverlapTable


def pump_probe(model: DimerModel, pulses: dict, t_CA: float = 0.0,
               floor: float = DEFAULT_FLOOR) -> PumpProbeResult:
    engine = SignalEngine(model, {k: pulses[k] for k in ("A", "C")}, 0.0, t_CA)
    table = engine.table((PP_NUMERATOR, PP_DENOMINATOR))
    num, den = se_hh_minus_hv(table), se_hh_plus_2hv(table)
    return PumpProbeResult(num, den, anisotropy_from_parts(num, den, table.scale(), floor), table)


def pump_probe_difference(model: DimerModel, pulses: dict, t_PA: float = 0.0,
                          t_CA: float = 0.0, floor: float = DEFAULT_FLOOR) -> PumpProbeResult:
    engine = SignalEngine(model, {k: pulses[k] for k in ("P", "A", "C")}, t_PA, t_CA)
    table = engine.table((PPD_NUMERATOR, PPD_DENOMINATOR))
    num, den = ppd_vhh_minus_vhv(table), ppd_vhh_plus_2vhv(table)
    return PumpProbeResult(num, den, anisotropy_from_parts(num, den, table.scale(), floor), table)


SWEEP_MODES = ("pp", "ppd_impulsive_control", "ppd_finite_control")


def duration_sweep(model: DimerModel, pulses: dict, grid, mode: str = "pp",
                   t_PA: float = 0.0, impulsive_sigma: float | None = None,
                   threads: int = 1, floor: float = DEFAULT_FLOOR):
    """Zero-delay anisotropy over (sigma_A, sigma_C) pairs.

    ``ppd_impulsive_control`` replaces the control duration with
    ``impulsive_sigma`` (default: period / 200) and rescales its amplitude to
    keep the pulse area.  Rows come back in grid order.
    """
    grid = [(float(a), float(c)) for a, c in grid]
    if not grid:
        raise ValueError("duration grid is empty")
    if any(a <= 0 or c <= 0 for a, c in grid):
        raise ValueError("pulse durations must be positive")
    if mode not in SWEEP_MODES:
        raise ValueError(f"mode must be one of {SWEEP_MODES}")
    base = dict(pulses)
    if mode == "ppd_impulsive_control":
        ctrl = base["P"]
        sig = impulsive_sigma if impulsive_sigma is not None else model.params.period / 200
        base["P"] = replace(ctrl, sigma=sig, amplitude=ctrl.amplitude * ctrl.sigma / sig)

    def point(sig):
        sa, sc = sig
        ps = dict(base)
        ps["A"] = replace(base["A"], sigma=sa)
        ps["C"] = replace(base["C"], sigma=sc)
        try:
            if mode == "pp":
                return pump_probe(model, ps, 0.0, floor).anisotropy
            return pump_probe_difference(model, ps, t_PA, 0.0, floor).anisotropy
        except Exception as exc:
            raise SweepPointError(sig, exc) from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(point, grid))
    else:
        values = [point(g) for g in grid]
    return [(sa, sc, r) for (sa, sc), r in zip(grid, values)]
