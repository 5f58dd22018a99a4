"""Invariant suite run by ``dimer-ppwpi selftest``."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .pulse_propagators import PulseParams, TruncationWarning
from .signal_engine import (
    PP_DENOMINATOR, PP_NUMERATOR, SignalEngine, parse_pathway, pump_probe,
    pump_probe_difference, se_hh_minus_hv, se_hh_minus_hv_halved, se_hh_plus_2hv,
    se_hh_plus_2hv_halved,
)
from .special_functions import nested_gaussian_integral, quadrature_oracle
from .vibronic_model import DimerModel, ModelParams, VibronicBasis, fc_table

__all__ = ["Check", "default_setup", "run_selftest", "format_report"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def default_setup(J=0.1, n_max=16):
    """Reference parameters: delta^2 = 2.5, eps1 = 20, omega = 1."""
    params = ModelParams(omega=1.0, delta=math.sqrt(2.5), eps1=20.0, J=J)
    period = params.period
    pulses = {
        "P": PulseParams(1.0, period / 8, params.eps1 - 12.5, polarization="V", name="P"),
        "A": PulseParams(1.0, period / 4, params.eps1 + 2.5, name="A"),
        "C": PulseParams(1.0, period / 4, params.eps1 - 7.5, name="C"),
    }
    return DimerModel(params, VibronicBasis(n_max)), pulses


def _transfer_overlaps(n_max):
    model, pulses = default_setup(J=0.1, n_max=n_max)
    engine = SignalEngine(model, {k: pulses[k] for k in "AC"})
    table = engine.table((PP_NUMERATOR,))
    transfer = [v for (bra, bs, ket, ks), v in table.items() if not bra.startswith(f"a({bs}0)")]
    return max(abs(v) for v in transfer) / table.scale()


def _j_independence(n_max):
    period = 2 * math.pi
    pp, ppd = [], []
    for J in (0.0, 0.1, 1.0):
        model, pulses = default_setup(J=J, n_max=n_max)
        pp.append(pump_probe(model, pulses).anisotropy)
        ppd.append(pump_probe_difference(model, pulses, t_PA=period / 4).anisotropy)
    return max(np.ptp(pp), np.ptp(ppd))


def _amplitude_phase(n_max):
    model, pulses = default_setup(n_max=n_max)
    base = pump_probe(model, pulses).anisotropy
    scaled = {"A": replace(pulses["A"], amplitude=2.5, phase=0.7),
              "C": replace(pulses["C"], amplitude=0.3, phase=-1.9)}
    return abs(pump_probe(model, scaled).anisotropy - base)


def _relabeling(n_max):
    model, pulses = default_setup(n_max=n_max)
    engine = SignalEngine(model, {k: pulses[k] for k in "AC"})
    worst = 0.0
    for _, terms in (PP_NUMERATOR,):
        for _, bra, bs, ket, ks in terms:
            b, k = parse_pathway(bra, bs), parse_pathway(ket, ks)
            direct = engine.overlap(b, k)
            swapped = engine.overlap(b.relabeled(), k.relabeled())
            worst = max(worst, abs(direct - swapped) / max(abs(direct), 1e-300))
    return worst


def _halved_forms(n_max):
    model, pulses = default_setup(J=0.1, n_max=n_max)
    engine = SignalEngine(model, {k: pulses[k] for k in "AC"}, t_CA=1.3)
    table = engine.table((PP_NUMERATOR, PP_DENOMINATOR))
    num = abs(se_hh_minus_hv(table) - se_hh_minus_hv_halved(table))
    den = abs(se_hh_plus_2hv(table) - se_hh_plus_2hv_halved(table))
    return max(num, den) / table.scale()


def _fc_completeness(_n_max):
    t = fc_table(30, math.sqrt(2.0) * math.sqrt(2.5))
    return abs((t[0] ** 2).sum() - 1.0)


def _unitarity(n_max):
    model, _ = default_setup(J=0.1, n_max=n_max)
    u = model.one_exciton_propagator(0.9)
    return np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()


def _group_property(n_max):
    model, _ = default_setup(J=0.1, n_max=n_max)
    lhs = model.one_exciton_propagator(0.4 + 1.1)
    rhs = model.one_exciton_propagator(0.4) @ model.one_exciton_propagator(1.1)
    return np.abs(lhs - rhs).max()


def _integral_spot_check(_n_max):
    worst = 0.0
    for a, b, s in ((1.5, -2.0, 0.5), (-3.0, 4.5, 1.0), (0.0, 0.0, 2.0)):
        ref = quadrature_oracle(a, b, s)
        worst = max(worst, abs(nested_gaussian_integral(a, b, s) - ref) / abs(ref))
    return worst


CHECKS = (
    ("zero-delay transfer overlaps vanish", _transfer_overlaps, 1e-14),
    ("J-independence at zero delay", _j_independence, 1e-12),
    ("amplitude and phase invariance", _amplitude_phase, 1e-12),
    ("homodimer relabeling invariance", _relabeling, 1e-12),
    ("four-term and eight-term PP forms agree", _halved_forms, 1e-12),
    ("FC completeness at n_max=30", _fc_completeness, 1e-10),
    ("one-exciton propagator unitarity", _unitarity, 1e-12),
    ("one-exciton propagator group property", _group_property, 1e-12),
    ("ordered Gaussian integral vs quadrature", _integral_spot_check, 1e-8),
)


def run_selftest(n_max: int = 16, progress=None) -> list[Check]:
    results = []
    for name, fn, tol in CHECKS:
        t0 = time.perf_counter()
        try:
            # the invariants hold in any truncated basis
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                value = float(fn(n_max))
        except Exception:  # a crashing check is a failed check
            value = float("nan")
        check = Check(name, value, tol, time.perf_counter() - t0)
        results.append(check)
        if progress is not None:
            progress(check)
    return results


def format_report(check: Check) -> str:
    status = "PASS" if check.passed else "FAIL"
    return f"{status}  {check.name}: {check.value:.3e} (tol {check.tolerance:.0e}, {check.seconds:.2f} s)"
