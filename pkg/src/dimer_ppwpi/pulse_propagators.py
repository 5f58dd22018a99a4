"""First- and second-order pulse propagators in the vibronic eigenbases.

Every block is the action of one complete Gaussian pulse, expressed in the
interaction picture referenced to the pulse center, so free evolution
between pulse centers is applied separately.  The field enters as
``E f(t) cos(Omega (t - t_I) + phase)`` with ``f`` a unit-height Gaussian of
rms width ``sigma``; in the rotating-wave approximation an upward transition
carries ``exp(-i phase)`` and a downward one ``exp(+i phase)``.  Blocks keep
the ``(i E m / 2)**n`` prefactor.

Second-order blocks are time ordered within the pulse (the earlier action
at ``t1``), which is what the ordered integral
:func:`~dimer_ppwpi.special_functions.nested_gaussian_integral` describes.
Transfer between sites during a pulse is neglected.

Matrix conventions: rows index the target state, columns the source state,
each in the vibrational eigenbasis of its own electronic state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .special_functions import nested_gaussian_integral
from .vibronic_model import GROUND, SITE1, SITE1P, SITES, TWO, DimerModel

__all__ = [
    "PulseParams", "PropagatorBlock", "TruncationWarning",
    "first_order_up", "first_order_down", "gsb_block", "se_block",
    "se_cross_block", "esa_block", "esa_cross_block", "build_block",
    "TRUNCATION_RTOL",
]

TRUNCATION_RTOL = 1e-10


class TruncationWarning(UserWarning):
    """The top intermediate level still matters for a block element."""


@dataclass(frozen=True)
class PulseParams:
    amplitude: float
    sigma: float
    omega_c: float
    t_center: float = 0.0
    polarization: str = "H"
    phase: float = 0.0
    name: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"pulse sigma must be positive, got {self.sigma}")
        if self.polarization not in ("H", "V"):
            raise ValueError(f"polarization must be 'H' or 'V', got {self.polarization!r}")
        for name in ("amplitude", "omega_c", "t_center", "phase"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"pulse {name} must be finite")


@dataclass(frozen=True)
class PropagatorBlock:
    kind: str
    source: str
    target: str
    matrix: np.ndarray
    order: int
    pulse_id: str = ""


def _prefactor(pulse: PulseParams, model: DimerModel) -> complex:
    return 0.5j * pulse.amplitude * model.params.m


def _other(site):
    return SITE1P if site == SITE1 else SITE1


def _check_site(site):
    if site not in SITES:
        raise ValueError(f"site must be one of {SITES}, got {site!r}")


def _place(mode_matrix, site, n):
    # site 1 couples to mode a (first kron factor), site 1' to mode b
    eye = np.eye(n)
    return np.kron(mode_matrix, eye) if site == SITE1 else np.kron(eye, mode_matrix)


def _warn_truncation(terms, kind, pulse_id):
    """terms[k, nu, nubar]: intermediate-level contributions to a mode matrix.

    Only the interior half of the external levels is judged: an element
    whose own level sits at the basis edge is dominated by the top
    intermediate level by construction, whatever the basis size.
    """
    half = max(1, terms.shape[1] // 2)
    terms = terms[:, :half, :half]
    total = terms.sum(axis=0)
    scale = np.abs(total).max()
    if scale == 0:
        return
    # only elements that are not negligible themselves are judged
    mask = np.abs(total) > 1e-8 * scale
    ratio = np.abs(terms[-1])[mask] / np.abs(total)[mask]
    worst = ratio.max() if ratio.size else 0.0
    if worst > TRUNCATION_RTOL:
        warnings.warn(
            f"{kind} block for pulse {pulse_id or '?'}: top intermediate level "
            f"contributes {worst:.2e} of an element; increase n_max",
            TruncationWarning, stacklevel=3)


def _gaussian_filter(detuning, sigma):
    return np.sqrt(2.0 * np.pi) * sigma * np.exp(-0.5 * (sigma * detuning) ** 2)


def first_order_up(pulse: PulseParams, model: DimerModel, site: str) -> PropagatorBlock:
    """Ground -> site: <(nu)_site| p |(nubar)_0>."""
    _check_site(site)
    n, w = model.basis.n_max, model.params.omega
    lev = np.arange(n)
    # detuning[nu_e, nu_g] = E_site(nu_e) - E_0(nu_g) - Omega on the active mode
    det = w * (lev[:, None] - lev[None, :]) + model.params.site_energy(site) - pulse.omega_c
    mode = model.fc.T * _gaussian_filter(det, pulse.sigma)
    mat = _prefactor(pulse, model) * np.exp(-1j * pulse.phase) * _place(mode, site, n)
    return PropagatorBlock("up", GROUND, site, mat, 1, pulse.name)


def first_order_down(pulse: PulseParams, model: DimerModel, site: str) -> PropagatorBlock:
    """Site -> ground: <(nu)_0| p |(nubar)_site>.

    Equal to ``-first_order_up(...).matrix.conj().T`` for the same pulse.
    """
    _check_site(site)
    n, w = model.basis.n_max, model.params.omega
    lev = np.arange(n)
    # detuning[nu_g, nu_e] = Omega - (E_site(nu_e) - E_0(nu_g))
    det = pulse.omega_c - model.params.site_energy(site) - w * (lev[None, :] - lev[:, None])
    mode = model.fc * _gaussian_filter(det, pulse.sigma)
    mat = _prefactor(pulse, model) * np.exp(1j * pulse.phase) * _place(mode, site, n)
    return PropagatorBlock("down", site, GROUND, mat, 1, pulse.name)


def _absorb_then_emit(model, gap, omega_c, sigma, kind, pulse_id):
    """Mode matrix of an up-then-down pair through a displaced intermediate.

    G[nu, nubar] = sum_k T[nu, k] T[nubar, k]
                   I(w (k - nubar) + gap - Omega, w (k - nu) + gap - Omega)
    """
    n, w = model.basis.n_max, model.params.omega
    t = model.fc
    lev = np.arange(n, dtype=float)
    k = lev[:, None, None]
    alpha = w * (k - lev[None, None, :]) + gap - omega_c
    beta = w * (k - lev[None, :, None]) + gap - omega_c
    terms = (t.T[:, :, None] * t.T[:, None, :]) * nested_gaussian_integral(alpha, beta, sigma)
    _warn_truncation(terms, kind, pulse_id)
    return terms.sum(axis=0)


def gsb_block(pulse: PulseParams, model: DimerModel, site: str) -> PropagatorBlock:
    """Ground -> site -> ground within one pulse (bleach / control action)."""
    _check_site(site)
    gap = model.params.site_energy(site)
    mode = _absorb_then_emit(model, gap, pulse.omega_c, pulse.sigma, "GSB", pulse.name)
    mat = _prefactor(pulse, model) ** 2 * _place(mode, site, model.basis.n_max)
    return PropagatorBlock("gsb", GROUND, GROUND, mat, 2, pulse.name)


def esa_block(pulse: PulseParams, model: DimerModel, site: str) -> PropagatorBlock:
    """Site -> doubly excited -> same site; filters the other site's mode."""
    _check_site(site)
    gap = model.params.eps2 - model.params.site_energy(site)
    mode = _absorb_then_emit(model, gap, pulse.omega_c, pulse.sigma, "ESA", pulse.name)
    mat = _prefactor(pulse, model) ** 2 * _place(mode, _other(site), model.basis.n_max)
    return PropagatorBlock("esa", site, site, mat, 2, pulse.name)


def se_block(pulse: PulseParams, model: DimerModel, site: str) -> PropagatorBlock:
    """Site -> ground -> same site (stimulated emission then re-excitation).

    G[nu, nubar] = sum_k T[k, nu] T[k, nubar]
                   I(Omega - eps + w (k - nubar), Omega - eps + w (k - nu))
    with k running over ground levels of the site's mode.
    """
    _check_site(site)
    n, w = model.basis.n_max, model.params.omega
    t = model.fc
    lev = np.arange(n, dtype=float)
    k = lev[:, None, None]
    eps = model.params.site_energy(site)
    alpha = pulse.omega_c - eps + w * (k - lev[None, None, :])
    beta = pulse.omega_c - eps + w * (k - lev[None, :, None])
    terms = (t[:, :, None] * t[:, None, :]) * nested_gaussian_integral(alpha, beta, pulse.sigma)
    _warn_truncation(terms, "SE", pulse.name)
    mode = terms.sum(axis=0)
    mat = _prefactor(pulse, model) ** 2 * _place(mode, site, n)
    return PropagatorBlock("se", site, site, mat, 2, pulse.name)


def _cross_canonical(model, pulse, kind, eps_from, eps_to):
    """Four-index cross block from site 1 to site 1' with given site energies.

    Index order [nu_a, nu_b, nubar_a, nubar_b]; rows in the 1' basis,
    columns in the 1 basis.  No intermediate sum: the intermediate level is
    fixed by the two undisplaced factors.
    """
    n, w = model.basis.n_max, model.params.omega
    t = model.fc
    lev = np.arange(n, dtype=float)
    nu_a = lev[:, None, None, None]
    nu_b = lev[None, :, None, None]
    nb_a = lev[None, None, :, None]
    nb_b = lev[None, None, None, :]
    if kind == "se":
        # 1 (nubar) -> 0 (nu_a, nubar_b) -> 1' (nu)
        alpha = pulse.omega_c - eps_from - w * (nb_a - nu_a)
        beta = pulse.omega_c - eps_to - w * (nu_b - nb_b)
    else:
        # 1 (nubar) -> 2 (nubar_a, nu_b) -> 1' (nu)
        eps2 = model.params.eps2
        alpha = w * (nu_b - nb_b) + (eps2 - eps_from) - pulse.omega_c
        beta = w * (nb_a - nu_a) + (eps2 - eps_to) - pulse.omega_c
    fc = t[:, None, :, None] * t.T[None, :, None, :]  # T[nu_a, nb_a] T[nb_b, nu_b]
    return fc * nested_gaussian_integral(alpha, beta, pulse.sigma)


def _cross_block(pulse, model, from_site, to_site, kind):
    _check_site(from_site)
    _check_site(to_site)
    if from_site == to_site:
        raise ValueError("cross-site block needs two different sites")
    n = model.basis.n_max
    eps_from = model.params.site_energy(from_site)
    eps_to = model.params.site_energy(to_site)
    arr = _cross_canonical(model, pulse, kind, eps_from, eps_to)
    if from_site == SITE1P:
        # relabel 1 <-> 1' together with a <-> b
        arr = arr.transpose(1, 0, 3, 2)
    mat = _prefactor(pulse, model) ** 2 * arr.reshape(n * n, n * n)
    return PropagatorBlock(kind + "_cross", from_site, to_site, mat, 2, pulse.name)


def se_cross_block(pulse: PulseParams, model: DimerModel, from_site: str,
                   to_site: str) -> PropagatorBlock:
    """Emission from one site followed by absorption on the other, same pulse."""
    return _cross_block(pulse, model, from_site, to_site, "se")


def esa_cross_block(pulse: PulseParams, model: DimerModel, from_site: str,
                    to_site: str) -> PropagatorBlock:
    """Absorption to the doubly excited state, then emission leaving the other site."""
    return _cross_block(pulse, model, from_site, to_site, "esa")


def build_block(kind: str, pulse: PulseParams, model: DimerModel, source: str,
                target: str, via: str = "") -> PropagatorBlock:
    """Dispatch on (kind, source, target).

    kinds: "up" (0 -> site), "down" (site -> 0), "gsb" (0 -> 0 through the
    site named by ``via``), "se" and "esa" (site -> site, same or crossed).
    """
    if kind == "up":
        return first_order_up(pulse, model, target)
    if kind == "down":
        return first_order_down(pulse, model, source)
    if kind == "gsb":
        return gsb_block(pulse, model, via)
    if kind in ("se", "esa"):
        if source == target:
            return (se_block if kind == "se" else esa_block)(pulse, model, source)
        return _cross_block(pulse, model, source, target, kind)
    raise ValueError(f"unknown block kind {kind!r}")
