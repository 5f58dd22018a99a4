"""Two-site vibronic dimer: basis, Franck-Condon overlaps, free propagation.

Each monomer carries one harmonic mode of frequency ``omega``.  Exciting
site 1 displaces mode a, exciting site 1' displaces mode b, and the doubly
excited state displaces both.  The dimensionless minimum shift is
``x0 = sqrt(2) * delta`` (Huang-Rhys factor ``delta**2``), so the vertical
gap at the ground-state equilibrium is ``eps1 + delta**2 * omega``.

Vectors for every electronic state are stored in that state's own
vibrational eigenbasis, truncated to ``n_max`` levels per mode.  Zero-point
energy is dropped everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "GROUND", "SITE1", "SITE1P", "TWO", "SITES", "MANIFOLD_OFFSET_KEYS",
    "ModelParams", "VibronicBasis", "PathwayState", "DimerModel",
    "fc_overlap", "fc_table", "fc_matrix", "manifold_energies",
    "ground_propagator", "one_exciton_propagator",
]

# Electronic state labels, written the way the pathway notation writes them.
GROUND = "0"
SITE1 = "1"
SITE1P = "1'"
TWO = "2"
SITES = (SITE1, SITE1P)
MANIFOLD_OFFSET_KEYS = {GROUND: None, SITE1: "eps1", SITE1P: "eps1p", TWO: "eps2"}

MAX_LEVEL = 200


@dataclass(frozen=True)
class ModelParams:
    """Dimer energetics in natural units (hbar = 1).

    ``eps1p`` defaults to ``eps1`` (homodimer) and ``eps2`` to
    ``eps1 + eps1p`` (no biexciton shift).  ``J`` has no default.
    """

    omega: float
    delta: float
    eps1: float
    J: float
    eps1p: float | None = None
    eps2: float | None = None
    m: float = 1.0

    def __post_init__(self):
        if self.eps1p is None:
            object.__setattr__(self, "eps1p", float(self.eps1))
        if self.eps2 is None:
            object.__setattr__(self, "eps2", float(self.eps1) + float(self.eps1p))
        for name in ("omega", "delta", "eps1", "eps1p", "eps2", "J", "m"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.m <= 0:
            raise ValueError("m must be positive")

    @property
    def displacement(self) -> float:
        return float(np.sqrt(2.0) * self.delta)

    @property
    def huang_rhys(self) -> float:
        return float(self.delta**2)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def homodimer(self) -> bool:
        return self.eps1 == self.eps1p

    def offset(self, state: str) -> float:
        key = MANIFOLD_OFFSET_KEYS[state]
        return 0.0 if key is None else float(getattr(self, key))

    def site_energy(self, site: str) -> float:
        if site not in SITES:
            raise ValueError(f"not a one-exciton site: {site!r}")
        return self.offset(site)

    def swapped(self) -> "ModelParams":
        """Model with the site labels 1 and 1' exchanged."""
        return ModelParams(self.omega, self.delta, self.eps1p, self.J,
                           eps1p=self.eps1, eps2=self.eps2, m=self.m)


@dataclass(frozen=True)
class VibronicBasis:
    """Product basis (nu_a, nu_b), 0 <= nu < n_max, nu_a-major ordering."""

    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")
        if self.n_max > MAX_LEVEL:
            raise ValueError(f"n_max above supported cap {MAX_LEVEL}")

    @property
    def size(self) -> int:
        return self.n_max * self.n_max

    def index(self, nu_a: int, nu_b: int) -> int:
        if not (0 <= nu_a < self.n_max and 0 <= nu_b < self.n_max):
            raise IndexError(f"level ({nu_a}, {nu_b}) outside basis")
        return nu_a * self.n_max + nu_b

    def levels(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.size:
            raise IndexError(index)
        return divmod(index, self.n_max)

    @property
    def nu_a(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_max), self.n_max)

    @property
    def nu_b(self) -> np.ndarray:
        return np.tile(np.arange(self.n_max), self.n_max)

    def swap_modes(self, vec_or_mat):
        """Apply the a <-> b permutation to a vector or (both sides of) a matrix."""
        n = self.n_max
        arr = np.asarray(vec_or_mat)
        if arr.ndim == 1:
            return arr.reshape(n, n).T.reshape(-1)
        return arr.reshape(n, n, n, n).transpose(1, 0, 3, 2).reshape(n * n, n * n)

    def ground_state(self) -> np.ndarray:
        v = np.zeros(self.size, dtype=complex)
        v[0] = 1.0
        return v


@dataclass
class PathwayState:
    """A perturbative wave packet in one electronic manifold.

    ``amplitudes`` maps electronic state label to a complex vector over the
    vibronic basis of that state.  The one-exciton manifold has two entries
    (sites 1 and 1'); the others have one.
    """

    manifold: str
    amplitudes: dict = field(default_factory=dict)

    def __post_init__(self):
        allowed = {"ground": (GROUND,), "one_exciton": SITES, "two_exciton": (TWO,)}
        if self.manifold not in allowed:
            raise ValueError(f"unknown manifold {self.manifold!r}")
        keys = allowed[self.manifold]
        sizes = {np.asarray(v).shape for v in self.amplitudes.values()}
        if len(sizes) > 1:
            raise ValueError("amplitude vectors differ in length")
        if set(self.amplitudes) - set(keys):
            raise ValueError(f"labels {set(self.amplitudes) - set(keys)} not in {self.manifold}")
        size = sizes.pop()[0] if sizes else None
        for key in keys:
            if key not in self.amplitudes:
                if size is None:
                    raise ValueError("cannot infer vector length")
                self.amplitudes[key] = np.zeros(size, dtype=complex)
            else:
                self.amplitudes[key] = np.asarray(self.amplitudes[key], dtype=complex)

    def component(self, label: str) -> np.ndarray:
        return self.amplitudes[label]

    def norm_sq(self) -> float:
        return float(sum(np.vdot(v, v).real for v in self.amplitudes.values()))


def manifold_of(label: str) -> str:
    return {GROUND: "ground", SITE1: "one_exciton", SITE1P: "one_exciton",
            TWO: "two_exciton"}[label]


@lru_cache(maxsize=64)
def _fc_table_cached(n: int, displacement: float) -> np.ndarray:
    lam = displacement / np.sqrt(2.0)
    t = np.zeros((n, n))
    t[0, 0] = np.exp(-0.5 * lam * lam)
    for e in range(1, n):
        t[0, e] = -lam / np.sqrt(e) * t[0, e - 1]
    for g in range(1, n):
        t[g, 0] = lam / np.sqrt(g) * t[g - 1, 0]
        for e in range(1, n):
            t[g, e] = (lam * t[g - 1, e] + np.sqrt(e) * t[g - 1, e - 1]) / np.sqrt(g)
    t.setflags(write=False)
    return t


def fc_table(n: int, displacement: float) -> np.ndarray:
    """Overlaps T[g, e] = <g | e shifted by ``displacement``> for g, e < n.

    Rows are levels of the undisplaced oscillator, columns of the one whose
    minimum sits at ``+displacement`` (dimensionless coordinate).  Sign
    convention: T[1, 0] has the sign of ``+displacement`` and T[0, 1] the
    opposite sign.
    """
    if n < 1 or n > MAX_LEVEL:
        raise ValueError(f"level count {n} outside [1, {MAX_LEVEL}]")
    return _fc_table_cached(int(n), float(displacement))


def fc_overlap(nu_g: int, nu_e: int, displacement: float) -> float:
    if nu_g < 0 or nu_e < 0:
        raise ValueError("levels must be non-negative")
    top = max(nu_g, nu_e) + 1
    if top > MAX_LEVEL:
        raise ValueError(f"level cap {MAX_LEVEL} exceeded")
    return float(fc_table(top, displacement)[nu_g, nu_e])


def fc_matrix(basis: VibronicBasis, displaced_mode: str, delta: float) -> np.ndarray:
    """Two-mode overlap matrix <(nu_a, nu_b)_ground | (mu_a, mu_b)_displaced>.

    ``displaced_mode`` is "a", "b" or "both"; undisplaced modes contribute a
    Kronecker delta.
    """
    n = basis.n_max
    t = fc_table(n, np.sqrt(2.0) * delta)
    eye = np.eye(n)
    if displaced_mode == "a":
        return np.kron(t, eye)
    if displaced_mode == "b":
        return np.kron(eye, t)
    if displaced_mode == "both":
        return np.kron(t, t)
    raise ValueError(f"displaced_mode must be 'a', 'b' or 'both', got {displaced_mode!r}")


_NAMED_MANIFOLDS = {"ground": GROUND, "site1": SITE1, "site1p": SITE1P,
                    "two_exciton": TWO}


def manifold_energies(params: ModelParams, basis: VibronicBasis, manifold: str) -> np.ndarray:
    """offset + omega * (nu_a + nu_b) over the basis.

    ``manifold`` accepts "ground", "site1", "site1p", "two_exciton" or the
    short labels "0", "1", "1'", "2".
    """
    label = _NAMED_MANIFOLDS.get(manifold, manifold)
    if label not in MANIFOLD_OFFSET_KEYS:
        raise ValueError(f"unknown manifold {manifold!r}")
    return params.offset(label) + params.omega * (basis.nu_a + basis.nu_b).astype(float)


class DimerModel:
    """Model plus basis with every derived matrix built up front.

    Instances are read-only after ``__init__``; they can be shared between
    threads.
    """

    def __init__(self, params: ModelParams, basis: VibronicBasis):
        self.params = params
        self.basis = basis
        n = basis.n_max
        self.fc = fc_table(n, params.displacement)
        self.energies = {lab: manifold_energies(params, basis, lab)
                         for lab in MANIFOLD_OFFSET_KEYS}
        # <(nu)_1 | (mu)_1'>: mode a excited->ground, mode b ground->excited
        self.site_overlap = np.kron(self.fc.T, self.fc)
        size = basis.size
        h = np.zeros((2 * size, 2 * size))
        h[:size, :size] = np.diag(self.energies[SITE1])
        h[size:, size:] = np.diag(self.energies[SITE1P])
        h[:size, size:] = params.J * self.site_overlap
        h[size:, :size] = params.J * self.site_overlap.T
        assert np.array_equal(h, h.T), "one-exciton Hamiltonian is not Hermitian"
        self.one_exciton_hamiltonian = h
        self._evals, self._evecs = np.linalg.eigh(h)

    def ground_phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.energies[GROUND] * t)

    def two_exciton_phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.energies[TWO] * t)

    def one_exciton_propagator(self, t: float) -> np.ndarray:
        """exp(-i H_ex t) on the stacked (site 1, site 1') vector."""
        if t == 0:
            return np.eye(2 * self.basis.size, dtype=complex)
        phases = np.exp(-1j * self._evals * t)
        return (self._evecs * phases) @ self._evecs.T

    def propagate(self, state: PathwayState, t: float) -> PathwayState:
        """Free evolution of a pathway state for a duration ``t``."""
        if t < 0:
            raise ValueError("free evolution needs t >= 0")
        if t == 0:
            return PathwayState(state.manifold, dict(state.amplitudes))
        if state.manifold == "ground":
            return PathwayState("ground", {GROUND: self.ground_phases(t) * state.component(GROUND)})
        if state.manifold == "two_exciton":
            return PathwayState("two_exciton", {TWO: self.two_exciton_phases(t) * state.component(TWO)})
        size = self.basis.size
        if self.params.J == 0:
            v1 = np.exp(-1j * self.energies[SITE1] * t) * state.component(SITE1)
            v2 = np.exp(-1j * self.energies[SITE1P] * t) * state.component(SITE1P)
        else:
            stacked = np.concatenate([state.component(SITE1), state.component(SITE1P)])
            phases = np.exp(-1j * self._evals * t)
            out = self._evecs @ (phases * (self._evecs.T @ stacked))
            v1, v2 = out[:size], out[size:]
        return PathwayState("one_exciton", {SITE1: v1, SITE1P: v2})


@lru_cache(maxsize=32)
def _model(params: ModelParams, basis: VibronicBasis) -> DimerModel:
    return DimerModel(params, basis)


def one_exciton_propagator(params: ModelParams, basis: VibronicBasis, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be >= 0")
    return _model(params, basis).one_exciton_propagator(t)


def ground_propagator(params: ModelParams, basis: VibronicBasis, t: float) -> np.ndarray:
    """Diagonal of exp(-i H_0 t) in the ground vibronic basis."""
    return np.exp(-1j * params.omega * (basis.nu_a + basis.nu_b) * t)
