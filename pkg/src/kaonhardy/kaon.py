"""Two-kaon states, regeneration and decay-weighted free evolution.

Internal units: proper time in K_S lifetimes, rates in units of Gamma_S,
hbar = 1. CP violation is ignored, so K_S and K_L are taken orthogonal and

    K_S = (K0 + K0bar) / sqrt(2),    K_L = (K0 - K0bar) / sqrt(2).

Amplitudes of a :class:`TwoKaonState` are ordered (left, right) row-major,
e.g. (SS, SL, LS, LL) in the lifetime basis or (K0K0, K0K0bar, K0barK0,
K0barK0bar) in the strangeness basis.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-12

# Gamma_S / Gamma_L ~ 579 and (m_L - m_S) / Gamma_S ~ 0.47 (particle-data ratios).
DEFAULT_GAMMA_S = 1.0
DEFAULT_GAMMA_L = 1.0 / 579.0
DEFAULT_DELTA_M = 0.47

_SQRT1_2 = 1.0 / math.sqrt(2.0)
# Maps lifetime coordinates (c_S, c_L) to strangeness coordinates (c_0, c_0bar)
# and back; it is its own inverse.
_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) * _SQRT1_2


class Basis(enum.Enum):
    LIFETIME = "lifetime"
    STRANGENESS = "strangeness"

    @property
    def vectors(self) -> tuple[str, str]:
        return ("KS", "KL") if self is Basis.LIFETIME else ("K0", "K0bar")


@dataclass(frozen=True)
class PhysicsParams:
    """Decay rates and mass difference, in units of Gamma_S."""

    gamma_s: float = DEFAULT_GAMMA_S
    gamma_l: float = DEFAULT_GAMMA_L
    delta_m: float = DEFAULT_DELTA_M

    def __post_init__(self):
        for name in ("gamma_s", "gamma_l", "delta_m"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.gamma_s > self.gamma_l >= 0.0:
            raise ValueError("need gamma_s > gamma_l >= 0")

    @property
    def delta_gamma(self) -> float:
        return self.gamma_s - self.gamma_l


@dataclass(frozen=True)
class RegenParams:
    """Regeneration parameter r = r_abs * exp(i r_arg).

    ``r_abs = 0`` is allowed and means no regenerator.
    """

    r_abs: float
    r_arg: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.r_abs) and math.isfinite(self.r_arg)):
            raise ValueError("r_abs and r_arg must be finite")
        if not 0.0 <= self.r_abs < 1.0:
            raise ValueError(f"r_abs must lie in [0, 1), got {self.r_abs}")

    @property
    def r(self) -> complex:
        return cmath.rect(self.r_abs, self.r_arg)


@dataclass(frozen=True)
class TwoKaonState:
    amplitudes: tuple[complex, complex, complex, complex]
    basis: tuple[Basis, Basis] = (Basis.LIFETIME, Basis.LIFETIME)

    def __post_init__(self):
        amps = tuple(complex(a) for a in self.amplitudes)
        if len(amps) != 4:
            raise ValueError("a two-kaon state has exactly four amplitudes")
        norm2 = sum(abs(a) ** 2 for a in amps)
        if abs(norm2 - 1.0) > DEFAULT_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm2!r})")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "basis", (Basis(self.basis[0]), Basis(self.basis[1])))

    @classmethod
    def from_unnormalized(cls, amplitudes, basis=(Basis.LIFETIME, Basis.LIFETIME)) -> TwoKaonState:
        vec = np.asarray(amplitudes, dtype=complex).reshape(4)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(tuple(vec / norm), basis)

    @property
    def matrix(self) -> np.ndarray:
        """Amplitudes as a 2x2 array indexed [left vector, right vector]."""
        return np.array(self.amplitudes, dtype=complex).reshape(2, 2)

    @property
    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amplitudes)))

    def labels(self) -> list[tuple[str, str]]:
        left, right = self.basis
        return [(a, b) for a in left.vectors for b in right.vectors]


@dataclass(frozen=True)
class EvolutionResult:
    state: TwoKaonState
    survival_probability: float


def make_antisymmetric(
    left: Basis = Basis.LIFETIME, right: Basis = Basis.LIFETIME
) -> TwoKaonState:
    """The singlet, (0, 1, -1, 0)/sqrt(2) whenever both sides share a basis.

    (K0 K0bar - K0bar K0)/sqrt(2) and (K_S K_L - K_L K_S)/sqrt(2) differ by a
    global sign, which :func:`transform_basis` makes visible.
    """
    singlet = (0.0, _SQRT1_2, -_SQRT1_2, 0.0)
    left, right = Basis(left), Basis(right)
    if left is right:
        return TwoKaonState(singlet, (left, right))
    return transform_basis(TwoKaonState(singlet), left, right)


def make_symmetric() -> TwoKaonState:
    """(K_S K_S - K_L K_L)/sqrt(2), the p-wave companion of the singlet."""
    return TwoKaonState((_SQRT1_2, 0.0, 0.0, -_SQRT1_2))


def transform_basis(state: TwoKaonState, left: Basis, right: Basis) -> TwoKaonState:
    m = state.matrix
    if state.basis[0] is not Basis(left):
        m = _HADAMARD @ m
    if state.basis[1] is not Basis(right):
        m = m @ _HADAMARD.T
    return TwoKaonState.from_unnormalized(m.reshape(4), (Basis(left), Basis(right)))


def apply_regenerator(state: TwoKaonState, r: complex, side: str = "right") -> TwoKaonState:
    """Pass one member of the pair through a thin regenerator.

    The single-kaon map is K_S -> K_S + r K_L, K_L -> K_L + r K_S, which sends
    the singlet to K_S K_L - K_L K_S + r K_S K_S - r K_L K_L when applied on the
    right. Applied on the left the sign of r in the output flips.
    """
    r = complex(r)
    if abs(r) >= 1.0:
        raise ValueError(f"|r| must be < 1 for a perturbative regenerator, got {abs(r)}")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if state.basis != (Basis.LIFETIME, Basis.LIFETIME):
        raise ValueError("apply_regenerator expects a state in the lifetime basis")
    if r == 0:
        return state
    # columns are images of K_S, K_L in (K_S, K_L) coordinates
    regen = np.array([[1.0, r], [r, 1.0]], dtype=complex)
    m = state.matrix
    m = regen @ m if side == "left" else m @ regen.T
    return TwoKaonState.from_unnormalized(m.reshape(4))


def evolve_undecayed(state: TwoKaonState, T: float, params: PhysicsParams) -> EvolutionResult:
    """Free evolution to proper time ``T``, conditioned on no decay.

    Each K_S picks up exp(i dm T - Gamma_S T / 2) and each K_L
    exp(-Gamma_L T / 2); the common phase exp(-i m_L T) is dropped.
    The survival probability is the squared norm before renormalizing.
    """
    if not T >= 0.0:
        raise ValueError(f"T must be >= 0, got {T}")
    if state.basis != (Basis.LIFETIME, Basis.LIFETIME):
        raise ValueError("evolve_undecayed expects a state in the lifetime basis")
    if T == 0.0:
        return EvolutionResult(state, 1.0)
    f_s = cmath.exp(complex(-0.5 * params.gamma_s * T, params.delta_m * T))
    f_l = math.exp(-0.5 * params.gamma_l * T)
    factors = np.array([f_s, f_l])
    m = state.matrix * np.outer(factors, factors)
    survival = float(np.sum(np.abs(m) ** 2))
    if survival == 0.0:
        raise ValueError(f"survival probability underflows at T = {T}")
    return EvolutionResult(TwoKaonState.from_unnormalized(m.reshape(4)), survival)


def compute_R(r: complex, T: float, params: PhysicsParams) -> complex:
    """R = -r exp{[-i dm + (Gamma_S - Gamma_L)/2] T}."""
    if not T >= 0.0:
        raise ValueError(f"T must be >= 0, got {T}")
    return -complex(r) * cmath.exp(complex(0.5 * params.delta_gamma * T, -params.delta_m * T))


def compute_Rprime(r: complex, R: complex) -> complex:
    if R == 0:
        raise ValueError("R must be nonzero")
    r = complex(r)
    return -r * r / complex(R)


def hardy_family_state(R: complex, Rprime: complex = 0.0) -> TwoKaonState:
    """(K_S K_L - K_L K_S + R K_L K_L + R' K_S K_S) / sqrt(2 + |R|^2 + |R'|^2)."""
    return TwoKaonState.from_unnormalized((Rprime, 1.0, -1.0, R))


def hardy_state() -> TwoKaonState:
    """The R = -1, R' = 0 member: (K_S K_L - K_L K_S - K_L K_L)/sqrt(3)."""
    return hardy_family_state(-1.0)


def prepare_state(
    regen: RegenParams, T: float, params: PhysicsParams, side: str = "right"
) -> EvolutionResult:
    """Singlet -> regenerator -> undecayed evolution to ``T``."""
    return evolve_undecayed(apply_regenerator(make_antisymmetric(), regen.r, side), T, params)


def align_phase(state: TwoKaonState, reference: TwoKaonState) -> TwoKaonState:
    """Return ``state`` times the global phase that best matches ``reference``."""
    if state.basis != reference.basis:
        state = transform_basis(state, *reference.basis)
    a = np.array(state.amplitudes)
    overlap = np.vdot(a, np.array(reference.amplitudes))
    if abs(overlap) == 0.0:
        return state
    return TwoKaonState(tuple(a * (overlap / abs(overlap))), state.basis)


def canonical_phase(state: TwoKaonState) -> TwoKaonState:
    """Fix the global phase so the largest-modulus amplitude is real positive."""
    a = np.array(state.amplitudes)
    k = int(np.argmax(np.abs(a)))
    return TwoKaonState(tuple(a * (abs(a[k]) / a[k])), state.basis)


def states_equal(a: TwoKaonState, b: TwoKaonState, tol: float = DEFAULT_TOL) -> bool:
    """Component-wise equality up to a global phase."""
    aligned = align_phase(a, b)
    return bool(np.max(np.abs(np.array(aligned.amplitudes) - np.array(b.amplitudes))) <= tol)
