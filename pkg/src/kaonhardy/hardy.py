"""Hardy condition solver and local-hidden-variable checks.

A local deterministic strategy fixes, for each kaon, the answer it gives to a
strangeness and to a lifetime measurement; there are 2**4 = 16 of them.
Local models are exactly the probability mixtures of these strategies, so
LHV feasibility of a set of joint-probability targets is a small linear
program. It is solved exactly (``fractions.Fraction``) by enumerating basic
feasible solutions.

Imperfect strangeness detection needs no extra strategies here: a left-side
"unidentified" answer can be relabelled K0bar and a right-side one K0
without changing any of the four Hardy observables.
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from .kaon import (
    Basis,
    PhysicsParams,
    RegenParams,
    TwoKaonState,
    compute_R,
    compute_Rprime,
    hardy_family_state,
    prepare_state,
)
from .measurement import (
    BASIS_OUTCOMES,
    HARDY_CHANNELS,
    JointOutcome,
    Outcome,
    Setting,
    joint_probabilities,
)

HARDY_FRACTION = Fraction(1, 12)
REGIME_MIN_T = 10.0
EXACT_ZERO_TOL = 1e-9


class HardyRegimeWarning(UserWarning):
    """Measurement time shorter than the ~10 tau_S needed for space-like separation."""


@dataclass(frozen=True)
class HardyCertificate:
    r_abs: float
    T_star: float
    required_arg_r: float
    R: complex
    Rprime: complex
    residuals: tuple[float, float, float]
    fraction: float
    fraction_full: float
    survival_probability: float
    regime_warning: bool

    @property
    def regen(self) -> RegenParams:
        return RegenParams(self.r_abs, self.required_arg_r)


def solve_hardy_time(r_abs: float, params: PhysicsParams | None = None) -> HardyCertificate:
    """Find (T, arg r) with R = -1 for a regenerator of strength ``r_abs``.

    |R| = |r| exp((Gamma_S - Gamma_L) T / 2) fixes T; the phase condition
    arg r - dm T = 0 (mod 2 pi) then makes R real and negative. Residuals and
    ``fraction_full`` are evaluated on the full prepared state (R' kept);
    ``fraction`` is the R' = 0 Hardy fraction at the achieved R.
    """
    params = params or PhysicsParams()
    if not 0.0 < r_abs < 1.0:
        raise ValueError(f"r_abs must lie in (0, 1), got {r_abs}")
    T_star = 2.0 * math.log(1.0 / r_abs) / params.delta_gamma
    arg = math.fmod(params.delta_m * T_star, 2.0 * math.pi)
    if arg < 0.0:
        arg += 2.0 * math.pi
    regen = RegenParams(r_abs, arg)
    R = compute_R(regen.r, T_star, params)
    Rprime = compute_Rprime(regen.r, R)
    evolved = prepare_state(regen, T_star, params)
    warn = T_star < REGIME_MIN_T
    if warn:
        warnings.warn(
            f"T_star = {T_star:.4g} tau_S is below {REGIME_MIN_T:g} tau_S; "
            "the kaons may not be space-like separated",
            HardyRegimeWarning,
            stacklevel=2,
        )
    ideal = joint_probabilities(hardy_family_state(R), Setting.STRANGENESS_BOTH)
    full = joint_probabilities(evolved.state, Setting.STRANGENESS_BOTH)
    k0_k0bar = (Outcome.K0, Outcome.K0BAR)
    return HardyCertificate(
        r_abs=r_abs,
        T_star=T_star,
        required_arg_r=arg,
        R=R,
        Rprime=Rprime,
        residuals=hardy_residuals(evolved.state),
        fraction=ideal[k0_k0bar],
        fraction_full=full[k0_k0bar],
        survival_probability=evolved.survival_probability,
        regime_warning=warn,
    )


def hardy_residuals(state: TwoKaonState) -> tuple[float, float, float]:
    """The three probabilities that vanish on the Hardy state: P2, P3, P4."""
    return tuple(joint_probabilities(state, s)[jo] for s, jo in HARDY_CHANNELS[1:])


class LhvStrategy(NamedTuple):
    left_strangeness: Outcome
    left_lifetime: Outcome
    right_strangeness: Outcome
    right_lifetime: Outcome

    def outcome(self, setting: Setting) -> JointOutcome:
        setting = Setting(setting)
        left = self.left_strangeness if setting.left is Basis.STRANGENESS else self.left_lifetime
        right = self.right_strangeness if setting.right is Basis.STRANGENESS else self.right_lifetime
        return JointOutcome(left, right)

    def __str__(self) -> str:
        return "L[{},{}] R[{},{}]".format(*(o.value for o in self))


def enumerate_strategies() -> list[LhvStrategy]:
    s = (Outcome.K0, Outcome.K0BAR)
    t = (Outcome.KS, Outcome.KL)
    return [LhvStrategy(*combo) for combo in itertools.product(s, t, s, t)]


STRATEGIES: tuple[LhvStrategy, ...] = tuple(enumerate_strategies())

Channel = tuple[Setting, JointOutcome]


def normalize_channel(key) -> Channel:
    """Accept 1..4, "P1".."P4" or (setting, (left, right)) and return (Setting, JointOutcome)."""
    if isinstance(key, str) and key.upper().startswith("P") and key[1:].isdigit():
        key = int(key[1:])
    if isinstance(key, int) and not isinstance(key, bool):
        if not 1 <= key <= 4:
            raise ValueError(f"Hardy observable index must be 1..4, got {key}")
        return HARDY_CHANNELS[key - 1]
    try:
        setting, (left, right) = key
        setting = Setting(setting)
        jo = JointOutcome(Outcome(left), Outcome(right))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed constraint key {key!r}") from exc
    if jo.left not in BASIS_OUTCOMES[setting.left] or jo.right not in BASIS_OUTCOMES[setting.right]:
        raise ValueError(f"outcome {jo} is not a definite outcome of setting {int(setting)}")
    return setting, jo


def _as_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise ValueError("constraint targets must be numbers")
    try:
        f = Fraction(value)
    except (TypeError, ValueError, OverflowError) as exc:
        raise ValueError(f"constraint target {value!r} is not a finite number") from exc
    if not 0 <= f <= 1:
        raise ValueError(f"constraint target {value!r} is not a probability")
    return f


def _normalize_constraints(constraints) -> dict[Channel, Fraction]:
    items = constraints.items() if isinstance(constraints, Mapping) else constraints
    out: dict[Channel, Fraction] = {}
    for item in items:
        try:
            key, value = item
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed constraint {item!r}") from exc
        channel = normalize_channel(key)
        target = _as_fraction(value)
        if channel in out and out[channel] != target:
            raise ValueError(f"conflicting targets for {channel[1]} in setting {int(channel[0])}")
        out[channel] = target
    return out


def _indicator(strategy: LhvStrategy, channel: Channel) -> int:
    setting, jo = channel
    return int(strategy.outcome(setting) == jo)


def _solve_exact(columns: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction] | None:
    """Solve sum_j x_j columns[j] = rhs for linearly independent columns.

    Returns None when the columns are dependent or the system is inconsistent.
    """
    n_rows, n_cols = len(rhs), len(columns)
    a = [[Fraction(columns[j][i]) for j in range(n_cols)] + [Fraction(rhs[i])] for i in range(n_rows)]
    row = 0
    pivots = []
    for col in range(n_cols):
        pivot = next((i for i in range(row, n_rows) if a[i][col] != 0), None)
        if pivot is None:
            return None
        a[row], a[pivot] = a[pivot], a[row]
        p = a[row][col]
        a[row] = [v / p for v in a[row]]
        for i in range(n_rows):
            if i != row and a[i][col] != 0:
                f = a[i][col]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[row])]
        pivots.append(row)
        row += 1
    if any(a[i][-1] != 0 for i in range(row, n_rows)):
        return None
    return [a[i][-1] for i in pivots]


def _vertices(
    constraints: Mapping[Channel, Fraction], extra: Iterable[Channel] = ()
) -> Iterable[dict[LhvStrategy, Fraction]]:
    """Yield every basic feasible mixture for the equality constraints.

    Zero targets are handled first: no strategy producing that outcome may
    carry weight (this is the element-of-reality step of Hardy's argument).
    Strategies with identical responses on the remaining and ``extra``
    channels are merged before enumeration.
    """
    allowed = [
        s for s in STRATEGIES if all(_indicator(s, ch) == 0 for ch, v in constraints.items() if v == 0)
    ]
    rows = [ch for ch, v in constraints.items() if v != 0]
    extra = [ch for ch in extra if ch not in rows]
    groups: dict[tuple[int, ...], LhvStrategy] = {}
    for s in allowed:
        groups.setdefault(tuple(_indicator(s, ch) for ch in rows + extra), s)
    reps = list(groups.items())
    rhs = [constraints[ch] for ch in rows] + [Fraction(1)]
    for k in range(1, len(rows) + 2):
        for subset in itertools.combinations(reps, k):
            cols = [pattern[: len(rows)] + (1,) for pattern, _ in subset]
            weights = _solve_exact(cols, rhs)
            if weights is None or any(w < 0 for w in weights):
                continue
            yield {s: w for (_, s), w in zip(subset, weights) if w != 0}


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    witness: dict[LhvStrategy, Fraction] | None = None
    violation: Fraction | None = None
    reason: str = ""

    def mixture_value(self, key) -> Fraction | None:
        if self.witness is None:
            return None
        channel = normalize_channel(key)
        return sum((w * _indicator(s, channel) for s, w in self.witness.items()), Fraction(0))


def lhv_range(constraints, key) -> tuple[Fraction, Fraction] | None:
    """Exact (min, max) of a channel's probability over local models meeting ``constraints``.

    None when no local model meets the constraints.
    """
    cons = _normalize_constraints(constraints)
    channel = normalize_channel(key)
    cons.pop(channel, None)
    values = [
        sum((w * _indicator(s, channel) for s, w in vertex.items()), Fraction(0))
        for vertex in _vertices(cons, extra=[channel])
    ]
    if not values:
        return None
    return min(values), max(values)


def lhv_feasibility(constraints) -> FeasibilityReport:
    """Decide whether some local model reproduces the given joint probabilities.

    ``constraints`` maps channels (1..4 for the Hardy observables, or
    ``(setting, (left, right))``) to target probabilities; a sequence of
    pairs is accepted too. When infeasible and P(K0,K0bar) is constrained,
    ``violation`` is the signed distance of its target from the interval
    local models allow given the other constraints.
    """
    cons = _normalize_constraints(constraints)
    if not cons:
        raise ValueError("no constraints given")
    witness = next(iter(_vertices(cons)), None)
    if witness is not None:
        return FeasibilityReport(True, witness=witness, reason="local mixture found")
    p1 = HARDY_CHANNELS[0]
    if p1 in cons:
        rest = {ch: v for ch, v in cons.items() if ch != p1}
        bounds = lhv_range(rest, p1) if rest else (Fraction(0), Fraction(1))
        if bounds is not None:
            lo, hi = bounds
            gap = cons[p1] - hi if cons[p1] > hi else cons[p1] - lo
            return FeasibilityReport(
                False,
                violation=gap,
                reason=f"local models allow P(K0,K0bar) only in [{lo}, {hi}]",
            )
    return FeasibilityReport(False, reason="constraints are jointly unsatisfiable by local models")


class Verdict(enum.Enum):
    LR_REFUTED = "LR-REFUTED"
    QM_REFUTED = "QM-REFUTED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class VerdictResult:
    verdict: Verdict
    reason: str
    lhv_bound: float
    margin: float


_NULL_NAMES = ("P(K0,KL)", "P(KL,K0bar)", "P(KS,KS)")


def contradiction_verdict(
    observables: Sequence[float],
    tolerances: float | Sequence[float] = EXACT_ZERO_TOL,
    expected_fraction: float = float(HARDY_FRACTION),
) -> VerdictResult:
    """Decide between local realism and quantum mechanics from (P1, P2, P3, P4).

    Local models obey P1 <= P2 + P3 + P4. The data refute them when P2..P4
    are each compatible with zero and P1 exceeds that bound by more than the
    tolerances combined in quadrature. They refute the quantum prediction
    when the nulls hold but P1 falls short of ``expected_fraction`` (the
    eta * etabar / 12 expected for the set-up) by more than its tolerance.
    """
    obs = [float(p) for p in observables]
    if len(obs) != 4:
        raise ValueError("need exactly four observables (P1, P2, P3, P4)")
    if any(not math.isfinite(p) or p < 0.0 for p in obs):
        raise ValueError("observables must be finite and nonnegative")
    tols = [float(tolerances)] * 4 if isinstance(tolerances, (int, float)) else [float(t) for t in tolerances]
    if len(tols) != 4 or any(t < 0.0 for t in tols):
        raise ValueError("need one nonnegative tolerance per observable")
    p1 = obs[0]
    bound = sum(obs[1:])
    combined = math.sqrt(sum(t * t for t in tols))
    margin = p1 - bound
    for name, p, t in zip(_NULL_NAMES, obs[1:], tols[1:]):
        if p > t:
            return VerdictResult(Verdict.INCONCLUSIVE, f"{name} not compatible with zero", bound, margin)
    if margin > combined:
        return VerdictResult(
            Verdict.LR_REFUTED,
            "P(K0,K0bar) exceeds the local bound P2 + P3 + P4",
            bound,
            margin,
        )
    if expected_fraction - p1 > tols[0]:
        return VerdictResult(
            Verdict.QM_REFUTED,
            "P(K0,K0bar) falls short of the quantum prediction",
            bound,
            margin,
        )
    return VerdictResult(
        Verdict.INCONCLUSIVE,
        "P(K0,K0bar) compatible with both the local bound and the quantum prediction",
        bound,
        margin,
    )

