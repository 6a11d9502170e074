"""Joint-outcome probabilities for the four strangeness/lifetime settings."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .kaon import Basis, TwoKaonState, transform_basis


class Outcome(enum.Enum):
    # declaration order is the serialization order
    K0 = "K0"
    K0BAR = "K0bar"
    KS = "KS"
    KL = "KL"
    UNIDENTIFIED = "unidentified"

    @property
    def rank(self) -> int:
        return _OUTCOME_RANK[self]


_OUTCOME_RANK = {o: i for i, o in enumerate(Outcome)}

BASIS_OUTCOMES = {
    Basis.STRANGENESS: (Outcome.K0, Outcome.K0BAR),
    Basis.LIFETIME: (Outcome.KS, Outcome.KL),
}


class Setting(enum.IntEnum):
    """{1} SS, {2} strangeness/lifetime, {3} lifetime/strangeness, {4} lifetime both."""

    STRANGENESS_BOTH = 1
    STRANGENESS_LIFETIME = 2
    LIFETIME_STRANGENESS = 3
    LIFETIME_BOTH = 4

    @property
    def left(self) -> Basis:
        return Basis.STRANGENESS if self in (1, 2) else Basis.LIFETIME

    @property
    def right(self) -> Basis:
        return Basis.STRANGENESS if self in (1, 3) else Basis.LIFETIME


class JointOutcome(NamedTuple):
    left: Outcome
    right: Outcome

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.left.rank, self.right.rank)

    def __str__(self) -> str:
        return f"({self.left.value},{self.right.value})"


@dataclass(frozen=True)
class DetectorModel:
    """Per-particle identification model.

    ``eta``/``etabar`` are the probabilities that a K0/K0bar is identified;
    failures are reported as ``Outcome.UNIDENTIFIED``. A K_S/K_L is
    identified with ``lifetime_eff`` and then mislabeled with ``misid``.
    """

    eta: float = 1.0
    etabar: float = 1.0
    lifetime_eff: float = 1.0
    misid: float = 0.0

    def __post_init__(self):
        for name in ("eta", "etabar", "lifetime_eff"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 <= self.misid < 0.5:
            raise ValueError(f"misid must lie in [0, 0.5), got {self.misid}")

    @property
    def is_ideal(self) -> bool:
        return self.eta == self.etabar == self.lifetime_eff == 1.0 and self.misid == 0.0

    def response(self, basis: Basis) -> dict[Outcome, dict[Outcome, float]]:
        """P(reported | true) for one side measured in ``basis``."""
        u = Outcome.UNIDENTIFIED
        if basis is Basis.STRANGENESS:
            return {
                Outcome.K0: {Outcome.K0: self.eta, u: 1.0 - self.eta},
                Outcome.K0BAR: {Outcome.K0BAR: self.etabar, u: 1.0 - self.etabar},
            }
        hit, flip = self.lifetime_eff * (1.0 - self.misid), self.lifetime_eff * self.misid
        miss = 1.0 - self.lifetime_eff
        return {
            Outcome.KS: {Outcome.KS: hit, Outcome.KL: flip, u: miss},
            Outcome.KL: {Outcome.KL: hit, Outcome.KS: flip, u: miss},
        }


IDEAL_DETECTOR = DetectorModel()


@dataclass(frozen=True)
class ProbabilityTable:
    setting: Setting
    entries: Mapping[JointOutcome, float] = field(default_factory=dict)

    def __post_init__(self):
        ordered = dict(sorted(self.entries.items(), key=lambda kv: kv[0].sort_key))
        object.__setattr__(self, "entries", ordered)
        object.__setattr__(self, "setting", Setting(self.setting))

    def __getitem__(self, outcome) -> float:
        return self.entries.get(JointOutcome(*outcome), 0.0)

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def marginal(self, side: str) -> dict[Outcome, float]:
        out: dict[Outcome, float] = {}
        for jo, p in self.entries.items():
            key = jo.left if side == "left" else jo.right
            out[key] = out.get(key, 0.0) + p
        return out

    def records(self) -> list[tuple[int, str, str, float]]:
        return [(int(self.setting), jo.left.value, jo.right.value, p) for jo, p in self.entries.items()]


def joint_probabilities(state: TwoKaonState, setting: Setting) -> ProbabilityTable:
    """Ideal-detector outcome distribution: squared moduli in the setting's basis."""
    setting = Setting(setting)
    m = transform_basis(state, setting.left, setting.right).matrix
    probs = np.abs(m) ** 2
    left, right = BASIS_OUTCOMES[setting.left], BASIS_OUTCOMES[setting.right]
    entries = {
        JointOutcome(a, b): float(probs[i, j])
        for i, a in enumerate(left)
        for j, b in enumerate(right)
    }
    return ProbabilityTable(setting, entries)


def fold_detector(table: ProbabilityTable, det: DetectorModel) -> ProbabilityTable:
    """Push an ideal table through independent per-side detector responses."""
    if any(Outcome.UNIDENTIFIED in jo for jo in table.entries):
        raise ValueError("fold_detector expects an ideal table without unidentified outcomes")
    resp_l = det.response(table.setting.left)
    resp_r = det.response(table.setting.right)
    out: dict[JointOutcome, float] = {}
    for (a, b), p in table.entries.items():
        for a_seen, pa in resp_l[a].items():
            for b_seen, pb in resp_r[b].items():
                if pa == 0.0 or pb == 0.0:
                    continue
                key = JointOutcome(a_seen, b_seen)
                out[key] = out.get(key, 0.0) + p * pa * pb
    return ProbabilityTable(table.setting, out)


def observed_table(state: TwoKaonState, setting: Setting, det: DetectorModel = IDEAL_DETECTOR) -> ProbabilityTable:
    return fold_detector(joint_probabilities(state, setting), det)


# (setting, outcome) of the four Hardy observables P1..P4
HARDY_CHANNELS: tuple[tuple[Setting, JointOutcome], ...] = (
    (Setting.STRANGENESS_BOTH, JointOutcome(Outcome.K0, Outcome.K0BAR)),
    (Setting.STRANGENESS_LIFETIME, JointOutcome(Outcome.K0, Outcome.KL)),
    (Setting.LIFETIME_STRANGENESS, JointOutcome(Outcome.KL, Outcome.K0BAR)),
    (Setting.LIFETIME_BOTH, JointOutcome(Outcome.KS, Outcome.KS)),
)


def hardy_observables(
    state: TwoKaonState, det: DetectorModel = IDEAL_DETECTOR
) -> tuple[float, float, float, float]:
    """(P(K0,K0bar), P(K0,K_L), P(K_L,K0bar), P(K_S,K_S)) as a detector would see them."""
    return tuple(observed_table(state, s, det)[jo] for s, jo in HARDY_CHANNELS)
