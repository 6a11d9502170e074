"""Seeded event-level emulation of the four-setting Hardy experiment.

Pre-selection of undecayed pairs is done analytically: events are drawn from
the already-conditioned state, and the survival probability is carried
along so counts can be converted back into produced pairs.

Every event belongs to a fixed-size chunk, and chunk ``c`` of setting ``s``
draws from its own Philox stream keyed by ``(seed, s, c)``. Event outcomes
therefore depend only on (seed, setting, event index), whatever the worker
count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .hardy import Verdict, VerdictResult, contradiction_verdict, solve_hardy_time
from .kaon import (
    EvolutionResult,
    PhysicsParams,
    RegenParams,
    TwoKaonState,
    compute_R,
    hardy_family_state,
    prepare_state,
)
from .measurement import (
    HARDY_CHANNELS,
    IDEAL_DETECTOR,
    DetectorModel,
    JointOutcome,
    ProbabilityTable,
    Setting,
    hardy_observables,
    observed_table,
)

CHUNK_SIZE = 1 << 14
OBSERVABLE_NAMES = ("P(K0,K0bar)", "P(K0,KL)", "P(KL,K0bar)", "P(KS,KS)")


@dataclass(frozen=True)
class ExperimentConfig:
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    r_abs: float = 0.005
    r_arg: float = 0.0
    T: float = 0.0
    detector: DetectorModel = IDEAL_DETECTOR
    events_per_setting: int = 120_000
    seed: int = 42
    settings: tuple[Setting, ...] = tuple(Setting)
    confidence: float = 3.0
    neglect_rprime: bool = False

    def __post_init__(self):
        if int(self.events_per_setting) != self.events_per_setting or self.events_per_setting < 1:
            raise ValueError("events_per_setting must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.T >= 0.0:
            raise ValueError("T must be >= 0")
        if not self.confidence > 0.0:
            raise ValueError("confidence multiplier must be positive")
        settings = tuple(Setting(s) for s in self.settings)
        if not settings:
            raise ValueError("at least one measurement setting is required")
        if len(set(settings)) != len(settings):
            raise ValueError("duplicate measurement settings")
        object.__setattr__(self, "settings", tuple(sorted(settings)))
        RegenParams(self.r_abs, self.r_arg)

    @classmethod
    def at_hardy_point(cls, r_abs: float, physics: PhysicsParams | None = None, **kwargs) -> ExperimentConfig:
        """Config with T and arg r taken from the Hardy solver."""
        physics = physics or PhysicsParams()
        cert = solve_hardy_time(r_abs, physics)
        return cls(physics=physics, r_abs=r_abs, r_arg=cert.required_arg_r, T=cert.T_star, **kwargs)

    @property
    def regen(self) -> RegenParams:
        return RegenParams(self.r_abs, self.r_arg)

    def prepare(self) -> EvolutionResult:
        """Undecayed state at T; with ``neglect_rprime`` the K_S K_S term is dropped."""
        evolved = prepare_state(self.regen, self.T, self.physics)
        if not self.neglect_rprime:
            return evolved
        R = compute_R(self.regen.r, self.T, self.physics)
        return EvolutionResult(hardy_family_state(R), evolved.survival_probability)


@dataclass(frozen=True)
class CountsTable:
    counts: dict[Setting, dict[JointOutcome, int]]
    events_per_setting: int
    survival_probability: float

    @property
    def total_generated(self) -> int:
        return sum(sum(c.values()) for c in self.counts.values())

    @property
    def produced_pairs(self) -> float:
        """Pairs that must be produced for this many pre-selected (undecayed) ones."""
        return self.total_generated / self.survival_probability

    def count(self, setting: Setting, outcome) -> int:
        return self.counts.get(Setting(setting), {}).get(JointOutcome(*outcome), 0)

    def records(self) -> list[tuple[int, str, str, int]]:
        return [
            (int(s), jo.left.value, jo.right.value, n)
            for s, table in self.counts.items()
            for jo, n in table.items()
        ]


@dataclass(frozen=True)
class ObservableStat:
    name: str
    setting: Setting
    outcome: JointOutcome
    count: int
    n: int
    estimate: float
    stderr: float
    z_zero: float
    z_qm: float
    qm_prediction: float


@dataclass(frozen=True)
class StatReport:
    observables: tuple[ObservableStat | None, ...]
    verdict: VerdictResult
    confidence: float


class _Sampler:
    """Inverse-CDF sampler over the nonzero entries of a probability table."""

    def __init__(self, table: ProbabilityTable):
        self.outcomes = [jo for jo, p in table.entries.items() if p > 0.0]
        probs = np.array([table.entries[jo] for jo in self.outcomes])
        cdf = np.cumsum(probs)
        self.cdf = cdf / cdf[-1]
        self.cdf[-1] = 1.0

    def indices(self, u: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.cdf, u, side="right")


def stream(seed: int, setting: Setting, chunk: int) -> np.random.Generator:
    """Counter-based generator owning events [chunk * CHUNK_SIZE, (chunk + 1) * CHUNK_SIZE)."""
    ss = np.random.SeedSequence(seed, spawn_key=(int(setting), chunk))
    return np.random.Generator(np.random.Philox(ss))


def sample_event(
    state: TwoKaonState, setting: Setting, det: DetectorModel, rng: np.random.Generator
) -> JointOutcome:
    sampler = _Sampler(observed_table(state, setting, det))
    return sampler.outcomes[int(sampler.indices(rng.random()))]


def _count_chunk(sampler: _Sampler, seed: int, setting: Setting, chunk: int, n: int) -> np.ndarray:
    u = stream(seed, setting, chunk).random(n)
    return np.bincount(sampler.indices(u), minlength=len(sampler.outcomes))


def sample_counts(
    state: TwoKaonState,
    setting: Setting,
    det: DetectorModel,
    n_events: int,
    seed: int,
    workers: int = 1,
) -> dict[JointOutcome, int]:
    """Counts for ``n_events`` events of one setting; outcomes of zero probability get 0."""
    setting = Setting(setting)
    table = observed_table(state, setting, det)
    sampler = _Sampler(table)
    n_chunks = -(-n_events // CHUNK_SIZE)
    sizes = [min(CHUNK_SIZE, n_events - c * CHUNK_SIZE) for c in range(n_chunks)]
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _count_chunk(sampler, seed, setting, c, sizes[c]), range(n_chunks)))
    else:
        parts = [_count_chunk(sampler, seed, setting, c, sizes[c]) for c in range(n_chunks)]
    totals = np.sum(parts, axis=0)
    counts = {jo: 0 for jo in table.entries}
    for jo, k in zip(sampler.outcomes, totals):
        counts[jo] = int(k)
    return counts


def binomial_stderr(k: int, n: int) -> float:
    """Binomial standard error with a half-count continuity shift.

    The shift keeps the error finite for k = 0 or k = n, where the plain
    Wald error collapses to zero.
    """
    p = (k + 0.5) / (n + 1.0)
    return math.sqrt(p * (1.0 - p) / n)


def significance_report(counts: CountsTable, config: ExperimentConfig) -> StatReport:
    predictions = hardy_observables(config.prepare().state, config.detector)
    stats: list[ObservableStat | None] = []
    for name, (setting, jo), qm in zip(OBSERVABLE_NAMES, HARDY_CHANNELS, predictions):
        if setting not in counts.counts:
            stats.append(None)
            continue
        k, n = counts.count(setting, jo), counts.events_per_setting
        est = k / n
        se = binomial_stderr(k, n)
        stats.append(ObservableStat(name, setting, jo, k, n, est, se, est / se, (est - qm) / se, qm))
    if any(s is None for s in stats):
        absent = ", ".join(f"{{{int(ch[0])}}}" for ch, s in zip(HARDY_CHANNELS, stats) if s is None)
        verdict = VerdictResult(Verdict.INCONCLUSIVE, f"setting(s) {absent} not measured", math.nan, math.nan)
    else:
        verdict = contradiction_verdict(
            [s.estimate for s in stats],
            [config.confidence * s.stderr for s in stats],
            expected_fraction=predictions[0],
        )
    return StatReport(tuple(stats), verdict, config.confidence)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> tuple[CountsTable, StatReport]:
    evolved = config.prepare()
    counts = {
        s: sample_counts(evolved.state, s, config.detector, config.events_per_setting, config.seed, workers)
        for s in config.settings
    }
    table = CountsTable(counts, config.events_per_setting, evolved.survival_probability)
    return table, significance_report(table, config)

