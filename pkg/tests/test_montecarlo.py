import math
from dataclasses import replace

import numpy as np
import pytest

from kaonhardy.hardy import Verdict
from kaonhardy.kaon import hardy_state
from kaonhardy.measurement import DetectorModel, JointOutcome, Outcome, Setting, joint_probabilities, observed_table
from kaonhardy.montecarlo import (
    CHUNK_SIZE,
    CountsTable,
    ExperimentConfig,
    binomial_stderr,
    run_experiment,
    sample_counts,
    sample_event,
    significance_report,
    stream,
)

K0, K0B, KS, KL, U = Outcome.K0, Outcome.K0BAR, Outcome.KS, Outcome.KL, Outcome.UNIDENTIFIED
IDEAL = DetectorModel()
FORBIDDEN = [(Setting.STRANGENESS_LIFETIME, (K0, KL)), (Setting.LIFETIME_STRANGENESS, (KL, K0B)), (Setting.LIFETIME_BOTH, (KS, KS))]


@pytest.fixture(scope="module")
def hardy_config():
    return ExperimentConfig.at_hardy_point(0.005, events_per_setting=120_000, seed=42)


@pytest.fixture(scope="module")
def hardy_run(hardy_config):
    return run_experiment(hardy_config)


def test_sample_event_never_hits_forbidden_outcome():
    rng = np.random.default_rng(7)
    seen = {sample_event(hardy_state(), Setting.STRANGENESS_LIFETIME, IDEAL, rng) for _ in range(3000)}
    assert JointOutcome(K0, KL) not in seen
    assert seen <= {JointOutcome(K0, KS), JointOutcome(K0B, KS), JointOutcome(K0B, KL)}


def test_sample_event_zero_efficiency():
    rng = np.random.default_rng(1)
    det = DetectorModel(eta=0.0, etabar=0.0)
    assert all(sample_event(hardy_state(), 1, det, rng) == JointOutcome(U, U) for _ in range(100))


def test_sample_event_is_deterministic_and_matches_batch_path():
    a = [sample_event(hardy_state(), 1, IDEAL, stream(42, Setting(1), 0)) for _ in range(3)]
    rng = stream(42, Setting(1), 0)
    seq1 = [sample_event(hardy_state(), 1, IDEAL, rng) for _ in range(50)]
    rng = stream(42, Setting(1), 0)
    seq2 = [sample_event(hardy_state(), 1, IDEAL, rng) for _ in range(50)]
    assert seq1 == seq2 and a[0] == seq1[0]
    # the first event of the bulk path uses the same draw
    batch = sample_counts(hardy_state(), 1, IDEAL, 1, seed=42)
    assert batch[seq1[0]] == 1


def test_hardy_point_counts(hardy_run):
    counts, _ = hardy_run
    k = counts.count(Setting.STRANGENESS_BOTH, (K0, K0B))
    assert 9713 <= k <= 10287
    for setting, jo in FORBIDDEN:
        assert counts.count(setting, jo) == 0


def test_reproducible_and_worker_independent(hardy_config, hardy_run):
    counts, _ = hardy_run
    again, _ = run_experiment(hardy_config)
    parallel, _ = run_experiment(hardy_config, workers=4)
    assert again == counts == parallel


def test_different_seeds_differ(hardy_config):
    a, _ = run_experiment(replace(hardy_config, events_per_setting=5000))
    b, _ = run_experiment(replace(hardy_config, events_per_setting=5000, seed=43))
    assert a != b


def test_prefix_stability_across_chunk_boundary(hardy_config):
    """Event i depends only on (seed, setting, i): a longer run extends a shorter one."""
    st = hardy_config.prepare().state
    n = CHUNK_SIZE + 10
    short = sample_counts(st, 4, IDEAL, CHUNK_SIZE, seed=5)
    longer = sample_counts(st, 4, IDEAL, n, seed=5)
    assert sum(longer.values()) - sum(short.values()) == 10
    assert all(longer[k] >= short[k] for k in short)


def test_single_event_bookkeeping():
    cfg = ExperimentConfig.at_hardy_point(0.005, events_per_setting=1)
    counts, _ = run_experiment(cfg)
    for s in Setting:
        assert sum(counts.counts[s].values()) == 1
    assert counts.total_generated == 4


def test_survival_and_produced_pairs(hardy_run, hardy_config):
    counts, _ = hardy_run
    assert counts.survival_probability == pytest.approx(hardy_config.prepare().survival_probability)
    assert counts.produced_pairs == pytest.approx(counts.total_generated / counts.survival_probability)


@pytest.mark.parametrize(
    "det",
    [DetectorModel(), DetectorModel(eta=0.4, etabar=0.7, lifetime_eff=0.95, misid=0.02)],
)
def test_convergence_within_five_sigma(det):
    n = 1_000_000
    cfg = ExperimentConfig.at_hardy_point(0.005, detector=det, events_per_setting=n, seed=2024)
    counts, _ = run_experiment(cfg, workers=4)
    state = cfg.prepare().state
    for s in Setting:
        exact = observed_table(state, s, det)
        assert sum(counts.counts[s].values()) == n
        for jo, p in exact.entries.items():
            sigma = math.sqrt(n * p * (1 - p))
            assert abs(counts.count(s, jo) - n * p) <= 5 * sigma + 1e-9


def test_exact_zero_channels_stay_zero():
    cfg = ExperimentConfig.at_hardy_point(0.005, events_per_setting=1_000_000, neglect_rprime=True)
    counts, _ = run_experiment(cfg)
    state = cfg.prepare().state
    for setting, jo in FORBIDDEN:
        assert joint_probabilities(state, setting)[jo] < 1e-30
        assert counts.count(setting, jo) == 0


def test_settings_filter_and_validation():
    cfg = ExperimentConfig.at_hardy_point(0.005, events_per_setting=100, settings=(4,))
    counts, report = run_experiment(cfg)
    assert list(counts.counts) == [Setting.LIFETIME_BOTH]
    assert report.verdict.verdict is Verdict.INCONCLUSIVE
    assert "not measured" in report.verdict.reason
    with pytest.raises(ValueError):
        ExperimentConfig(settings=())
    with pytest.raises(ValueError):
        ExperimentConfig(events_per_setting=0)
    with pytest.raises(ValueError):
        ExperimentConfig(seed=-1)


def _hand_counts(k1, n, k_forbidden=0):
    def table(setting, hit, k):
        outs = list(joint_probabilities(hardy_state(), setting).entries)
        rest = [o for o in outs if o != JointOutcome(*hit)]
        c = {o: 0 for o in outs}
        c[JointOutcome(*hit)] = k
        c[rest[0]] = n - k
        return c

    counts = {
        Setting(1): table(1, (K0, K0B), k1),
        Setting(2): table(2, (K0, KL), k_forbidden),
        Setting(3): table(3, (KL, K0B), k_forbidden),
        Setting(4): table(4, (KS, KS), k_forbidden),
    }
    return CountsTable(counts, n, 1.0)


def test_significance_lr_refuted():
    cfg = ExperimentConfig.at_hardy_point(0.005, events_per_setting=120_000)
    rep = significance_report(_hand_counts(10_000, 120_000), cfg)
    assert rep.verdict.verdict is Verdict.LR_REFUTED
    p1 = rep.observables[0]
    assert p1.estimate == pytest.approx(1 / 12)
    assert p1.z_zero > 3
    assert p1.stderr == pytest.approx(math.sqrt((1 / 12) * (11 / 12) / 120_000), rel=1e-3)


def test_significance_qm_refuted():
    cfg = ExperimentConfig.at_hardy_point(0.005, events_per_setting=120_000)
    rep = significance_report(_hand_counts(0, 120_000), cfg)
    assert rep.verdict.verdict is Verdict.QM_REFUTED
    assert rep.observables[0].z_qm < -3


@pytest.mark.parametrize("k1", [0, 1, 2])
def test_significance_small_sample_inconclusive(k1):
    cfg = ExperimentConfig.at_hardy_point(0.005, events_per_setting=12)
    rep = significance_report(_hand_counts(k1, 12), cfg)
    assert rep.verdict.verdict is Verdict.INCONCLUSIVE


def test_stderr_from_reported_counts(hardy_run):
    counts, rep = hardy_run
    for stat in rep.observables:
        assert stat.count == counts.count(stat.setting, stat.outcome)
        assert stat.stderr == binomial_stderr(stat.count, stat.n)
        assert stat.estimate == stat.count / stat.n


def test_binomial_stderr_is_finite_at_zero_counts():
    assert binomial_stderr(0, 100) > 0
    assert binomial_stderr(100, 100) > 0
    assert binomial_stderr(50, 100) == pytest.approx(math.sqrt(50.5 / 101 * 50.5 / 101 / 100))
