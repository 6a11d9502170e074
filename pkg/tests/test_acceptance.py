"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line through the ``criterion`` fixture; the
lines are printed in the "acceptance criteria" section of the pytest summary.
"""

import cmath
import json
import math
import time
import timeit
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from kaonhardy import cli
from kaonhardy.hardy import lhv_feasibility, lhv_range, solve_hardy_time
from kaonhardy.kaon import (
    PhysicsParams,
    RegenParams,
    TwoKaonState,
    align_phase,
    compute_R,
    compute_Rprime,
    hardy_family_state,
    hardy_state,
    prepare_state,
)
from kaonhardy.measurement import DetectorModel, JointOutcome, Outcome, Setting, hardy_observables, joint_probabilities
from kaonhardy.montecarlo import ExperimentConfig, run_experiment
from kaonhardy.report import dumps_json

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"
PARAMS = PhysicsParams()


def best_time(fn, repeat=7, number=20):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def test_c1_hardy_quadruple(criterion):
    state = hardy_state()
    got = hardy_observables(state)
    err = max(abs(g - w) for g, w in zip(got, (1 / 12, 0, 0, 0)))
    t = best_time(lambda: hardy_observables(state))
    criterion("C1 Hardy quadruple (1/12,0,0,0) to 1e-12, < 1 ms", err <= 1e-12 and t < 1e-3, f"err={err:.1e} t={t * 1e3:.3f} ms")


def test_c2_efficiency_scaling(criterion):
    rng = np.random.default_rng(20261016)
    state = hardy_state()
    worst = 0.0
    for _ in range(20):
        # (0, 1]: 1 - U[0, 1)
        eta, etabar = 1.0 - rng.random(2)
        p1 = hardy_observables(state, DetectorModel(eta=eta, etabar=etabar))[0]
        worst = max(worst, abs(p1 - eta * etabar / 12))
    criterion("C2 P(K0,K0bar) = eta*etabar/12 to 1e-12 (20 draws)", worst <= 1e-12, f"max err={worst:.1e}")


def test_c3_closed_form_evolution(criterion):
    rng = np.random.default_rng(3)
    draws = [(cmath.rect(0.01 * (1.0 - rng.random()), rng.uniform(0, 2 * math.pi)), rng.uniform(0, 20)) for _ in range(100)]

    def check():
        worst = 0.0
        for r, T in draws:
            evolved = prepare_state(RegenParams(abs(r), cmath.phase(r)), T, PARAMS).state
            R = compute_R(r, T, PARAMS)
            expected = hardy_family_state(R, compute_Rprime(r, R))
            diff = np.abs(np.array(align_phase(evolved, expected).amplitudes) - np.array(expected.amplitudes))
            worst = max(worst, float(diff.max()))
        return worst

    start = time.perf_counter()
    worst = check()
    elapsed = time.perf_counter() - start
    criterion("C3 evolved state = closed form to 1e-12 (100 draws), < 1 s", worst <= 1e-12 and elapsed < 1.0, f"max err={worst:.1e} t={elapsed:.3f} s")


def test_c4_rprime_bound(criterion):
    r = 0.005
    ratios = [abs(compute_Rprime(r, compute_R(r, T, PARAMS))) / r for T in np.linspace(10, 20, 100)]
    worst = max(ratios)
    criterion("C4 |R'| <= 7e-3 |r| on T in [10, 20]", worst <= 7e-3, f"max |R'|/|r|={worst:.4e}")


def _bisect_T(r_abs, params, lo=0.0, hi=100.0):
    f = lambda T: r_abs * math.exp(0.5 * params.delta_gamma * T) - 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if f(mid) < 0 else (lo, mid)
    return 0.5 * (lo + hi)


def test_c5_hardy_solver(criterion):
    cert = solve_hardy_time(0.005, PARAMS)
    oracle = _bisect_T(0.005, PARAMS)
    miss = abs(compute_R(cert.regen.r, cert.T_star, PARAMS) + 1)
    ok = abs(cert.T_star - 10.615) <= 1e-3 and abs(cert.T_star - oracle) <= 1e-9 and miss <= 1e-9
    criterion("C5 T_star = 10.615 +- 0.001, |R + 1| <= 1e-9", ok, f"T*={cert.T_star:.9f} bisect={oracle:.9f} |R+1|={miss:.1e}")


def test_c6_lhv_infeasibility(criterion):
    cs = [Fraction(1, 10**6), Fraction(1, 1000), Fraction(1, 12)]

    def check():
        infeasible = all(not lhv_feasibility({1: c, 2: 0, 3: 0, 4: 0}).feasible for c in cs)
        lo, _ = lhv_range({1: Fraction(1, 12), 2: 0, 3: 0}, 4)
        return infeasible, lo

    infeasible, lo = check()
    t = best_time(check, repeat=5, number=3)
    ok = infeasible and lo == Fraction(1, 12) and t < 1e-2
    criterion("C6 {P2=P3=P4=0, P1=c} infeasible; min P4 = 1/12 exactly; < 10 ms", ok, f"min P4={lo} t={t * 1e3:.2f} ms")


def _random_state(rng):
    return TwoKaonState.from_unnormalized(rng.normal(size=4) + 1j * rng.normal(size=4))


def test_c7_no_signalling(criterion):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        st = _random_state(rng)
        t1, t2, t3 = (joint_probabilities(st, s) for s in (1, 2, 3))
        l1, l2 = t1.marginal("left"), t2.marginal("left")
        r1, r3 = t1.marginal("right"), t3.marginal("right")
        worst = max(worst, *(abs(l1[k] - l2[k]) for k in l1), *(abs(r1[k] - r3[k]) for k in r1))
    criterion("C7 no-signalling marginals to 1e-12 (100 states)", worst <= 1e-12, f"max diff={worst:.1e}")


def test_c8_monte_carlo(criterion):
    cfg = ExperimentConfig.at_hardy_point(0.005, events_per_setting=120_000, seed=42)
    start = time.perf_counter()
    counts, _ = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    again, _ = run_experiment(cfg)
    k = counts.count(Setting.STRANGENESS_BOTH, JointOutcome(Outcome.K0, Outcome.K0BAR))
    forbidden = [
        counts.count(Setting.STRANGENESS_LIFETIME, JointOutcome(Outcome.K0, Outcome.KL)),
        counts.count(Setting.LIFETIME_STRANGENESS, JointOutcome(Outcome.KL, Outcome.K0BAR)),
        counts.count(Setting.LIFETIME_BOTH, JointOutcome(Outcome.KS, Outcome.KS)),
    ]
    same = json.dumps(counts.records()) == json.dumps(again.records())
    ok = 9713 <= k <= 10287 and forbidden == [0, 0, 0] and same and elapsed < 5.0
    criterion("C8 MC N=120000: count in [9713,10287], forbidden = 0, reproducible, < 5 s", ok, f"k={k} forbidden={forbidden} t={elapsed:.2f} s")


def _validate(doc):
    schema = json.loads((SCHEMAS / f"{doc['command']}.schema.json").read_text())
    jsonschema.validate(doc, schema, cls=jsonschema.Draft202012Validator)


def test_c9_end_to_end_cli(criterion, tmp_path, capsys):
    paths = {name: tmp_path / f"{name}.json" for name in ("solve", "predict", "simulate", "lhv")}
    codes = [cli.main(["solve", "--r-abs", "0.005", "--out", str(paths["solve"])])]
    # the solve report's resolved config drives the remaining steps
    run_cfg = tmp_path / "hardy.json"
    run_cfg.write_text(json.dumps(json.loads(paths["solve"].read_text())["config"]))
    codes.append(cli.main(["predict", "--config", str(run_cfg), "--out", str(paths["predict"])]))
    codes.append(cli.main(["simulate", "--config", str(run_cfg), "--out", str(paths["simulate"])]))
    codes.append(cli.main(["lhv-check", "--observables", str(paths["simulate"]), "--out", str(paths["lhv"])]))
    capsys.readouterr()

    docs = [json.loads(p.read_text()) for p in paths.values()]
    for doc in docs:
        _validate(doc)
    round_trip = all(dumps_json(json.loads(p.read_text())) == p.read_text() for p in paths.values())
    verdict = docs[3]["payload"]["verdict"]["verdict"]
    sim_verdict = docs[2]["payload"]["verdict"]["verdict"]
    ok = codes == [0, 0, 0, 0] and round_trip and verdict == sim_verdict == "LR-REFUTED"
    criterion("C9 solve -> predict -> simulate -> lhv-check gives LR-REFUTED; schemas round-trip", ok, f"exit={codes} verdict={verdict}")
