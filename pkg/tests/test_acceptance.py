"""Acceptance checks. Each test prints one PASS/FAIL line with its runtime."""

import math
import time
from contextlib import contextmanager
from fractions import Fraction
from functools import cache
from math import comb

import numpy as np

from codedmr.analysis import (
    GAP_CONSTANT,
    gains,
    gap_ratio,
    load_cmr,
    load_cmr_exact,
    lower_bound,
    lower_bound_exact,
)
from codedmr.assignment import assign_batch, assign_conventional, assign_naive
from codedmr.experiment import run_job
from codedmr.mapexec import (
    TimingModel,
    cdf_subfile_time,
    execute_maps,
    mean_overall_time,
    mean_subfile_time,
    trial_seed,
)
from codedmr.model import JobSpec, canonical_reducers, random_reducers, validate_spec
from codedmr.oracle import empirical_order_statistic, empirical_overall_time, random_small_spec
from codedmr.shuffle import decode_all, measured_load, shuffle, verify_decoded
from codedmr.verify import verify_instances


@contextmanager
def criterion(capsys, number, title, limit_s):
    notes = []
    t0 = time.perf_counter()
    ok = False
    try:
        yield notes
        elapsed = time.perf_counter() - t0
        notes.append(f"{elapsed:.1f}s of {limit_s}s")
        assert elapsed < limit_s, f"took {elapsed:.1f}s, limit {limit_s}s"
        ok = True
    finally:
        if not ok and not any(n.endswith(f"of {limit_s}s") for n in notes):
            notes.append(f"{time.perf_counter() - t0:.1f}s")
        with capsys.disabled():
            print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'}: {title} [{'; '.join(notes)}]")


def spec(**kw):
    return validate_spec(JobSpec(**kw))


def test_criterion_1_worked_example(capsys):
    with criterion(capsys, 1, "four-server example loads 12 / 24 / 36, bound 8", 1.0) as notes:
        s = spec(n=12, q=4, k=4, pk=2, rk=2, f=8)
        w = canonical_reducers(s)
        coded_out = execute_maps(assign_batch(s), s, 0)
        coded = shuffle(coded_out, w, s, "coded")
        verify_decoded(decode_all(coded, coded_out, w, s), coded_out, w)
        naive_out = execute_maps(assign_naive(s), s, 0)
        uncoded = shuffle(naive_out, w, s, "uncoded")
        verify_decoded(decode_all(uncoded, naive_out, w, s), naive_out, w)
        c = s.conventional()
        conv_out = execute_maps(assign_conventional(c), c, 0)
        conv = shuffle(conv_out, canonical_reducers(c), c, "conventional")
        loads = [Fraction(t.total_bits, 8) for t in (coded, uncoded, conv)]
        lb = lower_bound_exact(s)[0]
        notes.append(f"loads {[float(x) for x in loads]}, lower bound {float(lb)}")
        assert loads == [12, 24, 36]
        assert lb == 8


def test_criterion_2_deterministic_identity(capsys):
    with criterion(capsys, 2, "coded load at r = p against QN/K (1/r - 1)", 30.0) as notes:
        f = 8
        points = exact_points = 0
        worst = Fraction(0)
        for k in range(1, 13):
            for rk in range(1, k + 1):
                for g in (1, 2, 3):
                    s = spec(n=g * comb(k, rk), q=k, k=k, pk=rk, rk=rk, f=f)
                    o = execute_maps(assign_batch(s), s, 0)
                    t = shuffle(o, canonical_reducers(s), s, "coded")
                    measured = Fraction(t.total_bits, f)
                    formula = load_cmr_exact(s)
                    over = measured - formula
                    # every |V| is g (Q/K) F bits here
                    if (g * f) % rk == 0:
                        assert over == 0, (k, rk, g)
                        exact_points += 1
                    else:
                        bound = Fraction((rk - 1) * (rk + 1) * comb(k, rk + 1), rk * f)
                        assert 0 <= over <= bound, (k, rk, g, over, bound)
                        worst = max(worst, over)
                    points += 1
        notes.append(f"{points} grid points, {exact_points} exact, worst padding overhead {float(worst):.4g}")
        assert points >= 100


def test_criterion_3_desk_scale_gains(capsys):
    with criterion(capsys, 3, "21x at rK=7, 2.03x / 1.125x / 1.81x at rK=2", 120.0) as notes:
        base = dict(n=1200, q=10, k=10, pk=7, f=28, seed=1)
        conv = run_job(spec(**base, rk=7), scheme="conventional", trials=1)
        l_conv = conv.mean_load_exact
        assert l_conv == 10800
        full = run_job(spec(**base, rk=7), scheme="coded", trials=1)
        g7 = l_conv / full.mean_load_exact
        assert g7 == 21

        s2 = spec(**base, rk=2)
        coded = run_job(s2, scheme="coded", trials=50)
        uncoded = run_job(s2, scheme="uncoded", trials=50)
        overall = float(l_conv / coded.mean_load_exact)
        repetition = l_conv / uncoded.mean_load_exact
        coding = float(uncoded.mean_load_exact / coded.mean_load_exact)
        notes.append(f"rK=7 gain {float(g7):g}; rK=2 overall {overall:.4f}, repetition "
                     f"{float(repetition):g}, coding over uncoded {coding:.4f}")
        assert abs(overall / 2.03 - 1) < 0.05
        assert repetition == Fraction(9, 8) and gains(s2)[0] == 1.125
        assert abs(coding / 1.81 - 1) < 0.05


def convergence_size(k, pk, rk):
    # subfiles per batch so that each rK-group expects at least 1500 subfiles
    per_group = Fraction(comb(k - rk, pk - rk), comb(pk, rk))
    return max(100, math.ceil(1500 / per_group))


@cache
def convergence_runs():
    rng = np.random.default_rng(20260101)
    runs = []
    while len(runs) < 10:
        k = int(rng.integers(2, 9))
        pk = int(rng.integers(2, k + 1))
        rk = int(rng.integers(1, pk))
        g = convergence_size(k, pk, rk)
        s = spec(n=g * comb(k, pk), q=k, k=k, pk=pk, rk=rk, f=1, seed=int(rng.integers(0, 2**31)))
        runs.append((s, run_job(s, "batch", "coded", trials=50, decode=False)))
    return tuple(runs)


def test_criterion_4_stochastic_convergence(capsys):
    with criterion(capsys, 4, "mean coded load within 5% of QN/K (1/r - 1), r < p", 120.0) as notes:
        worst = 0.0
        for s, result in convergence_runs():
            assert s.n >= 100 * comb(s.k, s.pk) and s.rk < s.pk and s.k <= 8
            dev = abs(result.mean_load / load_cmr(s) - 1)
            worst = max(worst, dev)
            notes.append(f"K={s.k} pK={s.pk} rK={s.rk} N={s.n}: {100 * dev:.2f}%")
            assert dev < 0.05
        notes.append(f"worst {100 * worst:.2f}%")


def test_criterion_5_decodability(capsys):
    with criterion(capsys, 5, "1000 instances x 3 schemes decode, GF(2) oracle on 200", 120.0) as notes:
        report = verify_instances(1000, seed=5, gf2=200)
        notes.append(f"{report.runs} runs, {report.gf2_checked} GF(2) checks, "
                     f"{len(report.failures)} failures")
        assert report.instances == 1000 and report.gf2_checked == 600
        assert report.ok, report.failures[:3]


def test_criterion_6_bound_sandwich(capsys):
    with criterion(capsys, 6, "lower bound <= L_CMR, gap < 3 + sqrt 5", 10.0) as notes:
        worst = (0.0, None)
        points = 0
        for k in range(2, 51):
            for rk in range(1, k):
                s = spec(n=1, q=k, k=k, pk=k, rk=rk)
                lb, _ = lower_bound_exact(s)
                assert lb <= load_cmr_exact(s)
                ratio = gap_ratio(s)
                assert ratio < GAP_CONSTANT
                worst = max(worst, (ratio, (k, rk)), key=lambda x: x[0])
                points += 1
        for s, result in convergence_runs():
            lb, _ = lower_bound(s)
            assert all(lb <= x for x in result.loads)
        notes.append(f"{points} grid points, worst gap {worst[0]:.4f} at K,rK={worst[1]}; "
                     "bound below all criterion-4 trial loads")


TIMING_CONFIGS = [dict(n=1200, q=10, k=10, pk=7, rk=rk, mu=500.0) for rk in range(1, 8)] + [
    dict(n=12, q=4, k=4, pk=2, rk=1, mu=1.0),
    dict(n=200, q=6, k=6, pk=3, rk=2, mu=10.0),
    dict(n=560, q=8, k=8, pk=5, rk=5, mu=100.0),
]


def test_criterion_7_timing(capsys):
    with criterion(capsys, 7, "order-statistic timing against Monte Carlo", 180.0) as notes:
        worst_mean = worst_ks = worst_es = 0.0
        sweep_es = []
        for i, cfg in enumerate(TIMING_CONFIGS):
            s = spec(**cfg)
            t = TimingModel.from_spec(s)
            sample = empirical_order_statistic(t, s, 100_000, seed=100 + i)
            d_mean = abs(sample.mean / mean_subfile_time(t, s) - 1)
            ks = sample.ks_distance(lambda x: cdf_subfile_time(t, s, x))
            es = mean_overall_time(t, s)
            mc, _ = empirical_overall_time(t, s, trials=2000, seed=200 + i)
            d_es = abs(mc / es - 1)
            worst_mean, worst_ks, worst_es = max(worst_mean, d_mean), max(worst_ks, ks), max(worst_es, d_es)
            assert d_mean < 0.01 and ks < 0.01 and d_es < 0.02, (cfg, d_mean, ks, d_es)
            if cfg["n"] == 1200:
                sweep_es.append(es)
        assert all(b >= a for a, b in zip(sweep_es, sweep_es[1:]))
        notes.append(f"{len(TIMING_CONFIGS)} configs; worst mean error {100 * worst_mean:.2f}%, "
                     f"KS {worst_ks:.4f}, E{{S}} error {100 * worst_es:.2f}%; "
                     f"E{{S}} over rK=1..7: {', '.join(f'{x:.3f}' for x in sweep_es)}")


def test_criterion_8_reducer_invariance(capsys):
    with criterion(capsys, 8, "load is the same for every reducer distribution", 30.0) as notes:
        rng = np.random.default_rng(8)
        for i in range(50):
            s = random_small_spec(rng)
            o = execute_maps(assign_batch(s), s, trial_seed(s.seed, i))
            dists = [canonical_reducers(s)] + [random_reducers(s, rng) for _ in range(10)]
            for scheme in ("coded", "uncoded"):
                loads = {measured_load(shuffle(o, w, s, scheme), s) for w in dists}
                assert len(loads) == 1, (s, scheme, loads)
        notes.append("50 instances, canonical + 10 random distributions, coded and uncoded")
