import csv
import io
import json
from fractions import Fraction
from itertools import product

import pytest

from arboreal.experiments import (DistributionReport, ExperimentConfig, distribution_csv,
                                  exact_tv, monotone_majority, parity_weights,
                                  run_algebraic_suite, run_boundary_minimality,
                                  run_equidistribution, run_hedlund, run_horospherical_average,
                                  to_json_text, total_variation, trajectory_csv)
from arboreal.sl2 import LatticeVertex, quotient_position_oracle


# Frozen from the brute-force orbit oracle below; TV(i) = q^{-(2i+1)}.
EXACT_TV = {2: ["1/2", "1/8", "1/32", "1/128"], 3: ["1/3", "1/27", "1/243"]}


@pytest.mark.parametrize("q", sorted(EXACT_TV))
def test_exact_tv_frozen(q):
    assert [str(exact_tv(q, i)) for i in range(len(EXACT_TV[q]))] == EXACT_TV[q]


@pytest.mark.parametrize("i", [1, 2])
def test_exact_tv_through_orbit_oracle(i):
    q = 2
    counts = {}
    for w in product(range(q), repeat=2 * i):
        p = quotient_position_oracle(LatticeVertex.make(q, 2 * i, dict(enumerate(w))), 4)
        counts[p] = counts.get(p, 0) + 1
    assert total_variation(counts, q ** (2 * i), parity_weights(q, 0)) == Fraction(EXACT_TV[q][i])


@pytest.mark.parametrize("q", [2, 3, 5])
@pytest.mark.parametrize("parity", [0, 1])
def test_parity_weights_sum_to_one(q, parity):
    w = parity_weights(q, parity, window=80)
    assert all(n % 2 == parity for n in w)
    assert 1 - sum(w.values()) < Fraction(1, q ** 70)
    if q == 2 and parity == 0:
        assert (w[0], w[2]) == (Fraction(1, 2), Fraction(3, 8))


def test_total_variation_examples():
    exp = {0: Fraction(1, 2), 2: Fraction(1, 2)}
    assert total_variation({0: 5, 2: 5}, 10, exp) == 0
    assert total_variation({0: 10}, 10, exp) == Fraction(1, 2)
    # expected mass outside the listed support counts fully
    assert total_variation({0: 10}, 10, {0: Fraction(1, 2)}) == Fraction(1, 2)


def _report(i, tv, sigma=0.001):
    return DistributionReport(i, 1000, {0: 1000}, {0: Fraction(1)}, Fraction(tv), sigma)


def test_monotone_majority():
    down = [_report(i, tv) for i, tv in enumerate(["0.5", "0.3", "0.31", "0.1", "0.05"])]
    assert monotone_majority(down)["passed"]
    up = [_report(i, tv) for i, tv in enumerate(["0.1", "0.2", "0.3", "0.4"])]
    assert not monotone_majority(up)["passed"]
    flat = [_report(i, "0.1", sigma=0.05) for i in range(4)]
    assert not monotone_majority(flat)["passed"]


def small_equidist(seed=0):
    return run_equidistribution(ExperimentConfig("equidist", {"q": 2, "i_values": [0, 1, 2, 3]},
                                                 samples=2000, seed=seed))


def test_equidistribution_small_and_deterministic():
    a, b = small_equidist(), small_equidist()
    assert to_json_text(a) == to_json_text(b)
    assert to_json_text(small_equidist(1)) != to_json_text(a)
    reps = a["reports"]
    for r in reps:
        assert sum(r.masses().values()) == 1
        assert all(p % 2 == 0 for p in r.counts)
    # the cusp itself sits at position 0
    assert reps[0].counts == {0: 2000}
    rows = list(csv.reader(io.StringIO(distribution_csv(a).split("\n", 1)[1])))
    assert rows[0] == ["step", "position", "weight_expected", "weight_empirical"]


def test_hedlund_small():
    res = run_hedlund(ExperimentConfig("hedlund", {"q": 2, "diagnostic_samples": 300}, samples=300))
    assert res["assertions"]["cusp_single_fiber"]
    assert res["assertions"]["mislabel_detected"]
    assert res["assertions"]["series_returns_to_window"]
    base = res["series"]["observer_base"]["counts"]
    assert all(p % 2 == 0 for p in base)
    odd = res["series"]["observer_odd"]["counts"]
    assert all(p % 2 == 1 for p in odd)
    text = trajectory_csv(res)
    assert text.startswith("# {")


def test_average_small():
    res = run_horospherical_average(ExperimentConfig("average", {"q": 2, "n_max": 2}, samples=400))
    assert [r["n"] for r in res["rows"]] == [0, 1, 2]
    assert res["rows"][0]["expected"] == "7/8"


def test_minimality_small():
    cfg = ExperimentConfig("minimality", {"q": 2, "targets": 5})
    res = run_boundary_minimality(cfg)
    assert res["assertions"]["all_targets_matched"]
    assert to_json_text(res) == to_json_text(run_boundary_minimality(cfg))


def test_algebraic_suite_and_fault_injection():
    params = {"shapes": ["3,3"], "depth": 2, "fuzz_cases": 5, "epsilon_cases": 1}
    good = run_algebraic_suite(ExperimentConfig("verify", params))
    assert good["assertions"]["all_checks_pass"]
    bad = run_algebraic_suite(ExperimentConfig("verify", {**params, "faults": ["corrupt_t"]}))
    assert not bad["assertions"]["all_checks_pass"]
    failing = [c for c in bad["checks"] if c.failures]
    assert failing and all(c.witness for c in failing)


def test_config_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"name": "equidist", "params": {"q": 3}, "samples": 10, "seed": 4}))
    cfg = ExperimentConfig.load(path)
    assert cfg.params == {"q": 3} and cfg.samples == 10
    assert cfg.stream("a").random() == cfg.stream("a").random() != cfg.stream("b").random()
    header = cfg.header()
    assert header["schema"] and header["orders"]
