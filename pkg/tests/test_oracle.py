import json

import numpy as np
import pytest

from streamsamp import Frame
from streamsamp.core import SamplingError
from streamsamp.joint import joint_matrix
from streamsamp.oracle import (
    DesignTable,
    Source,
    check_first_order,
    check_joint,
    compare_tables,
    enumerate_deville_design,
    enumerate_ids_design,
    ids_paths,
    monte_carlo_design,
    replicate_blocks,
    window_violations,
)

from _corpus import EDGE_FRAMES, fuzz_corpus


def test_two_halves_table():
    t = enumerate_ids_design(Frame.from_pis([0.5, 0.5]))
    assert t.entries == {("1",): 0.5, ("2",): 0.5}
    assert t.source is Source.IDS_EXACT and t.replications == 0


def test_worked_example_table():
    f = Frame.from_pis([0.7, 0.6, 0.7])
    t = enumerate_ids_design(f)
    assert t.sizes() == {2}
    # select unit 1 at 0.7, then unit 2 at 3/7
    assert t.entries[("1", "2")] == pytest.approx(0.7 * 3 / 7, abs=1e-15)
    assert t.total == pytest.approx(1.0, abs=1e-12)


def test_one_window_certain_tail():
    t = enumerate_ids_design(Frame.from_pis([0.2, 0.8]))
    assert t.entries == pytest.approx({("1",): 0.2, ("2",): 0.8}, abs=1e-15)


@pytest.mark.parametrize("pis", [(0.5, 0.5), (0.7, 0.6, 0.7), (0.3, 0.7, 0.5, 0.5)])
def test_deville_table_equals_ids(pis):
    f = Frame.from_pis(pis)
    rep = compare_tables(enumerate_ids_design(f), enumerate_deville_design(f), 1e-10)
    assert rep.passed, rep


def test_non_integer_total_with_phantom():
    f = Frame.from_pis([0.4, 0.3, 0.9])
    with pytest.raises(SamplingError):
        enumerate_deville_design(f)
    d = enumerate_deville_design(f, phantom=True)
    assert compare_tables(enumerate_ids_design(f), d).max_deviation <= 1e-12


def test_size_guard():
    with pytest.raises(SamplingError):
        enumerate_ids_design(Frame.from_pis([0.05] * 21))


@pytest.mark.parametrize("pis", EDGE_FRAMES)
def test_rules_give_identical_tables(pis):
    f = Frame.from_pis(pis)
    assert enumerate_ids_design(f).entries == enumerate_ids_design(f, rule="four_case").entries


def test_unknown_rule():
    with pytest.raises(ValueError):
        ids_paths(Frame.from_pis([0.5, 0.5]), rule="nope")


def test_exact_table_invariants():
    for f in fuzz_corpus(60, seed=5):
        t = enumerate_ids_design(f)
        assert t.total == pytest.approx(1.0, abs=1e-10)
        assert all(p >= 0 for p in t.entries.values())
        if f.sample_size is not None:
            assert t.sizes() == {f.sample_size}
        assert not window_violations(f)


def test_window_violation_detector_fires():
    f = Frame.from_pis([0.7, 0.6, 0.7])
    paths, _ = ids_paths(f)
    # forge a branch that takes both units of the first window
    paths[0].steps = [(0.7, 1, False, True, 0), (0.3, 1, False, True, 1), (0.0, 2, False, False, 2)]
    assert window_violations(f, paths)


def test_monte_carlo_single_replicate():
    t = monte_carlo_design(Frame.from_pis([0.7, 0.6, 0.7]), "ids", 1, 3)
    assert len(t.entries) == 1 and list(t.entries.values()) == [1.0]


def test_monte_carlo_two_halves():
    R = 10**5
    t = monte_carlo_design(Frame.from_pis([0.5, 0.5]), "ids", R, 12)
    for s in [("1",), ("2",)]:
        assert abs(t.entries[s] - 0.5) <= 4 * np.sqrt(0.25 / R)
    assert t.total == pytest.approx(1.0, abs=1e-12)


def test_monte_carlo_reproducible_and_block_local():
    f = Frame.from_pis([0.3, 0.9, 0.4, 0.4])
    a = monte_carlo_design(f, "deville", 40000, 9)
    b = monte_carlo_design(f, "deville", 40000, 9)
    assert a.entries == b.entries
    # replicate r only depends on (seed, r): a prefix run agrees row by row
    long = np.concatenate(list(replicate_blocks(f, "ids", 20000, 4)))
    short = np.concatenate(list(replicate_blocks(f, "ids", 17000, 4)))
    assert np.array_equal(long[:17000], short)


def test_monte_carlo_rejects_zero_reps():
    with pytest.raises(SamplingError):
        monte_carlo_design(Frame.from_pis([0.5, 0.5]), "ids", 0, 1)


def test_first_order_reports():
    f = Frame.from_pis([1.0, 1.0])
    rep = check_first_order(enumerate_ids_design(f), f)
    assert rep.max_deviation == 0.0
    f = Frame.from_pis([0.7, 0.6, 0.7])
    rep = check_first_order(monte_carlo_design(f, "ids", 10**5, 1), f)
    assert rep.passed and rep.tolerance == 1.0


def test_joint_report_catches_wrong_matrix():
    f = Frame.from_pis([0.7, 0.6, 0.7])
    t = enumerate_ids_design(f)
    m = joint_matrix(f).values
    assert check_joint(t, m, f.ids, 1e-10).passed
    bad = m.copy()
    bad[0, 2] = bad[2, 0] = 0.49
    rep = check_joint(t, bad, f.ids, 1e-10)
    assert not rep.passed and set(rep.where) == {"1", "3"}


def test_joint_trivial_pair():
    f = Frame.from_pis([0.5, 0.5])
    rep = check_joint(enumerate_ids_design(f), joint_matrix(f).values, f.ids, 1e-10)
    assert rep.max_deviation == 0.0


def test_compare_monte_carlo_pooled():
    f = Frame.from_pis([0.7, 0.6, 0.7])
    a = monte_carlo_design(f, "ids", 10**5, 1)
    b = monte_carlo_design(f, "deville", 10**5, 2)
    assert compare_tables(a, b).passed
    assert compare_tables(a, enumerate_ids_design(f)).passed


def test_json_round_trip():
    t = enumerate_ids_design(Frame.from_pis([0.7, 0.6, 0.7]))
    raw = json.loads(t.to_json())
    assert set(raw) == {"samples", "source", "replications"}
    assert raw["source"] == "ids_exact" and raw["replications"] == 0
    back = DesignTable.from_json(t.to_json())
    assert back.entries == t.entries
