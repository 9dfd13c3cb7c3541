import math

import numpy as np
import pytest

from streamsamp import Frame
from streamsamp.core import SamplingError
from streamsamp.estimators import ht_estimate, ht_totals
from streamsamp.ids import run_stream
from streamsamp.oracle import enumerate_ids_design, replicate_blocks


def test_census_recovers_total():
    f = Frame.from_pis([1.0, 1.0, 1.0], y=[2.5, -1.0, 7.0])
    rep = ht_estimate(run_stream(f, 0), f)
    assert rep.ht_total == 8.5
    assert rep.n_selected == 3 and rep.units_missing_y == 0


def test_two_point_design():
    f = Frame.from_pis([0.5, 0.5], y=[10.0, 30.0])
    table = enumerate_ids_design(f)
    outcomes = {s: ht_estimate(list(s), f).ht_total for s in table.entries}
    assert sorted(outcomes.values()) == [20.0, 60.0]
    assert math.fsum(p * outcomes[s] for s, p in table.entries.items()) == pytest.approx(40.0, abs=1e-12)


def test_unselected_units_need_no_y():
    f = Frame.from_pis([0.5, 0.5], y=[10.0, None])
    rep = ht_estimate(["1"], f)
    assert rep.ht_total == 20.0 and rep.units_missing_y == 1
    with pytest.raises(SamplingError, match="'2'"):
        ht_estimate(["2"], f)


def test_zero_pi_selected_is_error():
    f = Frame.from_pis([0.0, 1.0], y=[1.0, 1.0])
    with pytest.raises(SamplingError, match="pi = 0"):
        ht_estimate(["1"], f)


def test_unknown_unit():
    with pytest.raises(SamplingError, match="not in the frame"):
        ht_estimate(["zz"], Frame.from_pis([1.0], y=[1.0]))


def test_scale_equivariance():
    f = Frame.from_pis([0.7, 0.6, 0.7], y=[1.5, 2.0, -3.0])
    g = Frame.from_pis([0.7, 0.6, 0.7], y=[3.0, 4.0, -6.0])
    for seed in range(20):
        sel = [d.unit_id for d in run_stream(f, seed) if d.selected]
        assert ht_estimate(sel, g).ht_total == 2 * ht_estimate(sel, f).ht_total


def test_monte_carlo_mean(frame_763):
    R = 10**5
    est = np.concatenate([ht_totals(b, frame_763) for b in replicate_blocks(frame_763, "ids", R, 77)])
    se = est.std(ddof=1) / math.sqrt(R)
    assert abs(est.mean() - 3.0) <= 4 * se


def test_vectorised_matches_scalar(frame_763):
    sel = next(replicate_blocks(frame_763, "ids", 50, 1))
    totals = ht_totals(sel, frame_763)
    for row, t in zip(sel, totals):
        ids = [u.id for u, s in zip(frame_763.units, row) if s]
        assert ht_estimate(ids, frame_763).ht_total == pytest.approx(t, rel=1e-15)
