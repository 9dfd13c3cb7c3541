import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from streamsamp import Frame
from streamsamp.core import SamplingError, build_window_layout
from streamsamp.deville import (
    UNIFORM,
    DensityKind,
    _plan,
    batch_selections,
    branch_unit_probabilities,
    build_window_density,
    deville_sample,
)

from _corpus import EDGE_FRAMES, integer_corpus


def test_selected_branch_density():
    d = build_window_density(0.7, 1.3, prev_selected=True)
    assert d.kind is DensityKind.SELECTED_BRANCH
    assert d.break_point == pytest.approx(0.3, abs=1e-15)
    assert d.low_value == 0.0
    assert d.high_value == pytest.approx(1 / 0.7, rel=1e-14)
    assert d.total == pytest.approx(1.0, abs=1e-12)


def test_not_selected_branch_density():
    d = build_window_density(0.7, 1.3, prev_selected=False)
    assert d.kind is DensityKind.NOT_SELECTED_BRANCH
    assert d.low_value == pytest.approx(1 / 0.7, rel=1e-14)
    assert d.high_value == pytest.approx(40 / 49, rel=1e-14)
    assert 0.3 * d.low_value + 0.7 * d.high_value == pytest.approx(1.0, abs=1e-12)


def test_rejects_non_straddling_unit():
    with pytest.raises(SamplingError):
        build_window_density(1.25, 1.75, False)


def test_zero_break_is_uniform():
    for flag in (True, False):
        d = build_window_density(0.5, 2.0, flag)
        assert d.break_point == 0.0
        assert d.low_value == d.high_value == 1.0
    assert UNIFORM.total == 1.0


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 50), st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6), st.booleans())
def test_density_integrates_to_one(k, a, b, flag):
    assume(a + b <= 1.0)
    d = build_window_density(k - a, k + b, flag)
    assert d.low_value >= 0 and d.high_value >= 0
    assert d.total == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.booleans())
def test_ppf_inverts_cdf(a, b, flag):
    assume(a + b <= 1.0)
    F_prev = 3.0 - a
    d = build_window_density(F_prev, 3.0 + b, flag)
    q = np.linspace(0, 1, 101, endpoint=False)
    x = d.ppf(q)
    cdf = np.array([d.integral(0.0, v) for v in x])
    assert np.allclose(cdf, q, atol=1e-12)


def test_two_halves():
    frame = Frame.from_pis([0.5, 0.5])
    picks = [deville_sample(frame, s) for s in range(2000)]
    assert all(len(p) == 1 for p in picks)
    share = sum("1" in p for p in picks) / len(picks)
    assert abs(share - 0.5) <= 4 * np.sqrt(0.25 / len(picks))


def test_non_integer_total_needs_phantom():
    frame = Frame.from_pis([0.4, 0.3])
    with pytest.raises(SamplingError, match="phantom"):
        deville_sample(frame, 1)
    sizes = {len(deville_sample(frame, s, phantom=True)) for s in range(200)}
    assert sizes == {0, 1}


@pytest.mark.parametrize("pis", [p for p in EDGE_FRAMES if Frame.from_pis(p).sample_size])
def test_fixed_size(pis):
    frame = Frame.from_pis(pis)
    for seed in range(50):
        assert len(deville_sample(frame, seed)) == frame.sample_size


def test_batch_matches_scalar():
    frame = Frame.from_pis([0.3, 0.9, 0.4, 0.0, 1.0, 0.35, 0.55, 0.5])
    L = _plan(frame, False).n_windows
    for seed in range(200):
        u = np.random.default_rng(seed).random((1, L))
        row = batch_selections(frame, u)[0]
        assert {frame.units[j].id for j in np.flatnonzero(row)} == deville_sample(frame, seed)


@pytest.mark.parametrize("frame", integer_corpus(40, seed=3), ids=lambda f: f"N{len(f)}")
def test_branches_reproduce_conditional_updates(frame):
    """Window i+1 under each branch gives the two conditional update formulas."""
    plan = _plan(frame, False)
    lay = plan.layout
    pis = [u.pi for u in frame.units]
    for i, w in enumerate(lay.windows[:-1], start=1):
        v = w.cross_border_index
        if v is None:
            continue
        a, b = w.pi_v1, w.pi_v2
        nxt = lay.windows[i]
        for flag in (True, False):
            probs = dict(branch_unit_probabilities(plan, i + 1, flag))
            assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
            # the straddling unit's carried part
            expect_v = 0.0 if flag else b / (1 - a)
            assert probs.get(v, 0.0) == pytest.approx(expect_v, abs=1e-12)
            for k in range(nxt.start_index, nxt.end_index + 1):
                if k == v:
                    continue
                mass = nxt.pi_v1 if k == nxt.cross_border_index else pis[k]
                sel_branch = mass / (1 - b)
                expect = sel_branch if flag else (mass - sel_branch * a) / (1 - a)
                assert probs.get(k, 0.0) == pytest.approx(expect, abs=1e-12)


def test_first_window_is_uniform():
    frame = Frame.from_pis([0.2, 0.3, 0.5])
    probs = dict(branch_unit_probabilities(_plan(frame, False), 1, False))
    assert probs == pytest.approx({0: 0.2, 1: 0.3, 2: 0.5}, abs=1e-15)


def test_layout_shared_with_ids():
    frame = Frame.from_pis([0.7, 0.6, 0.7])
    assert _plan(frame, False).layout == build_window_layout(frame)
