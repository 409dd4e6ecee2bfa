import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import cet_exact, chi2_exact, gss_exact
from fslr.corpus import LabeledWindow
from fslr.counts import Contingency, build_counts
from fslr.errors import ConfigError, FormatError
from fslr.featsel import (FeatureMask, ScorePolicy, cet_scores, chi2_scores,
                          entry_scores, gss_scores, load_mask, save_mask, score_cet,
                          score_chi2, score_gss, score_tf, select_mask)

W = LabeledWindow
cell = st.integers(0, 10 ** 6)


def test_examples():
    ind = Contingency(1, 1, 1, 1)
    absent = Contingency(0, 0, 5, 7)
    for fn in (score_cet, score_chi2, score_gss):
        assert fn(ind) == 0.0
    assert score_cet(absent) == 0.0 and score_gss(absent) == 0.0
    assert score_chi2(Contingency(2, 0, 0, 2)) == math.inf
    ex = Contingency(3, 1, 1, 3)
    assert score_gss(ex) == 0.125
    assert score_cet(ex) == pytest.approx(float(cet_exact(3, 1, 1, 3)), rel=1e-14)
    assert score_chi2(ex) == pytest.approx(float(chi2_exact(3, 1, 1, 3)), rel=1e-14)


@given(cell, cell, cell, cell)
def test_against_exact(a, b, a_bar, b_bar):
    if a + b + a_bar + b_bar == 0:
        a_bar = 1
    assert gss_scores(a, b, a_bar, b_bar) == pytest.approx(
        float(gss_exact(a, b, a_bar, b_bar)), rel=1e-12, abs=0)
    want = cet_exact(a, b, a_bar, b_bar)
    assert cet_scores(a, b, a_bar, b_bar) == pytest.approx(float(want), rel=1e-12, abs=0)
    c = chi2_exact(a, b, a_bar, b_bar)
    got = chi2_scores(a, b, a_bar, b_bar)
    if c == math.inf:
        assert got == math.inf
    else:
        assert got == pytest.approx(float(c), rel=1e-12, abs=0)


@given(cell, cell, cell, cell, st.integers(2, 50))
def test_scale_invariance(a, b, a_bar, b_bar, m):
    if a + b + a_bar + b_bar == 0:
        a_bar = 1
    for fn in (cet_scores, chi2_scores, gss_scores):
        x, y = fn(a, b, a_bar, b_bar), fn(m * a, m * b, m * a_bar, m * b_bar)
        assert x == y or x == pytest.approx(y, rel=1e-12)


@given(cell, cell, cell, cell)
def test_chi2_zero_iff_gss_zero_and_cet_nonnegative(a, b, a_bar, b_bar):
    if a + b + a_bar + b_bar == 0:
        b_bar = 1
    assert (chi2_scores(a, b, a_bar, b_bar) == 0) == (gss_scores(a, b, a_bar, b_bar) == 0)
    assert cet_scores(a, b, a_bar, b_bar) >= 0


def test_cells_validation():
    with pytest.raises(ValueError):
        gss_scores(-1, 0, 0, 1)
    with pytest.raises(ValueError):
        cet_scores(0, 0, 0, 0)


def model():
    rows = [(("mr", "x"), True), (("mr", "y"), True), (("mr", "x"), False),
            (("the", "x"), False), (("the", "y"), False), (("the", "z"), False),
            (("a", "z"), False), (("the", "x"), True)]
    return build_counts([W(t, ne) for t, ne in rows])


def test_tf():
    m = model()
    assert score_tf(m, 1, "the") == 4.0 and score_tf(m, 1, "absent") == 0.0
    assert select_mask(m, "TF", 1).selected[0] == ("the",)


def test_selection_matches_exhaustive_scoring():
    m = model()
    for kind in ("CET", "GSS", "Chi2", "TF"):
        mask = select_mask(m, kind, 2)
        for k in (1, 2):
            toks = m.tokens_at(k)
            fn = {"CET": score_cet, "GSS": score_gss, "Chi2": score_chi2}.get(kind)
            score = {t: (fn(m.contingency(k, t)) if fn else score_tf(m, k, t))
                     for t in toks}
            freq = {t: sum(m.get(k, t)) for t in toks}
            want = sorted(toks, key=lambda t: (-score[t], -freq[t], t))[:2]
            assert list(mask.selected[k - 1]) == want
            assert list(mask.scores[k - 1]) == [score[t] for t in want]


def test_size_edge_cases():
    m = model()
    assert all(s == () for s in select_mask(m, "CET", 0).selected)
    full = select_mask(m, "GSS", 100)
    assert [set(s) for s in full.selected] == [set(m.tokens_at(k)) for k in (1, 2)]
    with pytest.raises(ValueError):
        select_mask(m, "CET", -1)


def test_random_policy():
    m = model()
    with pytest.raises(ConfigError):
        ScorePolicy("Random")
    with pytest.raises(ConfigError):
        ScorePolicy("Info")
    a = select_mask(m, ScorePolicy("Random", 5), 2)
    assert a == select_mask(m, ScorePolicy("Random", 5), 2)
    for k in (1, 2):
        assert set(a.selected[k - 1]) <= set(m.tokens_at(k))


def test_random_is_uniform():
    m = build_counts([W((f"t{i}",), False) for i in range(10)])
    hits = np.zeros(10)
    for seed in range(2000):
        for t in select_mask(m, ScorePolicy("Random", seed), 3).selected[0]:
            hits[int(t[1:])] += 1
    expected = 2000 * 3 / 10
    assert np.all(np.abs(hits - expected) < 5 * np.sqrt(expected))


@given(st.integers(0, 30), st.integers(0, 30), st.sampled_from(["CET", "GSS", "Chi2", "TF"]))
def test_prefix_property(s1, s2, kind):
    s1, s2 = sorted((s1, s2))
    m = model()
    small, big = select_mask(m, kind, s1), select_mask(m, kind, s2)
    for a, b in zip(small.selected, big.selected):
        assert b[:len(a)] == a


def test_planted_trigger_selected_at_position_n(standard):
    mask = select_mask(standard.model, "CET", 1)
    assert mask.selected[-1] == ("mr",)
    scores = entry_scores(standard.model, ScorePolicy("CET"))
    lo, hi = standard.model.span(standard.model.N)
    assert scores[lo:hi].max() == mask.scores[-1][0]


def test_mask_round_trip(tmp_path):
    m = model()
    for pol in (ScorePolicy("Chi2"), ScorePolicy("Random", 9)):
        mask = select_mask(m, pol, 2, meta={"run": 1})
        path = tmp_path / "mask.tsv"
        save_mask(mask, path)
        back = load_mask(path)
        assert back == mask and back.to_bytes() == mask.to_bytes()
        assert back.model_fingerprint == m.fingerprint()
    empty = select_mask(m, "CET", 0)
    assert FeatureMask.from_bytes(empty.to_bytes()) == empty


@pytest.mark.parametrize("mutate", [
    lambda b: b"", lambda b: b[:-1],
    lambda b: b.replace(b"format_version=1", b"format_version=2"),
    lambda b: b.replace(b"entries=4", b"entries=5"),
    lambda b: b.replace(b"policy=CET", b"policy=Nope"),
])
def test_mask_load_errors(mutate):
    data = select_mask(model(), "CET", 2).to_bytes()
    with pytest.raises((FormatError, ConfigError)):
        FeatureMask.from_bytes(mutate(data))


def test_mask_invariants():
    with pytest.raises(ValueError):
        FeatureMask(1, ScorePolicy("TF"), 1, "f", [["a", "b"]], [[1.0, 2.0]])
    with pytest.raises(ValueError):
        FeatureMask(1, ScorePolicy("TF"), 2, "f", [["a", "a"]], [[1.0, 2.0]])
    m = FeatureMask(2, ScorePolicy("TF"), 1, "f", [["a"], []], [[1.0], []])
    assert m.weight(1, "a") == 1 and m.weight(2, "a") == 0 and m.entry_count == 1
