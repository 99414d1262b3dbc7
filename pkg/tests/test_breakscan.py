import math

import numpy as np
import pytest
from oracles import normal_equations

from segbreak.breakscan import candidate_thresholds, fit_at, scan
from segbreak.datamodel import DEFAULT_BRACKETS, Dataset, SegmentedCoefficients, design_matrix
from segbreak.errors import NoValidCandidate, RankDeficientSegment
from segbreak.ingest import SyntheticConfig, synthesize
from segbreak.olscore import ols_fit
from segbreak.quantreg import QuantileSpec


def _full_dataset(seed=0, n=300):
    rng = np.random.default_rng(seed)
    income = rng.choice(DEFAULT_BRACKETS, n)
    income[:15] = DEFAULT_BRACKETS
    return Dataset.from_arrays(income, rng.uniform(0, 100, n))


def test_candidates_default_table():
    ds = _full_dataset()
    # oracle: enumerate every split of the sorted brackets, keep those with >= 2 per side
    values = sorted(DEFAULT_BRACKETS)
    expected = [values[i] for i in range(len(values)) if i + 1 >= 2 and len(values) - i - 1 >= 2]
    assert candidate_thresholds(ds) == expected
    assert expected[0] == 25000 and expected[-1] == 250000
    assert len(expected) == 12


def test_candidates_trimmed():
    ds = _full_dataset()
    assert candidate_thresholds(ds, 4) == list(DEFAULT_BRACKETS[3:11])


def test_single_bracket_has_no_candidate():
    ds = Dataset.from_arrays([15000] * 5, [1, 2, 3, 4, 5])
    with pytest.raises(NoValidCandidate):
        candidate_thresholds(ds)


def test_noiseless_scan_zero_only_at_truth(noiseless_config):
    ds = synthesize(noiseless_config)
    profile = scan(ds)
    # oracle: per-candidate normal-equations fit
    for tau, obj in profile.candidates:
        X, y = design_matrix(ds, tau, "zscore")
        _, ssr = normal_equations(X, y)
        assert obj == pytest.approx(ssr, rel=1e-6, abs=1e-12)
    assert profile.argmin_candidate == 175000
    assert profile.equivalence_interval == (175000.0, 250000.0)
    others = [o for t, o in profile.candidates if t != 175000]
    assert profile.min_objective <= 1e-18 and min(others) > 1e-6
    assert not profile.has_ties


def test_no_break_ties_resolve_to_smallest():
    coef = SegmentedCoefficients(1.0, 0.5, 1.0, 0.5, 100000)
    ds = synthesize(SyntheticConfig(coef, noise_sd=0.0, n=500, seed=1))
    profile = scan(ds)
    assert profile.has_ties
    assert profile.tied_candidates == tuple(t for t, _ in profile.candidates)
    assert profile.argmin_candidate == profile.candidates[0][0]


def test_scan_matches_fit_at_bitwise(jump_config):
    ds = synthesize(jump_config)
    profile = scan(ds)
    for tau, obj in profile.candidates:
        assert fit_at(ds, tau).objective == obj


def test_scan_permutation_invariant(jump_config):
    ds = synthesize(jump_config)
    perm = np.random.default_rng(9).permutation(ds.n)
    a = scan(ds).objectives
    b = scan(ds.permuted(perm)).objectives
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_segmented_never_worse_than_single_line(jump_config):
    ds = synthesize(jump_config)
    X = np.column_stack([np.ones(ds.n), ds.log_income])
    _, ssr_line = ols_fit(X, ds.zscores)
    assert np.all(scan(ds).objectives <= ssr_line + 1e-10)


def test_workers_do_not_change_profile(jump_config):
    ds = synthesize(jump_config)
    assert scan(ds, workers=1) == scan(ds, workers=4)


def test_quantile_scan(jump_config):
    ds = synthesize(jump_config)
    profile = scan(ds, "quantile", spec=QuantileSpec(0.5))
    assert profile.estimator_tag == "quantile(0.5)"
    assert profile.argmin_candidate == 175000


def test_fit_at_partition_equivalence(jump_config):
    ds = synthesize(jump_config)
    a = fit_at(ds, 200000)
    b = fit_at(ds, 249999)
    assert a.coefficients.as_array().tolist() == b.coefficients.as_array().tolist()
    assert a.std_errors == b.std_errors
    assert a.equivalence_interval == (175000.0, 250000.0)


def test_fit_at_quantile_dispatch(jump_config):
    ds = synthesize(jump_config)
    fit = fit_at(ds, 200000, "quantile", QuantileSpec(0.7))
    assert fit.estimator_tag == "quantile(0.7)" and fit.dependent_tag == "raw"


def test_fit_at_below_minimum(jump_config):
    ds = synthesize(jump_config)
    with pytest.raises(RankDeficientSegment):
        fit_at(ds, 15000)
    with pytest.raises(RankDeficientSegment):
        fit_at(ds, 10000)
    assert math.isfinite(fit_at(ds, 25000).objective)
