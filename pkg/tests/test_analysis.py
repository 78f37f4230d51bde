"""OLS engine, residualization, protocol behavior on synthetic data."""

import numpy as np
import pytest

from chordcorpus.analysis import (
    CONTROL_NAMES,
    DesignMatrix,
    SingularDesignError,
    fit_ols,
    permutation_test,
    r_squared,
    residualize,
    run_two_model_protocol,
    split_indices,
    standardized_betas,
    stratified_sample_indices,
)


def synthetic_design(rng, n_rows, target="controls+noise", noise=0.5):
    controls = rng.standard_normal((n_rows, 13))
    controls[:, 12] = rng.integers(1, 11, n_rows)  # note_count-like column
    moments = rng.standard_normal((n_rows, 4))
    w = rng.standard_normal(13)
    if target == "controls+noise":
        y = controls @ w + noise * rng.standard_normal(n_rows)
    elif target == "moments":
        y = controls @ w + moments @ np.array([0.0, 0.5, 1.0, 0.25])
        y = y + noise * rng.standard_normal(n_rows)
    elif target == "noise":
        y = rng.standard_normal(n_rows)
    else:
        raise ValueError(target)
    return DesignMatrix(
        controls=controls, moments=moments, target=y, target_name="dissonance"
    )


def test_fit_ols_exact_identity_column(rng):
    y = rng.standard_normal(500)
    X = np.column_stack([y, rng.standard_normal((500, 3))])
    fit = fit_ols(X, y)
    assert fit.coef[0] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(fit.coef[1:], 0.0, atol=1e-9)
    assert r_squared(y, fit.predict(X)) == pytest.approx(1.0, abs=1e-12)


def test_fit_ols_exact_line(rng):
    x = rng.standard_normal(200)
    y = 2.0 * x + 3.0
    fit = fit_ols(x[:, None], y)
    assert fit.coef[0] == pytest.approx(2.0, abs=1e-9)
    assert fit.intercept == pytest.approx(3.0, abs=1e-9)


def test_fit_ols_matches_pinv_oracle(rng):
    X = rng.standard_normal((1000, 5))
    y = rng.standard_normal(1000)
    fit = fit_ols(X, y)
    aug = np.column_stack([np.ones(1000), X])
    oracle = np.linalg.pinv(aug) @ y  # independent solution path
    assert fit.intercept == pytest.approx(oracle[0], abs=1e-7)
    assert np.allclose(fit.coef, oracle[1:], atol=1e-7)


def test_fit_ols_column_scaling_property(rng):
    X = rng.standard_normal((400, 3))
    y = rng.standard_normal(400)
    base = fit_ols(X, y)
    scaled = X.copy()
    scaled[:, 1] *= 10.0
    fit = fit_ols(scaled, y)
    assert fit.coef[1] == pytest.approx(base.coef[1] / 10.0, abs=1e-12)


def test_fit_ols_singularity_names_columns(rng):
    X = rng.standard_normal((300, 4))
    X[:, 3] = 2.0 * X[:, 1] - X[:, 0]
    with pytest.raises(SingularDesignError) as err:
        fit_ols(X, rng.standard_normal(300), column_names=["a", "b", "c", "dup"])
    assert "dup" in err.value.columns


def test_fit_ols_requires_enough_rows(rng):
    with pytest.raises(ValueError, match="rows"):
        fit_ols(rng.standard_normal((4, 4)), rng.standard_normal(4))


def test_residualize_exact_linear_combination(rng):
    controls = rng.standard_normal((2000, 13))
    w = rng.standard_normal(13)
    moments = np.column_stack(
        [controls @ w + 1.5, rng.standard_normal((2000, 3))]
    )
    train = np.arange(1500)
    resid = residualize(moments, controls, train)
    assert np.max(np.abs(resid[:, 0])) < 1e-8


def test_residualize_orthogonal_column_passes_through(rng):
    n = 4000
    controls = rng.standard_normal((n, 13))
    raw = rng.standard_normal(n)
    # strip every control component so the column is exactly orthogonal
    aug = np.column_stack([np.ones(n), controls])
    ortho = raw - aug @ (np.linalg.pinv(aug) @ raw)
    moments = np.column_stack([ortho, rng.standard_normal((n, 3))])
    train = np.arange(n)
    resid = residualize(moments, controls, train)
    assert np.allclose(resid[:, 0], ortho - ortho.mean(), atol=1e-8)


def test_residualize_uncorrelated_with_controls_on_train(rng):
    design = synthetic_design(rng, 20_000, target="moments")
    train = np.arange(15_000)
    resid = residualize(design.moments, design.controls, train)
    assert np.max(np.abs(resid[train].mean(axis=0))) < 1e-8
    for j in range(4):
        for k in range(13):
            c = np.corrcoef(resid[train, j], design.controls[train, k])[0, 1]
            assert abs(c) < 1e-6


def test_split_indices_disjoint_and_deterministic():
    tr1, te1 = split_indices(1000, 700, 200, seed=9)
    tr2, te2 = split_indices(1000, 700, 200, seed=9)
    assert np.array_equal(tr1, tr2) and np.array_equal(te1, te2)
    assert len(set(tr1.tolist()) & set(te1.tolist())) == 0
    assert len(tr1) == 700 and len(te1) == 200
    with pytest.raises(ValueError):
        split_indices(100, 90, 20, seed=1)


def test_protocol_no_signal_in_moments(rng):
    design = synthetic_design(rng, 6000, target="controls+noise")
    run = run_two_model_protocol(design, 4000, 1500, seed=7, n_permutations=30)
    assert abs(run.report.delta_r2) < 0.01
    assert run.report.r2_controls > 0.9
    assert run.report.delta_r2 == pytest.approx(
        run.report.r2_full - run.report.r2_controls, abs=0
    )


def test_protocol_detects_moment_signal(rng):
    design = synthetic_design(rng, 6000, target="moments")
    run = run_two_model_protocol(design, 4000, 1500, seed=7, n_permutations=60)
    assert run.report.delta_r2 > 0.05
    assert run.report.permutation_p == pytest.approx(1.0 / 61.0)
    assert run.report.betas["skewness"] > run.report.betas["spread"] > 0


def test_protocol_nested_models_training_r2(rng):
    design = synthetic_design(rng, 5000, target="moments")
    train, _ = split_indices(len(design), 3500, 1000, seed=3)
    resid = residualize(design.moments, design.controls, train)
    y = design.target
    fit1 = fit_ols(design.controls[train], y[train])
    X2 = np.column_stack([design.controls, resid])
    fit2 = fit_ols(X2[train], y[train])
    r2_1 = r_squared(y[train], fit1.predict(design.controls[train]))
    r2_2 = r_squared(y[train], fit2.predict(X2[train]))
    assert r2_2 >= r2_1 - 1e-10


def test_standardized_beta_invariant_to_rescaling(rng):
    design = synthetic_design(rng, 5000, target="moments")
    scaled = DesignMatrix(
        controls=design.controls.copy(),
        moments=design.moments * np.array([1.0, 10.0, 1.0, 1.0]),
        target=design.target.copy(),
        target_name="dissonance",
    )
    a = run_two_model_protocol(design, 3500, 1000, seed=5, n_permutations=1)
    b = run_two_model_protocol(scaled, 3500, 1000, seed=5, n_permutations=1)
    assert b.report.betas["spread"] == pytest.approx(
        a.report.betas["spread"], abs=1e-9
    )


def test_standardized_betas_helper(rng):
    X = rng.standard_normal((1000, 2)) * np.array([2.0, 5.0])
    y = 3.0 * X[:, 0] + rng.standard_normal(1000)
    fit = fit_ols(X, y)
    betas = standardized_betas(fit.coef, X, y)
    assert betas[0] == pytest.approx(3.0 * X[:, 0].std() / y.std(), rel=1e-6)


def test_permutation_prefix_stability(rng):
    design = synthetic_design(rng, 3000, target="moments")
    _, null_short = permutation_test(design, 2000, 800, n_permutations=5, seed=11)
    _, null_long = permutation_test(design, 2000, 800, n_permutations=12, seed=11)
    assert np.array_equal(null_short, null_long[:5])


def test_permutation_requires_iterations(rng):
    design = synthetic_design(rng, 2000, target="noise")
    with pytest.raises(ValueError):
        permutation_test(design, 1200, 500, n_permutations=0, seed=1)
    with pytest.raises(ValueError):
        run_two_model_protocol(design, 1200, 500, seed=1, n_permutations=0)


def test_permutation_p_calibration_under_null(rng):
    # a valid test gives roughly uniform p under the null; loose CI bound
    hits = 0
    for i in range(20):
        design = synthetic_design(
            np.random.default_rng(1000 + i), 1500, target="noise"
        )
        p, _ = permutation_test(design, 1000, 400, n_permutations=99, seed=i)
        hits += p < 0.05
    assert hits <= 5  # 25% of 20 runs


def test_stratified_quota_redistribution():
    note_counts = np.array([1] * 88 + [2] * 500 + [3] * 5000 + [4] * 5000)
    idx = stratified_sample_indices(note_counts, 4000, seed=2)
    assert len(idx) == 4000
    assert len(np.unique(idx)) == 4000
    got = {s: int((note_counts[idx] == s).sum()) for s in (1, 2, 3, 4)}
    assert got == {1: 88, 2: 500, 3: 1706, 4: 1706}


def test_stratified_equal_when_plenty():
    note_counts = np.repeat(np.arange(1, 6), 1000)
    idx = stratified_sample_indices(note_counts, 2500, seed=3)
    got = np.bincount(note_counts[idx])[1:]
    assert got.tolist() == [500] * 5


def test_stratified_deterministic_and_bounded():
    note_counts = np.repeat(np.arange(1, 4), 50)
    a = stratified_sample_indices(note_counts, 60, seed=4)
    b = stratified_sample_indices(note_counts, 60, seed=4)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        stratified_sample_indices(note_counts, 151, seed=4)


def test_design_matrix_validation(rng):
    with pytest.raises(ValueError, match="controls"):
        DesignMatrix(
            controls=np.ones((10, 5)),
            moments=np.ones((10, 4)),
            target=np.ones(10),
            target_name="dissonance",
        )
    bad = np.ones(10)
    bad[3] = np.nan
    with pytest.raises(ValueError, match="finite"):
        DesignMatrix(
            controls=np.ones((10, 13)),
            moments=np.ones((10, 4)),
            target=bad,
            target_name="dissonance",
        )


def test_control_names_shape():
    assert len(CONTROL_NAMES) == 13
    assert CONTROL_NAMES[-1] == "note_count"
