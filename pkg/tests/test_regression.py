"""Model zoo: metrics, fits, CV, selection, serialization."""

import numpy as np
import pytest

from presetsel import generate_synthetic, load_bundle, save_bundle
from presetsel.regression import (
    FAMILIES,
    FitError,
    ModelSpec,
    compute_metrics,
    default_specs,
    evaluate_bundle,
    fit,
    kfold_cv,
    kfold_indices,
    per_tree_predictions,
    predict,
    select_best_model,
    train_all_presets,
)


def linear_data(n=80, p=5, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, (n, p))
    w = rng.uniform(0.5, 2.0, p)
    y = 3.0 + X @ w + (rng.normal(0, noise, n) if noise else 0.0)
    return X, y


# --- metrics ---------------------------------------------------------------

def test_metrics_perfect_prediction():
    m = compute_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert (m.mae, m.mse, m.mape) == (0.0, 0.0, 0.0)


def test_metrics_hand_case():
    m = compute_metrics([1.0, 2.0, 4.0], [1.1, 1.8, 4.4])
    assert m.mape == pytest.approx(0.1, rel=1e-12)
    assert m.mae == pytest.approx(0.7 / 3, rel=1e-12)
    assert m.mse == pytest.approx(0.07, rel=1e-12)


def test_metrics_rejects_zero_true_value():
    with pytest.raises(ValueError, match="zero"):
        compute_metrics([1.0, 0.0], [1.0, 1.0])


def test_metrics_rejects_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        compute_metrics([1.0, 2.0], [1.0])


def test_mape_scale_invariance():
    rng = np.random.default_rng(0)
    y = rng.uniform(0.5, 5.0, 50)
    yp = y * rng.uniform(0.8, 1.2, 50)
    base = compute_metrics(y, yp).mape
    for _ in range(100):
        c = rng.uniform(1e-3, 1e3)
        scaled = compute_metrics(c * y, c * yp).mape
        assert scaled == pytest.approx(base, rel=1e-12)


# --- fitting ---------------------------------------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_constant_target_predicted_by_every_family(family):
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 1, (30, 4))
    y = np.full(30, 3.0)
    hp = {"n_trees": 10} if family in ("random_forest", "extra_trees") else {}
    model = fit(ModelSpec(family, hyperparams=hp, seed=2), X, y)
    preds = predict(model, X)
    np.testing.assert_allclose(preds, 3.0, atol=1e-6)


def test_linear_family_exact_on_linear_data():
    X, y = linear_data(seed=3)
    model = fit(ModelSpec("linear"), X, y)
    m = compute_metrics(y, predict(model, X))
    assert m.mape <= 1e-8


def test_knn_k1_memorizes_training_data():
    rng = np.random.default_rng(4)
    X = rng.uniform(0, 1, (40, 3))
    y = rng.uniform(1.0, 5.0, 40)
    model = fit(ModelSpec("knn", hyperparams={"k": 1}), X, y)
    np.testing.assert_array_equal(predict(model, X), y)


def test_predict_single_vs_batch():
    X, y = linear_data(seed=5)
    model = fit(ModelSpec("ridge"), X, y)
    single = predict(model, X[0])
    batch = predict(model, X[:3])
    assert isinstance(single, float)
    assert single == batch[0]


def test_predict_rejects_wrong_dimensionality():
    X, y = linear_data(seed=6)
    model = fit(ModelSpec("linear"), X, y)
    with pytest.raises(ValueError, match="features"):
        predict(model, np.zeros(3))


def test_fit_determinism():
    rng = np.random.default_rng(7)
    X = rng.uniform(0, 1, (60, 6))
    y = 1.0 + X.sum(axis=1) + rng.normal(0, 0.1, 60)
    for family in ("random_forest", "extra_trees", "gradient_boosting"):
        hp = {"n_trees": 20} if family != "gradient_boosting" else {"n_rounds": 30}
        a = fit(ModelSpec(family, hyperparams=hp, seed=11), X, y)
        b = fit(ModelSpec(family, hyperparams=hp, seed=11), X, y)
        assert predict(a, X).tobytes() == predict(b, X).tobytes()


def test_forest_prediction_is_mean_of_trees():
    rng = np.random.default_rng(8)
    X = rng.uniform(0, 1, (50, 4))
    y = 2.0 + X[:, 0] + rng.normal(0, 0.2, 50)
    model = fit(ModelSpec("random_forest", hyperparams={"n_trees": 15}, seed=1), X, y)
    leaves = per_tree_predictions(model.params, X)
    assert leaves.shape == (50, 15)
    np.testing.assert_allclose(leaves.mean(axis=1), predict(model, X), rtol=1e-12)


def test_boosted_prediction_is_shrunken_sum_of_trees():
    rng = np.random.default_rng(9)
    X = rng.uniform(0, 1, (50, 4))
    y = 2.0 + X[:, 1] + rng.normal(0, 0.2, 50)
    model = fit(ModelSpec("gradient_boosting", hyperparams={"n_rounds": 25}, seed=1), X, y)
    leaves = per_tree_predictions(model.params, X)
    expected = model.params["init"] + model.params["learning_rate"] * leaves.sum(axis=1)
    np.testing.assert_allclose(expected, predict(model, X), rtol=1e-12)


def test_standardization_neutrality():
    X, y = linear_data(n=60, seed=10, noise=0.05)
    scaled = X.copy()
    scaled[:, 0] *= 1000.0
    query = X[:10]
    scaled_query = scaled[:10]
    for family in ("linear", "ridge", "lasso", "elastic_net", "huber"):
        spec = ModelSpec(family)
        base_pred = predict(fit(spec, X, y), query)
        scaled_pred = predict(fit(spec, scaled, y), scaled_query)
        np.testing.assert_allclose(scaled_pred, base_pred, rtol=1e-8, atol=1e-8)


def test_forest_averaging_reduces_training_mse():
    # seed-averaged statistical check: more trees never hurt train MSE in expectation
    mses = {1: [], 100: []}
    for seed in range(22):
        rng = np.random.default_rng(1000 + seed)
        X = rng.uniform(0, 1, (50, 5))
        y = 1.0 + 2.0 * X[:, 0] + rng.normal(0, 0.5, 50)
        for n_trees in (1, 100):
            spec = ModelSpec("random_forest", hyperparams={"n_trees": n_trees}, seed=seed)
            model = fit(spec, X, y)
            mses[n_trees].append(compute_metrics(y, predict(model, X)).mse)
    assert np.mean(mses[100]) <= np.mean(mses[1])


def test_fit_rejects_degenerate_input():
    with pytest.raises(FitError, match="samples"):
        fit(ModelSpec("linear"), np.zeros((1, 3)), np.ones(1))
    with pytest.raises(FitError, match="non-finite"):
        fit(ModelSpec("linear"), np.full((4, 2), np.nan), np.ones(4))


def test_spec_validation():
    with pytest.raises(ValueError, match="unknown model family"):
        ModelSpec("svm")
    with pytest.raises(ValueError, match="unknown hyperparameters"):
        ModelSpec("ridge", hyperparams={"gamma": 2.0})
    spec = ModelSpec("ridge", hyperparams={"alpha": 0.5})
    assert spec.hyperparams["alpha"] == 0.5


# --- cross-validation --------------------------------------------------------

def test_kfold_partition_shapes():
    folds = kfold_indices(10, 5, seed=0)
    assert [len(f) for f in folds] == [2, 2, 2, 2, 2]
    all_idx = np.concatenate(folds)
    assert sorted(all_idx) == list(range(10))


def test_kfold_sizes_differ_by_at_most_one():
    folds = kfold_indices(23, 5, seed=1)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert sum(sizes) == 23


def test_kfold_deterministic():
    X, y = linear_data(n=30, seed=12, noise=0.05)
    a = kfold_cv(ModelSpec("ridge"), X, y, k=5, seed=3)
    b = kfold_cv(ModelSpec("ridge"), X, y, k=5, seed=3)
    assert a == b


def test_kfold_zero_error_on_noise_free_linear():
    X, y = linear_data(n=50, seed=13)
    report = kfold_cv(ModelSpec("linear"), X, y, k=5, seed=0)
    assert report.mean.mape <= 1e-6


def test_kfold_preconditions():
    X, y = linear_data(n=4, seed=14)
    with pytest.raises(ValueError, match="too few"):
        kfold_cv(ModelSpec("linear"), X, y, k=5)
    with pytest.raises(ValueError, match="k must be"):
        kfold_cv(ModelSpec("linear"), X, y, k=1)


# --- model selection ---------------------------------------------------------

def test_select_single_spec_wins():
    X, y = linear_data(n=40, seed=15, noise=0.02)
    spec, model, report = select_best_model([ModelSpec("ridge")], X, y, k=4, seed=0)
    assert spec.family == "ridge"
    assert model.spec.family == "ridge"
    assert report.mean.mape >= 0


def test_select_linear_beats_knn_on_linear_data():
    X, y = linear_data(n=60, seed=16)
    specs = [ModelSpec("knn"), ModelSpec("linear")]
    spec, _, _ = select_best_model(specs, X, y, k=5, seed=0)
    assert spec.family == "linear"


def test_select_tie_resolves_to_canonical_order():
    # constant target: every family scores MAPE 0, so canonical order decides
    rng = np.random.default_rng(17)
    X = rng.uniform(0, 1, (20, 3))
    y = np.full(20, 2.5)
    specs = [ModelSpec("knn"), ModelSpec("decision_tree"), ModelSpec("linear")]
    spec, _, report = select_best_model(specs, X, y, k=4, seed=0)
    assert report.mean.mape == 0.0
    assert spec.family == "linear"


def test_select_skips_failing_spec(caplog):
    # 2 samples, 2 folds: each fold trains on 1 row, below the linear-family
    # minimum, so linear is skipped with a warning and knn wins
    X = np.array([[0.0], [1.0]])
    y = np.array([1.0, 2.0])
    specs = [ModelSpec("linear"), ModelSpec("knn")]
    with caplog.at_level("WARNING", logger="presetsel.regression.core"):
        spec, _, _ = select_best_model(specs, X, y, k=2, seed=0)
    assert spec.family == "knn"
    assert any("skipping linear" in rec.message % rec.args for rec in caplog.records)


def test_select_all_failing_raises():
    X = np.array([[0.0], [1.0]])
    y = np.array([1.0, 2.0])
    with pytest.raises(FitError, match="all candidate"):
        select_best_model([ModelSpec("linear"), ModelSpec("ridge")], X, y, k=2, seed=0)


def test_select_rejects_empty_specs():
    X, y = linear_data(n=6, seed=18, noise=0.01)
    with pytest.raises(ValueError, match="non-empty"):
        select_best_model([], X, y)


def test_train_all_presets_bundle(quick_bundle):
    assert quick_bundle.is_complete()
    assert len(quick_bundle.entries) == 9
    for entry in quick_bundle.entries.values():
        assert entry.metrics.mape >= 0
        assert entry.feature_mask.all()


def test_train_all_presets_missing_preset():
    data = generate_synthetic(n_chunks=5, seed=1)
    data.records = [r for r in data.records if r.preset != "medium"]
    with pytest.raises(ValueError, match="medium"):
        train_all_presets(data, specs=[ModelSpec("linear")], k=3)


def test_evaluate_bundle(quick_bundle):
    test_data = generate_synthetic(n_chunks=10, noise_level=0.02, seed=99)
    metrics = evaluate_bundle(quick_bundle, test_data)
    assert set(metrics) == set(test_data.presets_present())
    for m in metrics.values():
        assert m.mape < 0.5


# --- serialization -----------------------------------------------------------

def test_bundle_roundtrip_bitwise(tmp_path, quick_bundle):
    path = tmp_path / "bundle.json"
    save_bundle(quick_bundle, path)
    loaded = load_bundle(path)
    rng = np.random.default_rng(20)
    vectors = generate_synthetic(n_chunks=12, seed=21).records
    for rec in rng.choice(len(vectors), size=100, replace=True):
        x = vectors[int(rec)].features
        for preset, entry in quick_bundle.entries.items():
            a = predict(entry.model, x)
            b = predict(loaded.entries[preset].model, x)
            assert a == b  # bitwise-identical


def test_bundle_rejects_altered_feature_names(tmp_path, quick_bundle):
    from presetsel.regression import BundleFormatError

    path = tmp_path / "bundle.json"
    save_bundle(quick_bundle, path)
    text = path.read_text().replace('"mv_mean"', '"mv_median"')
    path.write_text(text)
    with pytest.raises(BundleFormatError, match="layout"):
        load_bundle(path)


def test_bundle_rejects_corrupt_payload(tmp_path):
    from presetsel.regression import BundleFormatError

    path = tmp_path / "bundle.json"
    path.write_text("{not json")
    with pytest.raises(BundleFormatError, match="corrupt"):
        load_bundle(path)


def test_bundle_rejects_version_mismatch(tmp_path, quick_bundle):
    from presetsel.regression import BundleFormatError

    path = tmp_path / "bundle.json"
    save_bundle(quick_bundle, path)
    text = path.read_text().replace('"schema_version": 1', '"schema_version": 99')
    path.write_text(text)
    with pytest.raises(BundleFormatError, match="version"):
        load_bundle(path)


def test_default_specs_cover_all_families():
    specs = default_specs(seed=5)
    assert [s.family for s in specs] == list(FAMILIES)
    assert all(s.seed == 5 for s in specs)
