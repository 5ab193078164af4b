import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eegseg.classifiers import (ClassifierSpec, EvalReport, FeatureSet, GbtParams, LabeledSet,
                                MlpConfig, MlpModel, Protocol, TrainingError, derive_seed,
                                evaluate, load_model, mlp_gradient_check, prepare_fold,
                                repeated_eval, save_model, stratified_split, train_gbt,
                                train_knn, train_mlp)
from eegseg.classifiers.gbt import _sigmoid
from eegseg.classifiers.mlp import STEW_HIDDEN, forward, gradients, softmax
from oracles import knn_naive


def _blobs(n_per_class=50, n_classes=3, dim=4, sep=6.0, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_classes, dim)) * sep
    x = np.concatenate([c + rng.standard_normal((n_per_class, dim)) for c in centers])
    y = np.repeat(np.arange(n_classes), n_per_class)
    return LabeledSet(x, y)


# ---------------------------------------------------------------------------
# LabeledSet / evaluate


def test_labeled_set_invariants():
    with pytest.raises(ValueError):
        LabeledSet(np.array([[np.nan, 1.0], [0.0, 1.0]]), [0, 1])
    with pytest.raises(ValueError):
        LabeledSet(np.zeros((2, 2)), [0, 0], n_classes=1)
    with pytest.raises(ValueError):
        LabeledSet(np.zeros((2, 2)), [0, 3], n_classes=2)


class _Fixed:
    kind = "fixed"

    def __init__(self, out, dim=1):
        self.out = np.asarray(out)
        self.input_dim = dim

    def predict(self, x):
        return self.out


def test_evaluate_counts():
    test = LabeledSet(np.zeros((10, 1)), [0, 1] * 5)
    assert evaluate(_Fixed([0, 1] * 5), test) == 1.0
    assert evaluate(_Fixed([1, 0] * 5), test) == 0.0
    assert evaluate(_Fixed([0, 1] * 3 + [1, 0, 1, 1]), test) == pytest.approx(0.7)


def test_evaluate_dimension_mismatch():
    model = train_knn(_blobs(dim=4), 3)
    with pytest.raises(ValueError, match="dimension mismatch"):
        evaluate(model, LabeledSet(np.zeros((4, 3)), [0, 1, 2, 0]))
    with pytest.raises(ValueError, match="dimension mismatch"):
        model.predict(np.zeros((2, 5)))


# ---------------------------------------------------------------------------
# KNN


def test_knn_single_point():
    train = LabeledSet(np.array([[1.0, 2.0]]), [1], n_classes=2)
    model = train_knn(train, 1)
    assert list(model.predict(np.random.default_rng(0).standard_normal((5, 2)))) == [1] * 5


def test_knn_k1_recovers_training_labels():
    data = _blobs(sep=0.5)
    assert evaluate(train_knn(data, 1), data) == 1.0


def test_knn_k_range():
    data = _blobs(n_per_class=3)
    with pytest.raises(ValueError):
        train_knn(data, 0)
    with pytest.raises(ValueError):
        train_knn(data, len(data) + 1)


def test_knn_matches_oracle_two_class():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((40, 3))
    y = (rng.uniform(size=40) < 0.5).astype(int)
    model = train_knn(LabeledSet(x, y, n_classes=2), 5)
    queries = rng.standard_normal((60, 3))
    expected = [knn_naive(x.tolist(), y.tolist(), q.tolist(), 5, 2) for q in queries]
    assert list(model.predict(queries)) == expected


def test_knn_tie_breaking():
    # k=2, one neighbour per class: the closer class wins
    x = np.array([[0.0], [3.0]])
    model = train_knn(LabeledSet(x, [1, 0]), 2)
    assert model.predict([[1.0]])[0] == 1
    assert model.predict([[2.0]])[0] == 0
    # exact tie in votes and mean distance: lowest class index
    assert model.predict([[1.5]])[0] == 0


def test_knn_oracle_with_integer_ties():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.integers(0, 3, size=(30, 2)).astype(float)
        y = rng.integers(0, 3, size=30)
        if len(set(y)) < 2:
            continue
        k = int(rng.integers(1, 8))
        model = train_knn(LabeledSet(x, y, n_classes=3), k)
        q = rng.integers(0, 3, size=(10, 2)).astype(float)
        assert list(model.predict(q)) == [knn_naive(x.tolist(), y.tolist(), r.tolist(), k, 3)
                                          for r in q]


# ---------------------------------------------------------------------------
# MLP


def test_softmax_rows():
    z = np.random.default_rng(3).standard_normal((1000, 7)) * 20
    p = softmax(z)
    assert np.max(np.abs(p.sum(axis=1) - 1.0)) < 1e-9
    assert np.all((p >= 0) & (p <= 1))


def test_forward_hand_computed():
    w1 = np.array([[1.0, -1.0], [0.5, 2.0]])
    b1 = np.array([0.0, 0.5])
    w2 = np.array([[1.0, 0.0], [-1.0, 1.0]])
    b2 = np.array([0.1, -0.1])
    x = np.array([[1.0, 2.0]])
    # hidden: relu([1 + 1, -1 + 4 + 0.5]) = [2, 3.5]; logits [2 - 3.5 + .1, 3.5 - .1]
    z = np.array([-1.4, 3.4])
    expected = np.exp(z) / np.exp(z).sum()
    probs = forward([w1, w2], [b1, b2], x)[-1][0]
    assert np.max(np.abs(probs - expected)) < 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_check(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((5, 2))
    y = rng.integers(0, 2, size=5)
    assert mlp_gradient_check((2, 3, 2), x, y, seed=seed) < 1e-4


def test_zero_weight_bias_gradient():
    x = np.array([[1.0, -1.0], [-1.0, 1.0]])
    y = np.array([0, 1])
    weights = [np.zeros((2, 3)), np.zeros((3, 2))]
    biases = [np.zeros(3), np.zeros(2)]
    _, gw, gb = gradients(weights, biases, x, y)
    probs = np.full((2, 2), 0.5)
    onehot = np.eye(2)[y]
    assert np.array_equal(gb[-1], (probs - onehot).mean(axis=0))


def test_mlp_separable_reaches_full_accuracy():
    data = _blobs(n_per_class=100, n_classes=2, dim=2, sep=4.0, seed=5)
    model = train_mlp(data, MlpConfig(hidden_sizes=(8,), epochs=200, seed=0))
    assert evaluate(model, data) == 1.0
    p = model.predict_proba(data.vectors)
    assert np.max(np.abs(p.sum(axis=1) - 1)) < 1e-9


def test_mlp_deterministic():
    data = _blobs(n_per_class=20)
    cfg = MlpConfig(hidden_sizes=(6, 5), epochs=5, seed=11)
    a, b = train_mlp(data, cfg), train_mlp(data, cfg)
    assert all(np.array_equal(u, v) for u, v in zip(a.weights + a.biases, b.weights + b.biases))


def test_mlp_config():
    assert MlpConfig().hidden_sizes == STEW_HIDDEN == (200, 150, 100, 75)
    assert MlpConfig().layer_sizes(48)[-1] == 48
    assert MlpConfig().epochs == 1000 and MlpConfig().batch_size == 32
    with pytest.raises(ValueError):
        MlpConfig(hidden_sizes=(0,))


def test_mlp_divergence_raises():
    # inputs near the float limit overflow the first layer
    data = LabeledSet(np.full((6, 50), 1e308), [0, 1, 2] * 2)
    with pytest.raises(TrainingError, match="non-finite"):
        train_mlp(data, MlpConfig(hidden_sizes=(8,), epochs=2))


# ---------------------------------------------------------------------------
# GBT


def test_gbt_stump():
    x = np.linspace(-1, 1, 40)[:, None]
    data = LabeledSet(x, (x[:, 0] > 0).astype(int))
    model = train_gbt(data, GbtParams(n_trees=1, max_depth=1, learning_rate=1.0))
    assert evaluate(model, data) == 1.0


def test_gbt_logloss_decreases():
    data = _blobs(n_per_class=30, n_classes=2, sep=3.0, seed=4)
    model = train_gbt(data, GbtParams(n_trees=20, max_depth=2))
    target = (data.labels[:, None] == np.arange(2)).astype(float)
    losses = []
    for t in range(1, 21):
        p = np.clip(_sigmoid(model.decision_function(data.vectors, t)), 1e-15, 1 - 1e-15)
        losses.append(-np.mean(target * np.log(p) + (1 - target) * np.log(1 - p)))
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_gbt_xor():
    rng = np.random.default_rng(6)
    x = rng.uniform(-1, 1, size=(200, 2))
    y = ((x[:, 0] > 0) ^ (x[:, 1] > 0)).astype(int)
    model = train_gbt(LabeledSet(x, y), GbtParams(n_trees=50, max_depth=2, learning_rate=0.5))
    assert evaluate(model, LabeledSet(x, y)) == 1.0


def test_gbt_single_class_rejected():
    with pytest.raises(ValueError, match="single class"):
        train_gbt(LabeledSet(np.zeros((4, 1)), [0] * 4, n_classes=2))


def test_gbt_deterministic_with_subsample():
    data = _blobs(n_per_class=20)
    p = GbtParams(n_trees=5, subsample=0.6, seed=3)
    a, b = train_gbt(data, p), train_gbt(data, p)
    assert np.array_equal(a.decision_function(data.vectors), b.decision_function(data.vectors))


# ---------------------------------------------------------------------------
# shared contract


@pytest.mark.parametrize("spec", [
    ClassifierSpec("knn", {"k": 3}),
    ClassifierSpec("mlp", {"hidden_sizes": [8], "epochs": 30}),
    ClassifierSpec("gbt", {"n_trees": 10}),
])
def test_model_roundtrip(tmp_path, spec):
    data = _blobs(n_per_class=15)
    model = spec.train(data, seed=1)
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert back.kind == model.kind
    assert np.array_equal(back.predict(data.vectors), model.predict(data.vectors))


@pytest.mark.parametrize("spec", [
    ClassifierSpec("knn", {"k": 5}),
    ClassifierSpec("mlp", {"hidden_sizes": [16], "epochs": 100}),
    ClassifierSpec("gbt", {"n_trees": 20}),
])
def test_label_permutation_equivariance(spec):
    data = _blobs(n_per_class=30, n_classes=4, sep=5.0, seed=8)
    perm = np.array([2, 0, 3, 1])
    permuted = LabeledSet(data.vectors, perm[data.labels], n_classes=4)
    queries = _blobs(n_per_class=10, n_classes=4, sep=5.0, seed=8).vectors
    base = spec.train(data, 0).predict(queries)
    assert np.array_equal(spec.train(permuted, 0).predict(queries), perm[base])


# ---------------------------------------------------------------------------
# protocol


def _features(n_subjects=4, per_subject=10, dim=5, seed=0, nan_frac=0.0):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_subjects, dim)) * 3
    x = np.concatenate([c + rng.standard_normal((per_subject, dim)) for c in centers])
    x[rng.uniform(size=x.shape) < nan_frac] = np.nan
    ids = [f"s{i}" for i in range(n_subjects) for _ in range(per_subject)]
    return FeatureSet.from_subjects(x, ids)


def test_stratified_split():
    labels = np.repeat(np.arange(3), [10, 4, 2])
    tr, te = stratified_split(labels, 0.7, np.random.default_rng(0))
    assert len(np.intersect1d(tr, te)) == 0 and len(tr) + len(te) == 16
    for c, n in zip(range(3), (10, 4, 2)):
        assert np.sum(labels[tr] == c) == min(max(round(0.7 * n), 1), n - 1)
        assert np.sum(labels[te] == c) >= 1
    with pytest.raises(ValueError, match="need >= 2"):
        stratified_split(np.array([0, 0, 1]), 0.7, np.random.default_rng(0))


def test_prepare_fold_uses_train_statistics_only():
    feats = _features(nan_frac=0.1)
    tr, te = stratified_split(feats.labels, 0.7, np.random.default_rng(1))
    train, test = prepare_fold(feats, tr, te)
    # corrupting test rows must not change the training fold
    corrupted = FeatureSet(feats.x.copy(), feats.labels, feats.label_names)
    corrupted.x[te] = 1e6
    train2, _ = prepare_fold(corrupted, tr, te)
    assert np.array_equal(train.vectors, train2.vectors)
    mean, std = train.standardization
    raw = feats.x[tr]
    assert np.allclose(mean, np.nanmean(raw, axis=0))
    assert np.all(np.isfinite(train.vectors)) and np.all(np.isfinite(test.vectors))
    assert np.allclose(train.vectors.mean(axis=0), 0, atol=1e-12)


def test_prepare_fold_constant_and_all_missing_columns():
    feats = _features()
    feats.x[:, 0] = 7.0
    feats.x[:, 1] = np.nan
    tr, te = stratified_split(feats.labels, 0.7, np.random.default_rng(2))
    train, test = prepare_fold(feats, tr, te)
    assert np.all(train.vectors[:, :2] == 0) and np.all(test.vectors[:, :2] == 0)


def test_repeated_eval_contract():
    feats = _features()
    spec = ClassifierSpec("knn", {"k": 3})
    a = repeated_eval(feats, spec, Protocol(), master_seed=5)
    b = repeated_eval(feats, spec, Protocol(), master_seed=5)
    assert a == b and len(a.accuracies) == 3
    assert all(0 <= v <= 1 for v in a.accuracies) and a.accuracy_std >= 0


def test_eval_report_arithmetic():
    r = EvalReport((0.8, 0.9, 1.0))
    assert r.accuracy_mean == pytest.approx(0.9)
    assert r.accuracy_std == pytest.approx(0.1)
    assert EvalReport((0.5,)).accuracy_std == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 30), st.sampled_from(["knn", "mlp", "gbt"]),
       st.integers(0, 5))
def test_derive_seed_properties(master, dur, label, rep):
    s = derive_seed(master, dur, label, rep)
    assert s == derive_seed(master, dur, label, rep)
    assert 0 <= s < 2 ** 63
    assert s != derive_seed(master, dur, label, rep + 1)


def test_spec_roundtrip_and_validation():
    spec = ClassifierSpec("mlp", {"hidden_sizes": [4, 3], "epochs": 7}, name="small")
    assert ClassifierSpec.from_dict(spec.to_dict()) == spec
    assert spec.label == "small"
    with pytest.raises(ValueError):
        ClassifierSpec("svm")


def test_mlp_model_probabilities_valid():
    data = _blobs(n_per_class=10)
    model = train_mlp(data, MlpConfig(hidden_sizes=(4,), epochs=3))
    assert isinstance(model, MlpModel)
    p = model.predict_proba(np.random.default_rng(0).standard_normal((1000, 4)) * 10)
    assert np.max(np.abs(p.sum(axis=1) - 1)) < 1e-9 and np.all((p >= 0) & (p <= 1))
