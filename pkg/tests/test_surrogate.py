import numpy as np
import pytest

from bwp.analysis import ROOM_AREAS, ROOM_ASPECT_RATIOS, cells_for
from bwp.core import QuadratureConfig
from bwp.geometry import RoomSpec
from bwp.surrogate import (
    Dataset,
    MlpModel,
    TrainConfig,
    TrainingDiverged,
    dumps_model,
    forward,
    generate_dataset,
    gradient_check,
    init_model,
    load_model,
    loads_model,
    save_model,
    train,
)


def _identity_norm(sizes, weights, biases):
    return MlpModel(sizes, weights, biases, np.zeros(sizes[0]), np.ones(sizes[0]),
                    np.zeros(sizes[-1]), np.ones(sizes[-1]))


def _toy_data(n=400, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 10, (n, 4))
    y = np.column_stack((np.sin(x[:, 0] / 3) + x[:, 2] / 5, 0.5 + 0.01 * x[:, 1] * x[:, 3]))
    return Dataset(x, y)


def test_default_shapes():
    m = init_model()
    assert m.sizes == (4, 30, 30, 2)
    assert [w.shape for w in m.weights] == [(4, 30), (30, 30), (30, 2)]
    assert m.n_params == 4 * 30 + 30 + 30 * 30 + 30 + 30 * 2 + 2


def test_zero_weights_give_denormalized_bias():
    sizes = (4, 5, 2)
    m = MlpModel(sizes, [np.zeros((4, 5)), np.zeros((5, 2))], [np.ones(5), np.array([0.5, -1.0])],
                 np.zeros(4), np.ones(4), np.array([10.0, 1.0]), np.array([2.0, 0.1]))
    out = forward(m, np.random.default_rng(1).normal(size=(7, 4)))
    np.testing.assert_allclose(out, np.tile([11.0, 0.9], (7, 1)))


def test_hand_computed_three_neuron_path():
    m = _identity_norm((1, 1, 1), [np.array([[3.0]]), np.array([[0.5]])], [np.array([-1.0]), np.array([1.0])])
    assert forward(m, [2.0])[0] == pytest.approx(0.5 * max(3 * 2 - 1, 0) + 1)  # 3.5
    assert forward(m, [-2.0])[0] == pytest.approx(1.0)  # rectifier closed


def test_positive_homogeneity_without_biases():
    m = init_model((4, 6, 6, 2), seed=3, zero_output=False)
    x = np.random.default_rng(2).normal(size=(5, 4))
    for alpha in (0.5, 2.0, 7.0):
        np.testing.assert_allclose(forward(m, alpha * x), alpha * forward(m, x), rtol=1e-12)


def test_shape_mismatch_rejected():
    m = init_model()
    with pytest.raises(ValueError):
        forward(m, np.zeros((3, 5)))
    with pytest.raises(ValueError):
        MlpModel((4, 2), [np.zeros((3, 2))], [np.zeros(2)], np.zeros(4), np.ones(4), np.zeros(2), np.ones(2))


def test_gradient_check_small_model():
    rng = np.random.default_rng(0)
    worst = 0.0
    for seed in range(5):
        m = init_model((4, 3, 3, 2), seed=seed, zero_output=False)
        for b in m.biases:
            b[:] = rng.normal(scale=0.3, size=b.shape)
        xn, yn = rng.normal(size=(10, 4)), rng.normal(size=(10, 2))
        worst = max(worst, gradient_check(m, xn, yn, step=1e-5))
    assert worst < 1e-4


def test_constant_targets_learned():
    x = np.random.default_rng(0).uniform(0, 5, (200, 4))
    data = Dataset(x, np.tile([42.0, 0.8], (200, 1)))
    model, report = train(data, TrainConfig(epochs=200, seed=1))
    assert max(report.val_rmse) < 1e-3


def test_training_reproducible():
    data = _toy_data()
    cfg = TrainConfig(epochs=20, seed=4)
    a, ra = train(data, cfg)
    b, rb = train(data, cfg)
    assert ra.losses == rb.losses
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_array_equal(wa, wb)
    c, _ = train(data, TrainConfig(epochs=20, seed=5))
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_training_reduces_loss():
    _, report = train(_toy_data(), TrainConfig(epochs=60, seed=0))
    assert report.losses[-1] < 0.2 * report.losses[0]
    assert report.n_train + report.n_val == 400


def test_divergence_aborts():
    with np.errstate(all="ignore"):
        with pytest.raises(TrainingDiverged):
            train(_toy_data(), TrainConfig(epochs=50, learning_rate=50.0, momentum=0.99))


@pytest.mark.parametrize("kw", [dict(learning_rate=0), dict(batch_size=0), dict(epochs=0),
                                dict(val_fraction=0.0), dict(val_fraction=1.0), dict(momentum=1.0)])
def test_train_config_validation(kw):
    with pytest.raises(ValueError):
        TrainConfig(**kw)


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        train(Dataset(np.zeros((0, 4)), np.zeros((0, 2))))


def test_save_load_bit_identical(tmp_path):
    model, _ = train(_toy_data(), TrainConfig(epochs=5))
    path = tmp_path / "m.mlp"
    save_model(model, path)
    back = load_model(path)
    x = np.random.default_rng(9).uniform(0, 10, (50, 4))
    np.testing.assert_array_equal(forward(back, x), forward(model, x))
    assert dumps_model(back) == dumps_model(model)
    assert path.read_text().splitlines()[0] == "bwp-mlp v1"


@pytest.mark.parametrize("text", ["", "bwp-mlp v2\n", "bwp-mlp v1\nsizes 1 1\nweights 0\n1 2\n"])
def test_malformed_model_rejected(text):
    with pytest.raises(ValueError):
        loads_model(text)


def test_one_cell_room_gives_one_row(sc28):
    data = generate_dataset(scenario=sc28, rooms=[RoomSpec(1.0, 1.0)], resolution=1.0, min_cells=1,
                            quad=QuadratureConfig(n_theta=64))
    assert len(data) == 1
    np.testing.assert_allclose(data.inputs[0], [0.5, 0.5, 1.0, 1.0])


def test_dataset_rows_positive_and_sized(sc6):
    rooms = [RoomSpec.from_area(a, ar) for a in ROOM_AREAS[:2] for ar in ROOM_ASPECT_RATIOS[:2]]
    data = generate_dataset(scenario=sc6, rooms=rooms, resolution=0.5, quad=QuadratureConfig(n_theta=128))
    assert np.all(data.targets > 0)
    expected = sum(np.prod(cells_for(r.width, r.length, 0.5, 100)) for r in rooms)
    assert len(data) == expected


def test_fig3_dataset_row_count():
    rooms = [RoomSpec.from_area(a, ar) for a in ROOM_AREAS for ar in ROOM_ASPECT_RATIOS]
    total = sum(np.prod(cells_for(r.width, r.length, 0.5, 100)) for r in rooms)
    assert 9000 < total < 11000  # about (20 + 40 + 60 + 80 + 100) * 8 * 4


def test_generate_dataset_requires_scenario():
    with pytest.raises(ValueError):
        generate_dataset()


def test_untrained_model_predicts_output_mean():
    m = init_model()
    m.y_mean[:] = [30.0, 0.9]
    out = forward(m, np.random.default_rng(4).normal(size=(6, 4)))
    np.testing.assert_array_equal(out, np.tile([30.0, 0.9], (6, 1)))
