import numpy as np
import pytest

from app.data import load_dataset, make_pairs, write_synthetic_dataset
from app.nn import Adam
from app.services import EvaluationService, TrainingService, ablation_grid, direction_summary, run_ablation
from app.services.evaluation_service import EXPECTED_DIRECTIONS
from app.services.training_service import epoch_seed


def micro_overrides(config):
    return {"sampler_sizes": config.sampler_sizes, "precision": "float64"}


class TestTrainingStep:
    def test_step_updates_parameters(self, network, split):
        optimizer = Adam(network.parameters(), lr=0.001)
        batch = next(make_pairs(split, epoch_seed=0, batch_size=6))
        before = {name: t.data.copy() for name, t in network.parameters().items()}
        loss = TrainingService.train_step(network, optimizer, batch)
        assert np.isfinite(loss) and loss > 0
        assert not np.array_equal(before["conv1.weight"], network.weights["conv1.weight"].data)
        assert not np.array_equal(before["loc2.fc.weight"], network.weights["loc2.fc.weight"].data)
        assert optimizer.state.step == 1

    def test_config_takes_train_statistics(self, split, config):
        built = TrainingService(split).build_config(**micro_overrides(config))
        assert (built.input_height, built.input_width) == (config.input_height, config.input_width)
        assert all(0.0 < m < 1.0 for m in built.pixel_mean)

    def test_config_records_training_split(self, dataset_root, config):
        split = load_dataset(
            dataset_root, (0.5, 0.25, 0.25), seed=4,
            image_size=(config.input_height, config.input_width),
        )
        built = TrainingService(split).build_config(**micro_overrides(config))
        assert built.split_seed == 4
        assert built.split_fractions == (0.5, 0.25, 0.25)

    def test_epoch_seeds(self):
        assert epoch_seed(0, 1) == epoch_seed(0, 1)
        assert epoch_seed(0, 1) != epoch_seed(0, 2)


@pytest.mark.slow
class TestTrainingRuns:
    def test_reproducible_curve(self, split, config, tmp_path):
        trainer = TrainingService(split, epochs=2, batch_size=6, seed=3)
        first = trainer.train(trainer.build_config(**micro_overrides(config)))
        second = trainer.train(trainer.build_config(**micro_overrides(config)))
        assert len(first.epoch_losses) == 2
        assert np.all(np.isfinite(first.curve["loss"]))
        np.testing.assert_array_equal(first.curve["loss"], second.curve["loss"])

        first.save_curve(tmp_path / "curve.csv")
        assert (tmp_path / "curve.csv").read_text().startswith("epoch,step,loss")

        curve = EvaluationService(first.network).evaluate(split, "test")
        assert curve.accuracies[-1] == 1.0

    def test_ablation_report(self, split, config):
        grid = [
            {"levels": (2,), **micro_overrides(config)},
            {"levels": (2, 3), **micro_overrides(config)},
        ]
        report = run_ablation(grid, split, seeds=[0, 1], epochs=1, batch_size=6)
        assert len(report) == 4
        assert set(report["config"]) == {"L2", "L2+L3"}
        assert report["params"].nunique() == 2

    def test_desk_scale_rank1(self, tmp_path):
        write_synthetic_dataset(tmp_path, identities=30, cameras=2, views_per_camera=4, seed=0)
        split = load_dataset(tmp_path, (2 / 3, 0.0, 1 / 3), seed=0)
        trainer = TrainingService(split, epochs=5, batch_size=24, seed=0)
        result = trainer.train(trainer.build_config(levels=(2, 3)))
        curve = EvaluationService(result.network).evaluate(split, "test")
        assert curve.gallery_size == 10
        assert curve.rank(1) >= 0.8

    def test_first_epoch_lowers_loss(self, split, config):
        # Сглаживание: среднее первой и последней трети шагов эпохи
        decreased = 0
        for seed in range(5):
            trainer = TrainingService(split, epochs=1, batch_size=6, lr=0.001, seed=seed)
            losses = trainer.train(trainer.build_config(**micro_overrides(config))).curve["loss"].to_numpy()
            third = max(len(losses) // 3, 1)
            decreased += losses[-third:].mean() < losses[:third].mean()
        assert decreased >= 3


@pytest.mark.slow
class TestAblationDirections:
    @pytest.fixture(scope="class")
    def desk_split(self, tmp_path_factory):
        root = tmp_path_factory.mktemp("desk")
        write_synthetic_dataset(root, identities=30, cameras=2, views_per_camera=4, seed=0)
        return load_dataset(root, (2 / 3, 0.0, 1 / 3), seed=0)

    @pytest.mark.parametrize("preset, required_wins", [("loss", 4), ("levels", 4), ("stn", 3)])
    def test_sign_test(self, desk_split, preset, required_wins):
        grid = ablation_grid(preset)
        if preset == "levels":
            grid = [cell for cell in grid if cell["levels"] in ((2,), (3,), (2, 3))]
        report = run_ablation(grid, desk_split, seeds=range(5), epochs=5, batch_size=24)
        summary = direction_summary(report, EXPECTED_DIRECTIONS[preset])
        assert len(summary) == len(EXPECTED_DIRECTIONS[preset])
        assert (summary["seeds"] == 5).all()
        assert (summary["wins"] >= required_wins).all(), summary.to_string(index=False)
