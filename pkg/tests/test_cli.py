import numpy as np
import pandas as pd
import pytest

from app.data import generate_identities, load_dataset, render_view, write_ppm
from app.handlers import run_cli, setup_parser
from app.network import ModelConfig, SiameseNetwork, count_params_closed_form
from app.services import CheckpointService, EvaluationService


@pytest.fixture
def checkpoint(network, tmp_path):
    return CheckpointService.save(network, tmp_path / "micro.ckpt")


@pytest.fixture
def image_pair(tmp_path):
    person = generate_identities(1, seed=0)[0]
    a = write_ppm(tmp_path / "a.ppm", render_view(person, 1))
    b = write_ppm(tmp_path / "b.ppm", render_view(person, 2))
    return a, b


class TestParser:
    def test_all_commands_registered(self):
        parser = setup_parser()
        commands = parser._subparsers._group_actions[0].choices
        assert set(commands) == {
            "gen-data", "train", "eval", "infer", "gradcheck", "bench", "export-simmaps", "ablate",
        }

    @pytest.mark.parametrize("argv", [
        [],
        ["unknown"],
        ["bench", "--levels", "l5"],
        ["train", "--data", "d", "--out", "m.ckpt", "--batch", "7"],
        ["train", "--data", "d", "--out", "m.ckpt", "--epochs", "0"],
        ["infer", "--ckpt", "m.ckpt", "only_one.ppm"],
    ])
    def test_usage_errors(self, argv):
        assert run_cli(argv) == 2

    def test_help(self, capsys):
        assert run_cli(["--help"]) == 0
        assert "export-simmaps" in capsys.readouterr().out


class TestCommands:
    def test_bench(self, capsys):
        assert run_cli(["bench", "--levels", "l2,l3", "-v"]) == 0
        out = capsys.readouterr().out
        assert f"params={count_params_closed_form(ModelConfig())}" in out
        assert "shape.x2=96×40×15" in out
        assert "shape.fused=1152×10×4" in out

    def test_gen_data(self, tmp_path, capsys):
        out_dir = tmp_path / "data"
        argv = ["gen-data", "--identities", "3", "--views-per-camera", "2", "--cameras", "2", "--out", str(out_dir)]
        assert run_cli(argv) == 0
        assert len(list(out_dir.glob("*/*.ppm"))) == 12
        assert "images=12" in capsys.readouterr().out

    def test_gradcheck_single(self, capsys):
        assert run_cli(["gradcheck", "--op", "dense"]) == 0
        assert "dense" in capsys.readouterr().out

    def test_gradcheck_unknown(self):
        assert run_cli(["gradcheck", "--op", "nope"]) == 2

    def test_infer(self, checkpoint, image_pair, capsys):
        assert run_cli(["infer", "--ckpt", str(checkpoint), str(image_pair[0]), str(image_pair[1])]) == 0
        out = capsys.readouterr().out
        assert "simi_score=" in out and "match_probability=" in out

    def test_export_simmaps(self, checkpoint, image_pair, tmp_path):
        out_dir = tmp_path / "maps"
        argv = ["export-simmaps", "--ckpt", str(checkpoint), str(image_pair[0]), str(image_pair[1]), "--out", str(out_dir)]
        assert run_cli(argv) == 0
        assert len(list(out_dir.glob("*.pgm"))) == 2 * 6 * 3 + 3

    def test_eval_report(self, checkpoint, dataset_root, tmp_path):
        report = tmp_path / "report.csv"
        argv = ["eval", "--ckpt", str(checkpoint), "--data", str(dataset_root), "--report", str(report)]
        assert run_cli(argv) == 0
        table = pd.read_csv(report)
        assert list(table.columns) == ["config", "seed", "rank1", "rank5", "rank10", "params", "flops"]
        assert table.loc[0, "config"] == "L2+L3"
        assert np.all((table[["rank1", "rank5", "rank10"]] >= 0) & (table[["rank1", "rank5", "rank10"]] <= 1))

    def test_eval_repeats_training_split(self, network, dataset_root, tmp_path, monkeypatch):
        config = network.config.model_copy(update={"split_seed": 1, "split_fractions": (0.5, 0.0, 0.5)})
        path = CheckpointService.save(SiameseNetwork(config, network.weights), tmp_path / "seeded.ckpt")
        evaluated = []
        original = EvaluationService.evaluate

        def recording(service, split, part="test", seed=0):
            evaluated.append(split)
            return original(service, split, part, seed)

        monkeypatch.setattr(EvaluationService, "evaluate", recording)
        assert run_cli(["eval", "--ckpt", str(path), "--data", str(dataset_root), "--seed", "9"]) == 0

        trained = load_dataset(dataset_root, (0.5, 0.0, 0.5), seed=1)
        assert sorted(evaluated[0].test) == sorted(trained.test)
        assert not set(evaluated[0].test) & set(trained.train)

    def test_runtime_errors_exit_one(self, tmp_path, image_pair):
        assert run_cli(["infer", "--ckpt", str(tmp_path / "absent.ckpt"), *map(str, image_pair)]) == 1
        broken = tmp_path / "broken.ckpt"
        broken.write_bytes(b"MLSC\x01\x00")
        assert run_cli(["infer", "--ckpt", str(broken), *map(str, image_pair)]) == 1
        argv = ["train", "--data", str(tmp_path / "none"), "--out", str(tmp_path / "m.ckpt")]
        assert run_cli(argv) == 1

    def test_infer_identical_images(self, checkpoint, image_pair, capsys):
        path = str(image_pair[0])
        assert run_cli(["infer", "--ckpt", str(checkpoint), path, path]) == 0
        fields = dict(item.split("=") for item in capsys.readouterr().out.split())
        assert float(fields["simi_score"]) > 0.2 / 1e-4 * 0.9
