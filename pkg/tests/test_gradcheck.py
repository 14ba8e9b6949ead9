import pytest

from app.services import GradcheckService

ELEMENTARY = [
    "conv2d", "depthwise_corr", "bilinear_sample", "affine_grid", "batch_norm",
    "dense", "maxpool", "gap", "softmax_nll", "contrastive",
]


class TestGradcheck:
    @pytest.mark.parametrize("name", ELEMENTARY)
    def test_elementary(self, name):
        table = GradcheckService().run([name])
        assert not table.empty
        assert table["passed"].all(), table.to_string()

    def test_localization_chain(self):
        table = GradcheckService().run(["localization"])
        assert table["passed"].all(), table.to_string()

    @pytest.mark.slow
    def test_full_model(self):
        table = GradcheckService().run(["combined"])
        assert len(table) == 5
        assert table["passed"].all(), table.to_string()

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            GradcheckService().run(["nope"])

    def test_names(self):
        assert set(ELEMENTARY) | {"localization", "combined"} == set(GradcheckService().names)
