import pytest

from app.config import DEFAULT_SPLIT, Settings
from app.utils import Formatters, Validators


class TestValidators:
    @pytest.mark.parametrize("text, levels", [("l2,l3", (2, 3)), ("L4, L2", (2, 4)), ("3", (3,))])
    def test_parse_levels(self, text, levels):
        assert Validators.parse_levels(text) == levels

    @pytest.mark.parametrize("text", ["", "l5", "l2,l2", "x"])
    def test_invalid_levels(self, text):
        is_valid, error = Validators.validate_levels(text)
        assert not is_valid and error
        with pytest.raises(ValueError):
            Validators.parse_levels(text)

    @pytest.mark.parametrize("batch, ok", [(3, True), (128 - 2, True), (128, False), (0, False)])
    def test_batch_size(self, batch, ok):
        assert Validators.validate_batch_size(batch)[0] is ok

    def test_split(self):
        assert Validators.validate_split("0.8,0.1,0.1")[0]
        assert not Validators.validate_split("0.8;0.2")[0]
        assert not Validators.validate_split("0,0,0")[0]
        assert not Validators.validate_split("1..2,0,0")[0]

    def test_positive(self):
        assert Validators.validate_positive(3, "Эпохи") == (True, None)
        is_valid, error = Validators.validate_positive(0, "Эпохи")
        assert not is_valid and error.startswith("Эпохи")


class TestFormatters:
    def test_numbers(self):
        assert Formatters.format_number(562_162) == "562.2K"
        assert Formatters.format_number(930_000_000) == "930.00M"
        assert Formatters.format_number(12) == "12"

    def test_shape_and_progress(self):
        assert Formatters.format_shape((96, 40, 15)) == "96×40×15"
        assert Formatters.format_progress_bar(5, 10, length=4) == "██░░"
        assert Formatters.format_duration(0.25) == "250 мс"

    def test_percent(self):
        assert Formatters.format_percent(0.8) == "80.00%"
        assert Formatters.format_percent(1.0) == "100.00%"


class TestSettings:
    def test_split_fractions_normalized(self):
        assert Settings(SPLIT_FRACTIONS="2,1,1").SPLIT_FRACTIONS == (0.5, 0.25, 0.25)

    @pytest.mark.parametrize("text", ["", "0.8;0.2", "0,0,0", "-1,1,1"])
    def test_invalid_split_falls_back(self, text):
        assert Settings(SPLIT_FRACTIONS=text).SPLIT_FRACTIONS == DEFAULT_SPLIT
