import numpy as np
import pytest

from app.autograd import Tensor
from app.exceptions import ContractError, ShapeError
from app.network import (
    AffineParams,
    SamplingGrid,
    affine_grid,
    bilinear_sample,
    constrain_params,
    localization_forward,
    rotation_l1_penalty,
)
from app.network.stn import SCALE_FLOOR, lattice


def identity_params(batch):
    one, zero = Tensor(np.ones(batch)), Tensor(np.zeros(batch))
    return AffineParams(s_w=one, r_w=zero, t_w=zero, r_h=zero, s_h=one, t_h=zero)


class TestConstraints:
    def test_zero_raw_is_half_scale_center(self, float64):
        params = constrain_params(Tensor(np.zeros((2, 6))))
        values = params.values()
        np.testing.assert_allclose(values["s_w"], 0.5)
        np.testing.assert_allclose(values["s_h"], 0.5)
        for name in ("r_w", "r_h", "t_w", "t_h"):
            np.testing.assert_allclose(values[name], 0.0)

    def test_scale_floor(self, float64):
        values = constrain_params(Tensor(-np.ones((1, 6)))).values()
        assert values["s_w"][0] == pytest.approx(SCALE_FLOOR)

    def test_corners_stay_inside(self, float64):
        rng = np.random.default_rng(0)
        raw = np.tanh(rng.normal(0.0, 3.0, size=(10_000, 6)))
        raw[:4] = [[1, 1, 1, 1, 1, 1], [-1, -1, -1, -1, -1, -1], [1, -1, 1, -1, 1, -1], [-1, 1, -1, 1, -1, 1]]
        corners = constrain_params(Tensor(raw)).corners()
        assert np.all(np.abs(corners) <= 1.0 + 1e-12)

    def test_rotation_clamped_by_scale(self, float64):
        values = constrain_params(Tensor(np.array([[1.0, 1.0, 0.0, 1.0, 1.0, 0.0]]))).values()
        assert values["r_w"][0] == pytest.approx(0.0)
        assert values["r_h"][0] == pytest.approx(0.0)

    def test_wrong_width(self, float64):
        with pytest.raises(ShapeError):
            constrain_params(Tensor(np.zeros((2, 5))))


class TestGrid:
    def test_lattice(self):
        np.testing.assert_array_equal(lattice(1), [0.0])
        np.testing.assert_allclose(lattice(3), [-1.0, 0.0, 1.0])
        with pytest.raises(ContractError):
            lattice(0)

    def test_identity_grid_is_lattice(self, float64):
        coords = affine_grid(identity_params(1), 3, 4).coords.data[0]
        np.testing.assert_allclose(coords[..., 0], np.tile(lattice(4), (3, 1)))
        np.testing.assert_allclose(coords[..., 1], np.tile(lattice(3)[:, None], (1, 4)))

    def test_identity_sampling_reproduces_input(self, float64, rng):
        source = rng.normal(size=(2, 3, 7, 5))
        out = bilinear_sample(Tensor(source), affine_grid(identity_params(2), 7, 5))
        np.testing.assert_allclose(out.data, source, atol=1e-12)

    def test_center_of_two_by_two(self, float64):
        source = Tensor(np.array([[[[0.0, 1.0], [2.0, 3.0]]]]))
        grid = SamplingGrid(Tensor(np.zeros((1, 1, 1, 2))))
        assert bilinear_sample(source, grid).data.item() == pytest.approx(1.5)

    def test_out_of_bounds_rejected(self, float64):
        grid = SamplingGrid(Tensor(np.full((1, 1, 1, 2), 1.5)))
        with pytest.raises(ContractError):
            bilinear_sample(Tensor(np.zeros((1, 1, 3, 3))), grid)

    def test_tiny_overshoot_tolerated(self, float64):
        grid = SamplingGrid(Tensor(np.full((1, 1, 1, 2), 1.0 + 1e-9)))
        source = np.arange(9.0).reshape(1, 1, 3, 3)
        assert bilinear_sample(Tensor(source), grid).data.item() == pytest.approx(8.0)

    def test_grid_shape_validated(self, float64):
        with pytest.raises(ShapeError):
            SamplingGrid(Tensor(np.zeros((1, 2, 2, 3))))


class TestLocalization:
    def test_output_range(self, network, rng):
        region = Tensor(rng.normal(size=(4, 96, 8, 6)))
        raw = localization_forward(region, network.weights, 2)
        assert raw.shape == (4, 6)
        assert np.all(np.abs(raw.data) < 1.0)

    def test_zero_head_gives_center_crop(self, float64, config, rng):
        from app.network import SiameseNetwork

        fresh = SiameseNetwork.create(config, seed=0).train()
        raw = localization_forward(Tensor(rng.normal(size=(2, 96, 8, 6))), fresh.weights, 2)
        np.testing.assert_array_equal(raw.data, 0.0)

    def test_channel_check(self, network):
        with pytest.raises(ShapeError):
            localization_forward(Tensor(np.zeros((2, 32, 8, 6))), network.weights, 2)

    def test_rotation_penalty(self, float64):
        params = constrain_params(Tensor(np.array([[0.0, 0.4, 0.0, -0.8, 0.0, 0.0]])))
        penalty = rotation_l1_penalty([params, params], lambda_rot=0.01)
        assert penalty.item() == pytest.approx(0.01 * 2 * (0.1 + 0.2))


def naive_sample(source, coords):
    n, c, h, w = source.shape
    _, oh, ow, _ = coords.shape
    out = np.zeros((n, c, oh, ow))
    for b in range(n):
        for i in range(oh):
            for j in range(ow):
                x = (coords[b, i, j, 0] + 1) * (w - 1) / 2
                y = (coords[b, i, j, 1] + 1) * (h - 1) / 2
                x0 = min(int(np.floor(x)), max(w - 2, 0))
                y0 = min(int(np.floor(y)), max(h - 2, 0))
                x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
                ax, ay = x - x0, y - y0
                out[b, :, i, j] = (
                    source[b, :, y0, x0] * (1 - ax) * (1 - ay) + source[b, :, y0, x1] * ax * (1 - ay)
                    + source[b, :, y1, x0] * (1 - ax) * ay + source[b, :, y1, x1] * ax * ay
                )
    return out


class TestSamplingOracle:
    def test_many_small_instances(self, float64):
        rng = np.random.default_rng(7)
        for _ in range(200):
            source = rng.normal(size=(2, 2, rng.integers(2, 7), rng.integers(2, 7)))
            coords = rng.uniform(-1.0, 1.0, size=(2, rng.integers(1, 4), rng.integers(1, 4), 2))
            out = bilinear_sample(Tensor(source), SamplingGrid(Tensor(coords)))
            np.testing.assert_allclose(out.data, naive_sample(source, coords), atol=1e-10)
