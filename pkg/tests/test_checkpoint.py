import struct
import zlib

import numpy as np
import pytest

from app.autograd import precision
from app.exceptions import (
    BadMagicError,
    ContractError,
    CrcMismatchError,
    UnknownTensorError,
    VersionMismatchError,
)
from app.network import ModelConfig, SiameseNetwork
from app.services import CheckpointService
from app.services.checkpoint_service import decode_checkpoint, encode_checkpoint
from app.services.gradcheck_service import micro_config


def resealed(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class TestFormat:
    def test_round_trip(self, network, tmp_path):
        path = CheckpointService.save(network, tmp_path / "model.ckpt")
        loaded = CheckpointService.load(path)
        assert loaded.config == network.config
        for name, tensor in network.weights.items():
            np.testing.assert_array_equal(loaded.weights[name].data, tensor.data.astype(np.float32))
        assert loaded.weights.bn("conv1").mode == "infer"

    def test_scores_survive_reload(self, network, tmp_path, rng):
        network.eval()
        config = network.config
        a = rng.uniform(size=(2, 3, config.input_height, config.input_width))
        b = rng.uniform(size=(2, 3, config.input_height, config.input_width))
        before, _ = network.score(a, b)
        loaded = CheckpointService.load(CheckpointService.save(network, tmp_path / "m.ckpt"))
        after, _ = loaded.score(a, b)
        np.testing.assert_allclose(after, before, rtol=1e-4)

    def test_header(self, network):
        data = encode_checkpoint(network.weights, network.config)
        assert data[:4] == b"MLSC"
        assert struct.unpack("<I", data[4:8])[0] == 1

    def test_bad_magic(self, network):
        data = encode_checkpoint(network.weights, network.config)
        with pytest.raises(BadMagicError):
            decode_checkpoint(b"NOPE" + data[4:])

    @pytest.mark.parametrize("keep", [3, 100, -1])
    def test_truncation(self, network, keep):
        data = encode_checkpoint(network.weights, network.config)
        with pytest.raises(CrcMismatchError):
            decode_checkpoint(data[:keep])

    def test_corrupted_byte(self, network):
        data = bytearray(encode_checkpoint(network.weights, network.config))
        data[len(data) // 2] ^= 0xFF
        with pytest.raises(CrcMismatchError):
            decode_checkpoint(bytes(data))

    def test_version(self, network):
        body = encode_checkpoint(network.weights, network.config)[:-4]
        patched = body[:4] + struct.pack("<I", 2) + body[8:]
        with pytest.raises(VersionMismatchError):
            decode_checkpoint(resealed(patched))

    def test_architecture_mismatch(self, float64, config, tmp_path):
        deeper = config.model_copy(update={"levels": (2, 3, 4)})
        path = CheckpointService.save(SiameseNetwork.create(deeper), tmp_path / "l4.ckpt")
        with pytest.raises(UnknownTensorError):
            CheckpointService.load(path, expected_config=config)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            CheckpointService.load(tmp_path / "absent.ckpt")

    def test_config_kv(self):
        config = ModelConfig(levels=(2, 4), use_stn=False, sampler_sizes={2: 7, 3: 5, 4: 2})
        assert ModelConfig.from_kv(config.to_kv()) == config
        with pytest.raises(ContractError):
            ModelConfig.from_kv("levels")


class TestDeterminism:
    def test_resave_is_byte_identical(self, network, tmp_path):
        first = CheckpointService.save(network, tmp_path / "a.ckpt")
        second = CheckpointService.save(CheckpointService.load(first), tmp_path / "b.ckpt")
        assert first.read_bytes() == second.read_bytes()

    def test_float32_scores_bit_exact(self, tmp_path):
        config = micro_config().model_copy(update={"precision": "float32"})
        rng = np.random.default_rng(7)
        a = rng.uniform(size=(3, 3, config.input_height, config.input_width))
        b = rng.uniform(size=(3, 3, config.input_height, config.input_width))
        with precision("float32"):
            network = SiameseNetwork.create(config, seed=2).eval()
            before, before_probs = network.score(a, b)
        loaded = CheckpointService.load(CheckpointService.save(network, tmp_path / "f32.ckpt"))
        with precision("float32"):
            after, after_probs = loaded.score(a, b)
        np.testing.assert_array_equal(after, before)
        np.testing.assert_array_equal(after_probs, before_probs)

    def test_training_split_is_stored(self, network, tmp_path):
        config = network.config.model_copy(update={"split_seed": 11, "split_fractions": (0.6, 0.2, 0.2)})
        path = CheckpointService.save(SiameseNetwork(config, network.weights), tmp_path / "split.ckpt")
        loaded = CheckpointService.load(path).config
        assert loaded.split_seed == 11
        assert loaded.split_fractions == (0.6, 0.2, 0.2)
