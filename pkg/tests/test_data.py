import itertools
import threading

import numpy as np
import pytest

from app.data import (
    augment,
    build_single_shot,
    flip,
    generate_identities,
    load_dataset,
    make_pairs,
    prefetch,
    read_ppm,
    render_view,
    resize_bilinear,
    write_pgm,
    write_ppm,
    write_synthetic_dataset,
)
from app.data.synthetic import MANIFEST, hue_distance, rgb_to_hsv
from app.exceptions import ContractError, DatasetError


class TestImageIO:
    def test_ppm_round_trip(self, tmp_path, rng):
        image = rng.uniform(size=(3, 5, 4))
        path = write_ppm(tmp_path / "a.ppm", image)
        np.testing.assert_allclose(read_ppm(path), image, atol=0.5 / 255 + 1e-12)

    def test_header_comments(self, tmp_path):
        path = tmp_path / "c.ppm"
        path.write_bytes(b"P6\n# comment\n2 1\n# another\n255\n" + bytes([255, 0, 0, 0, 255, 0]))
        image = read_ppm(path)
        assert image.shape == (3, 1, 2)
        np.testing.assert_array_equal(image[:, 0, 0], [1.0, 0.0, 0.0])

    @pytest.mark.parametrize("content", [
        b"P3\n1 1\n255\n\x00\x00\x00",
        b"P6\n2 2\n255\n\x00\x00",
        b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00",
        b"P6\nx 1\n255\n\x00\x00\x00",
        b"P6\n1",
    ])
    def test_malformed(self, tmp_path, content):
        path = tmp_path / "bad.ppm"
        path.write_bytes(content)
        with pytest.raises(DatasetError) as error:
            read_ppm(path)
        assert error.value.path == str(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            read_ppm(tmp_path / "none.ppm")

    def test_pgm_normalization(self, tmp_path):
        data = write_pgm(tmp_path / "m.pgm", np.array([[1.0, 3.0]])).read_bytes()
        assert data == b"P5\n2 1\n255\n" + bytes([0, 255])
        flat = write_pgm(tmp_path / "z.pgm", np.full((2, 2), 4.0)).read_bytes()
        assert flat.endswith(bytes(4))

    def test_resize(self, rng):
        image = rng.uniform(size=(3, 8, 6))
        out = resize_bilinear(image, 16, 3)
        assert out.shape == (3, 16, 3)
        np.testing.assert_allclose(out[:, 0, 0], image[:, 0, 0])
        np.testing.assert_allclose(out[:, -1, -1], image[:, -1, -1])
        np.testing.assert_allclose(resize_bilinear(np.full((3, 4, 4), 0.3), 7, 5), 0.3)


class TestSynthetic:
    def test_identities_unique_and_reproducible(self):
        people = generate_identities(40, seed=3)
        assert len({p.attributes() for p in people}) == 40
        assert people == generate_identities(40, seed=3)

    def test_render_reproducible(self):
        person = generate_identities(1, seed=0)[0]
        np.testing.assert_array_equal(render_view(person, 11), render_view(person, 11))
        assert not np.array_equal(render_view(person, 11), render_view(person, 12))

    @pytest.mark.parametrize("camera_seed", range(6))
    def test_torso_hue(self, camera_seed):
        for person in generate_identities(8, seed=1):
            view = render_view(person, camera_seed)
            assert view.shape == (3, 160, 60)
            assert view.min() >= 0.0 and view.max() <= 1.0
            hue = rgb_to_hsv(view[:, 76:83, 28:33])[0]
            assert np.all(hue_distance(hue, person.torso_hue) < 15.0)

    def test_write_dataset(self, tmp_path):
        summary = write_synthetic_dataset(tmp_path, identities=3, cameras=2, views_per_camera=2, seed=0)
        assert summary == {"identities": 3, "images": 12}
        assert (tmp_path / "0002" / "c1_01.ppm").exists()
        assert len((tmp_path / MANIFEST).read_text(encoding="utf-8").splitlines()) == 3


class TestDataset:
    def test_split_disjoint(self, dataset_root):
        split = load_dataset(dataset_root, (0.5, 0.25, 0.25), seed=0)
        train, val, test = set(split.train), set(split.val), set(split.test)
        assert not (train & val or train & test or val & test)
        assert len(train | val | test) == 12
        assert all(len(records) == 4 for records in split.test.values())

    def test_split_reproducible(self, dataset_root):
        a = load_dataset(dataset_root, (0.5, 0.25, 0.25), seed=7)
        b = load_dataset(dataset_root, (0.5, 0.25, 0.25), seed=7)
        assert sorted(a.test) == sorted(b.test)

    def test_skips_malformed_entries(self, tmp_path):
        write_synthetic_dataset(tmp_path, identities=3, cameras=1, views_per_camera=2, seed=0)
        (tmp_path / "notes").mkdir()
        (tmp_path / "0000" / "readme.txt").write_text("x")
        single = tmp_path / "0099"
        single.mkdir()
        (tmp_path / "0000" / "c0_00.ppm").rename(single / "c0_00.ppm")

        split = load_dataset(tmp_path, (1.0, 0.0, 0.0), seed=0)
        assert split.report.skipped_count == 2
        assert split.report.train_only == [0, 99]
        assert 99 in split.train

    def test_records_split_parameters(self, dataset_root):
        split = load_dataset(dataset_root, (2, 1, 1), seed=5)
        assert split.seed == 5
        assert split.fractions == (2.0, 1.0, 1.0)

    def test_unreadable_image_reports_path(self, tmp_path):
        write_synthetic_dataset(tmp_path, identities=2, cameras=2, views_per_camera=1, seed=0)
        broken = tmp_path / "0001" / "c0_00.ppm"
        broken.write_bytes(b"P6\n4 4\n255\n")
        split = load_dataset(tmp_path, (1.0, 0.0, 0.0), seed=0)
        record = next(r for r in split.records("train") if r.path == broken)
        with pytest.raises(DatasetError) as info:
            split.load(record)
        assert info.value.path == str(broken)

    def test_missing_root(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "absent")

    def test_resizes_on_load(self, split, config):
        record = split.records("train")[0]
        assert split.load(record).shape == (3, config.input_height, config.input_width)

    def test_summary(self, split):
        table = split.summary()
        assert set(table["part"]) <= {"train", "val", "test"}
        assert table["images"].sum() == 48

    def test_single_shot_uses_other_camera(self, split):
        queries, gallery = build_single_shot(split.test, seed=0)
        assert [q.identity for q in queries] == [g.identity for g in gallery]
        assert all(q.camera != g.camera for q, g in zip(queries, gallery))


class TestPairs:
    def test_batches_are_balanced(self, split):
        batches = list(make_pairs(split, epoch_seed=0, batch_size=6))
        assert batches
        for batch in batches:
            assert len(batch) == 3 * batch.positives
            np.testing.assert_array_equal(batch.labels, batch.ids1 == batch.ids2)
        positives = sum(b.positives for b in batches)
        assert positives == 6 * len(split.train)

    def test_batch_size_must_divide_by_three(self, split):
        with pytest.raises(ContractError):
            next(make_pairs(split, epoch_seed=0, batch_size=8))

    def test_epoch_reproducible(self, split):
        a = next(make_pairs(split, epoch_seed=4, batch_size=6))
        b = next(make_pairs(split, epoch_seed=4, batch_size=6))
        np.testing.assert_array_equal(a.first, b.first)
        np.testing.assert_array_equal(a.ids2, b.ids2)

    def test_prefetch_preserves_order(self, split):
        direct = [b.ids1.tolist() for b in make_pairs(split, 2, 6, use_augment=False)]
        threaded = [b.ids1.tolist() for b in prefetch(make_pairs(split, 2, 6, use_augment=False), depth=2)]
        assert direct == threaded

    def test_prefetch_stops_worker_on_close(self, split):
        stream = prefetch(make_pairs(split, 2, 6, use_augment=False), depth=1)
        next(stream)
        stream.close()
        assert not any(t.name == "pair-prefetch" and t.is_alive() for t in threading.enumerate())

    def test_prefetch_forwards_producer_errors(self, split):
        def failing():
            yield from itertools.islice(make_pairs(split, 2, 6, use_augment=False), 1)
            raise DatasetError("повреждённый файл")

        with pytest.raises(DatasetError):
            list(prefetch(failing(), depth=2))

    def test_augment(self, rng):
        image = rng.uniform(size=(3, 20, 10))
        out = augment(image, 5)
        assert out.shape == image.shape
        np.testing.assert_array_equal(out, augment(image, 5))
        np.testing.assert_array_equal(flip(flip(image)), image)
