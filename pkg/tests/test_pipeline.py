import json
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import make_rgb
from reidaug.buffer import ImageBuffer
from reidaug.codecs import decode_image, encode_image
from reidaug.defense import DefenseConfig
from reidaug.imagecore import gray_to_rgb, to_grayscale
from reidaug.pipeline import (
    ManifestError,
    TransformRecord,
    compute_stats,
    derive_stream,
    manifest_header,
    parse_reid_name,
    process_batch,
    read_manifest,
    replay_record,
    stats_from_records,
    walk_dataset,
    write_manifest,
)
from reidaug.transforms import AugmentConfig, lgpr


class TestDeriveStream:
    def test_same_key_same_draws(self):
        a = derive_stream(42, 17)
        b = derive_stream(42, 17)
        assert [a.random() for _ in range(1000)] == [b.random() for _ in range(1000)]

    def test_distinct_ordinals_diverge(self):
        a = derive_stream(42, 0)
        b = derive_stream(42, 1)
        seq_a = [a.random() for _ in range(64)]
        seq_b = [b.random() for _ in range(64)]
        assert any(x != y for x, y in zip(seq_a, seq_b))

    def test_first_draw_in_unit_interval(self):
        for seed in (0, 1, 2**63, 2**64 - 1):
            for ordinal in (0, 5, 99999):
                u = derive_stream(seed, ordinal).random()
                assert 0.0 <= u < 1.0

    def test_rejects_bad_keys(self):
        with pytest.raises(ValueError):
            derive_stream(-1, 0)
        with pytest.raises(ValueError):
            derive_stream(2**64, 0)
        with pytest.raises(ValueError):
            derive_stream(0, -1)


class TestWalkDataset:
    def test_empty_directory(self, tmp_path):
        assert walk_dataset(tmp_path) == []

    def test_lexicographic_ordinals(self, tmp_path):
        (tmp_path / "b.png").write_bytes(b"x")
        (tmp_path / "a.jpg").write_bytes(b"x")
        entries = walk_dataset(tmp_path)
        assert [(e.path, e.ordinal) for e in entries] == [("a.jpg", 0), ("b.png", 1)]

    def test_recursive_and_filtered(self, tmp_path):
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "c.jpeg").write_bytes(b"x")
        (tmp_path / "notes.txt").write_bytes(b"x")
        (tmp_path / "a.PNG").write_bytes(b"x")
        entries = walk_dataset(tmp_path)
        assert [e.path for e in entries] == ["a.PNG", "sub/c.jpeg"]

    def test_missing_root(self, tmp_path):
        with pytest.raises(NotADirectoryError):
            walk_dataset(tmp_path / "nope")

    def test_reid_name_parsing(self):
        assert parse_reid_name("0002_c1s1_000451_03.jpg") == ("0002", "c1")
        assert parse_reid_name("0750_c6s2_087342_01.png") == ("0750", "c6")
        assert parse_reid_name("random-photo.jpg") == (None, None)
        assert parse_reid_name("nocamera_x1.png") == (None, None)

    def test_entries_carry_ids(self, tmp_path):
        (tmp_path / "0002_c1s1_000451_03.jpg").write_bytes(b"x")
        entry = walk_dataset(tmp_path)[0]
        assert entry.person_id == "0002"
        assert entry.camera_id == "c1"


def _corpus(tmp_path: Path, count: int = 8, w: int = 32, h: int = 48) -> Path:
    root = tmp_path / "in"
    (root / "sub").mkdir(parents=True)
    rng = np.random.default_rng(1234)
    for i in range(count):
        img = ImageBuffer(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
        name = f"{i:04d}_c{i % 3 + 1}s1_{i:06d}_00.png"
        target = root / ("sub" if i % 3 == 0 else "") / name
        target.write_bytes(encode_image(img))
    return root


class TestManifest:
    def _records(self):
        return [
            TransformRecord(ordinal=0, path="a.png", output="a.png", mode="ggpr",
                            stream_key=0, outcome={"gate": 0.01, "fired": True}),
            TransformRecord(ordinal=1, path="b.png", output="b.png", mode="ggpr",
                            stream_key=1, outcome={"gate": 0.7, "fired": False}),
        ]

    def test_round_trip(self, tmp_path):
        header = manifest_header("ggpr", 7, AugmentConfig(), None, 2)
        path = write_manifest(tmp_path / "m.ndjson", header, self._records())
        parsed_header, parsed_records = read_manifest(path)
        assert parsed_header == header
        assert parsed_records == self._records()

    def test_empty_manifest_stats(self, tmp_path):
        header = manifest_header("ggpr", 0, AugmentConfig(), None, 0)
        path = write_manifest(tmp_path / "m.ndjson", header, [])
        stats = compute_stats(path)
        assert stats.total == 0 and stats.processed == 0

    def test_stats_match_direct_counts(self, tmp_path):
        header = manifest_header("ggpr", 7, AugmentConfig(), None, 2)
        path = write_manifest(tmp_path / "m.ndjson", header, self._records())
        stats = compute_stats(path)
        assert stats.category("ggpr_fired").count == 1
        assert stats.category("ggpr_fired").frequency == 0.5
        direct = stats_from_records(header, self._records())
        assert direct.to_dict() == stats.to_dict()

    def test_z_score_arithmetic(self):
        # 5,276 firings out of 100,000 at p=0.05: (5276-5000)/sqrt(100000*0.05*0.95)
        records = [
            TransformRecord(ordinal=i, path=f"{i}.png", output=f"{i}.png", mode="ggpr",
                            stream_key=i, outcome={"gate": 0.0, "fired": i < 5276})
            for i in range(100_000)
        ]
        header = manifest_header("ggpr", 0, AugmentConfig(), None, len(records))
        stats = stats_from_records(header, records)
        z = stats.category("ggpr_fired").z_score
        assert math.isclose(z, 4.004628900607264, rel_tol=0, abs_tol=1e-12)

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "m.ndjson"
        path.write_text('{"record": "run", "mode": "ggpr", "total": 0}\n{broken\n')
        with pytest.raises(ManifestError, match="line 2"):
            read_manifest(path)

    def test_unknown_record_type(self, tmp_path):
        path = tmp_path / "m.ndjson"
        path.write_text('{"record": "banana"}\n')
        with pytest.raises(ManifestError, match="unknown record type"):
            read_manifest(path)

    def test_duplicate_header_rejected(self, tmp_path):
        path = tmp_path / "m.ndjson"
        line = '{"record": "run", "mode": "ggpr", "total": 0}\n'
        path.write_text(line + line)
        with pytest.raises(ManifestError, match="duplicate"):
            read_manifest(path)


class TestProcessBatch:
    def test_worker_count_invariance(self, tmp_path):
        root = _corpus(tmp_path)
        results = {}
        for workers in (1, 2):
            out = tmp_path / f"out{workers}"
            result = process_batch(root, out, "combined", master_seed=99, workers=workers)
            tree = {
                p.relative_to(out).as_posix(): p.read_bytes()
                for p in sorted(out.rglob("*.png"))
            }
            results[workers] = (tree, result.manifest_path.read_text())
        assert results[1] == results[2]

    def test_certain_ggpr_gate(self, tmp_path):
        root = _corpus(tmp_path)
        out = tmp_path / "out"
        result = process_batch(
            root, out, "ggpr", augment=AugmentConfig(ggpr_prob=1.0), master_seed=0
        )
        assert result.stats.category("ggpr_fired").frequency == 1.0
        for record in result.records:
            img = decode_image((out / record.output).read_bytes())
            px = img.pixels
            assert (px[:, :, 0] == px[:, :, 1]).all() and (px[:, :, 1] == px[:, :, 2]).all()

    def test_decode_failure_skipped_not_fatal(self, tmp_path):
        root = _corpus(tmp_path, count=3)
        (root / "broken.png").write_bytes(b"this is not a png")
        out = tmp_path / "out"
        result = process_batch(root, out, "lgpr", master_seed=0)
        assert result.skipped == 1
        assert result.written == 3
        skipped = [r for r in result.records if r.skipped]
        assert len(skipped) == 1 and skipped[0].path == "broken.png"
        assert not (out / "broken.png").exists()

    def test_output_name_collision_resolved(self, tmp_path):
        root = tmp_path / "in"
        root.mkdir()
        rng = np.random.default_rng(5)
        img = ImageBuffer(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        (root / "a.png").write_bytes(encode_image(img))
        import io
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(img.pixels, "RGB").save(buf, format="JPEG")
        (root / "a.jpg").write_bytes(buf.getvalue())
        out = tmp_path / "out"
        result = process_batch(root, out, "resize_defense", master_seed=0)
        outputs = {r.output for r in result.records}
        assert outputs == {"a.jpg.png", "a.png.png"}

    def test_replay_reproduces_outputs(self, tmp_path):
        root = _corpus(tmp_path, count=6)
        for mode in ("combined", "mmd"):
            out = tmp_path / f"out_{mode}"
            result = process_batch(root, out, mode, master_seed=7)
            for record in result.records:
                source = decode_image((root / record.path).read_bytes())
                replayed = replay_record(source, record, defense=DefenseConfig())
                assert encode_image(replayed) == (out / record.output).read_bytes()

    def test_single_channel_input_promoted(self, tmp_path):
        root = tmp_path / "in"
        root.mkdir()
        plane = ImageBuffer(np.random.default_rng(3).integers(0, 256, (10, 10), dtype=np.uint8))
        (root / "gray.png").write_bytes(encode_image(plane))
        out = tmp_path / "out"
        result = process_batch(root, out, "mmd", master_seed=0)
        assert result.skipped == 0
        decoded = decode_image((out / "gray.png").read_bytes())
        assert decoded.channels == 3

    def test_manifest_stats_round_trip(self, tmp_path):
        root = _corpus(tmp_path)
        out = tmp_path / "out"
        result = process_batch(root, out, "mmd", master_seed=5)
        recomputed = compute_stats(result.manifest_path)
        assert recomputed.to_dict() == result.stats.to_dict()

    def test_rejects_bad_mode_and_workers(self, tmp_path):
        root = _corpus(tmp_path, count=1)
        with pytest.raises(ValueError, match="unknown mode"):
            process_batch(root, tmp_path / "o", "zap")
        with pytest.raises(ValueError, match="workers"):
            process_batch(root, tmp_path / "o", "ggpr", workers=0)


class TestCombinedNoOpLemma:
    def test_lgpr_fixed_point_on_grayscale_images(self, rng):
        for _ in range(5):
            gray = gray_to_rgb(to_grayscale(make_rgb(rng, 24, 24)))
            out, _rec = lgpr(gray, AugmentConfig(lgpr_prob=1.0), derive_stream(1, 2))
            assert out == gray


def test_combined_mode_two_stage_statistics():
    # 100,000 in-memory combined applications: the global gate fires at
    # p_g within 4 sigma, and the local gate fires at p_l within 4 sigma
    # among the entries the global gate left alone
    from reidaug.pipeline import apply_transform
    from reidaug.defense import DefenseConfig

    tiny = ImageBuffer.full(8, 16, 3, 60)
    cfg = AugmentConfig(max_attempts=1)
    defense = DefenseConfig()
    n = 100_000
    ggpr_fired = 0
    lgpr_fired = 0
    for i in range(n):
        _, outcome = apply_transform(tiny, "combined", cfg, defense, derive_stream(5150, i))
        if outcome["ggpr"]["fired"]:
            ggpr_fired += 1
            assert outcome["lgpr"] is None
        elif outcome["lgpr"]["fired"]:
            lgpr_fired += 1
    non_g = n - ggpr_fired
    assert 4724 <= ggpr_fired <= 5276  # 5000 +- 4*sqrt(n*0.05*0.95)
    sigma = math.sqrt(non_g * 0.4 * 0.6)
    assert abs(lgpr_fired - non_g * 0.4) <= 4 * sigma


def test_record_json_fields_stable(tmp_path):
    record = TransformRecord(ordinal=3, path="x.png", output="x.png", mode="lgpr",
                             stream_key=3,
                             outcome={"gate": 0.1, "fired": True, "rect": [1, 2, 3, 4],
                                      "attempts": 1, "draws": [0.5, 0.5, 1, 2]})
    header = manifest_header("lgpr", 9, AugmentConfig(), None, 1)
    path = write_manifest(tmp_path / "m.ndjson", header, [record])
    lines = path.read_text().splitlines()
    parsed = json.loads(lines[1])
    assert list(parsed.keys()) == [
        "record", "ordinal", "path", "output", "mode", "stream_key", "skipped", "outcome"
    ]
    assert TransformRecord.from_dict(parsed) == record
