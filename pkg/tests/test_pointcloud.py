"""Tests for Semantic3D parsing, color stripping, and ID/OOD map output."""

import io

import numpy as np
import pytest

from pcood import (IdOodMask, LabeledCloud, ParseError, PointRecord,
                   StructuralError, ValidationError, parse_semantic3d,
                   strip_color, write_idood_map)


def _parse(points, labels=None, **kw):
    points_stream = io.BytesIO(points.encode())
    labels_stream = io.BytesIO(labels.encode()) if labels is not None else None
    return parse_semantic3d(points_stream, labels_stream, **kw)


def _random_cloud(rng, n, class_count=8):
    xyz = rng.normal(scale=50.0, size=(n, 3))
    intensity = rng.uniform(0, 2048, size=n)
    rgb = rng.integers(0, 256, size=(n, 3))
    labels = rng.integers(0, class_count + 1, size=n)
    return LabeledCloud(xyz, intensity, rgb, labels, class_count=class_count)


class TestParse:
    def test_single_line_with_label(self):
        cloud = _parse("1.0 2.0 3.0 100 255 0 0\n", "5\n")
        assert len(cloud) == 1
        p = cloud.point(0)
        assert (p.x, p.y, p.z) == (1.0, 2.0, 3.0)
        assert p.intensity == 100.0
        assert (p.r, p.g, p.b) == (255, 0, 0)
        assert cloud.labels[0] == 5

    def test_empty_stream(self):
        assert len(_parse("")) == 0

    def test_missing_labels_default_to_zero(self):
        cloud = _parse("0 0 0 0 1 2 3\n4 4 4 4 5 6 7\n")
        assert cloud.labels.tolist() == [0, 0]

    def test_blank_lines_and_tabs_tolerated(self):
        text = "1\t2\t3\t4\t5\t6\t7\n\n   \n-1 -2 -3 0 0 0 0\n\n"
        cloud = _parse(text, "3\n\n0\n")
        assert len(cloud) == 2
        assert cloud.labels.tolist() == [3, 0]

    def test_wrong_field_count_names_line(self):
        with pytest.raises(ParseError, match="line 2"):
            _parse("0 0 0 0 0 0 0\n1 2 3\n")

    def test_non_numeric_token_names_line(self):
        with pytest.raises(ParseError, match="line 1"):
            _parse("0 0 zero 0 0 0 0\n")

    def test_non_integer_color_rejected(self):
        with pytest.raises(ParseError, match="line 1"):
            _parse("0 0 0 0 12.5 0 0\n")

    def test_non_finite_coordinate_rejected(self):
        with pytest.raises(ParseError, match="line 1"):
            _parse("nan 0 0 0 0 0 0\n")
        with pytest.raises(ParseError, match="line 1"):
            _parse("0 0 0 inf 0 0 0\n")

    def test_color_out_of_range(self):
        with pytest.raises(ParseError, match="line 1"):
            _parse("0 0 0 0 256 0 0\n")
        with pytest.raises(ParseError, match="line 1"):
            _parse("0 0 0 0 0 -1 0\n")

    def test_label_count_mismatch(self):
        points = "0 0 0 0 0 0 0\n" * 3
        with pytest.raises(StructuralError):
            _parse(points, "1\n2\n")

    def test_bad_label_token(self):
        with pytest.raises(ParseError, match="labels line 1"):
            _parse("0 0 0 0 0 0 0\n", "x\n")
        with pytest.raises(ParseError, match="labels line 1"):
            _parse("0 0 0 0 0 0 0\n", "1 2\n")

    def test_label_outside_class_range(self):
        with pytest.raises(ValidationError):
            _parse("0 0 0 0 0 0 0\n", "9\n")
        with pytest.raises(ValidationError):
            _parse("0 0 0 0 0 0 0\n", "-1\n")

    def test_custom_class_count(self):
        cloud = _parse("0 0 0 0 0 0 0\n", "3\n", class_count=3)
        assert cloud.class_count == 3
        with pytest.raises(ValidationError):
            _parse("0 0 0 0 0 0 0\n", "4\n", class_count=3)

    def test_text_stream_also_accepted(self):
        cloud = parse_semantic3d(io.StringIO("1 2 3 4 5 6 7\n"))
        assert len(cloud) == 1


class TestTypes:
    def test_point_record_checks(self):
        PointRecord(0.0, 0.0, 0.0, 0.0, 0, 0, 0)
        with pytest.raises(ValidationError):
            PointRecord(float("nan"), 0, 0, 0, 0, 0, 0)
        with pytest.raises(ValidationError):
            PointRecord(0, 0, 0, float("inf"), 0, 0, 0)
        with pytest.raises(ValidationError):
            PointRecord(0, 0, 0, 0, 256, 0, 0)
        with pytest.raises(ValidationError):
            PointRecord(0, 0, 0, 0, 0, -1, 0)

    def test_cloud_shape_checks(self):
        xyz = np.zeros((3, 3))
        with pytest.raises(StructuralError):
            LabeledCloud(xyz, np.zeros(2), np.zeros((3, 3)), np.zeros(3))
        with pytest.raises(StructuralError):
            LabeledCloud(xyz, np.zeros(3), np.zeros((2, 3)), np.zeros(3))
        with pytest.raises(StructuralError):
            LabeledCloud(xyz, np.zeros(3), np.zeros((3, 3)), np.zeros(2))

    def test_cloud_value_checks(self):
        xyz = np.zeros((1, 3))
        with pytest.raises(ValidationError):
            LabeledCloud(np.full((1, 3), np.nan), np.zeros(1),
                         np.zeros((1, 3)), np.zeros(1))
        with pytest.raises(ValidationError):
            LabeledCloud(xyz, np.zeros(1), np.full((1, 3), 300), np.zeros(1))
        with pytest.raises(ValidationError):
            LabeledCloud(xyz, np.zeros(1), np.zeros((1, 3)), np.array([9]))

    def test_cloud_is_frozen(self):
        cloud = _random_cloud(np.random.default_rng(0), 4)
        with pytest.raises(ValueError):
            cloud.xyz[0, 0] = 1.0
        with pytest.raises(ValueError):
            cloud.labels[0] = 1

    def test_from_records_round_trip(self):
        records = [PointRecord(1.5, -2.5, 3.5, 10.0, 1, 2, 3),
                   PointRecord(0.0, 0.25, -0.125, 0.0, 255, 254, 253)]
        cloud = LabeledCloud.from_records(records, [1, 2])
        assert len(cloud) == 2
        assert cloud.point(1) == records[1]
        assert cloud.labels.tolist() == [1, 2]

    def test_mask_checks(self):
        mask = IdOodMask([0, 1, 1, 0])
        assert len(mask) == 4
        assert mask.n_ood == 2
        assert mask.n_id == 2
        with pytest.raises(ValidationError):
            IdOodMask([0, 2])
        with pytest.raises(StructuralError):
            IdOodMask([[0, 1]])


class TestStripColor:
    def test_zeroes_color_and_preserves_rest_bitwise(self):
        rng = np.random.default_rng(7)
        cloud = _random_cloud(rng, 32)
        stripped = strip_color(cloud)
        assert np.array_equal(stripped.xyz, cloud.xyz)
        assert np.array_equal(stripped.intensity, cloud.intensity)
        assert np.array_equal(stripped.labels, cloud.labels)
        assert not stripped.rgb.any()
        assert len(stripped) == len(cloud)

    def test_single_point_example(self):
        cloud = LabeledCloud.from_records(
            [PointRecord(1.0, 2.0, 3.0, 10.0, 200, 100, 50)])
        p = strip_color(cloud).point(0)
        assert (p.x, p.y, p.z, p.intensity) == (1.0, 2.0, 3.0, 10.0)
        assert (p.r, p.g, p.b) == (0, 0, 0)

    def test_idempotent(self):
        cloud = _random_cloud(np.random.default_rng(8), 16)
        once = strip_color(cloud)
        twice = strip_color(once)
        assert np.array_equal(once.xyz, twice.xyz)
        assert np.array_equal(once.intensity, twice.intensity)
        assert np.array_equal(once.rgb, twice.rgb)
        assert np.array_equal(once.labels, twice.labels)

    def test_empty_cloud(self):
        empty = LabeledCloud(np.zeros((0, 3)), np.zeros(0),
                             np.zeros((0, 3)), np.zeros(0))
        assert len(strip_color(empty)) == 0


class TestIdOodMap:
    def test_color_convention(self):
        cloud = _parse("1 2 3 4 5 6 7\n8 9 10 11 12 13 14\n")
        sink = io.BytesIO()
        write_idood_map(cloud, IdOodMask([0, 1]), sink)
        lines = sink.getvalue().decode().splitlines()
        assert len(lines) == 2
        assert lines[0].endswith("0 255 0")
        assert lines[1].endswith("255 0 0")
        assert lines[0].startswith("1.000000 2.000000 3.000000")

    def test_length_mismatch(self):
        cloud = _parse("1 2 3 4 5 6 7\n")
        with pytest.raises(StructuralError):
            write_idood_map(cloud, IdOodMask([0, 1]), io.BytesIO())

    def test_green_count_matches_mask(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            n = int(rng.integers(1, 40))
            cloud = _random_cloud(rng, n)
            mask = IdOodMask(rng.integers(0, 2, size=n))
            sink = io.BytesIO()
            write_idood_map(cloud, mask, sink)
            lines = sink.getvalue().decode().splitlines()
            greens = sum(1 for line in lines if line.endswith("0 255 0"))
            assert len(lines) == n
            assert greens == mask.n_id

    def test_coordinates_round_trip_to_printed_precision(self):
        rng = np.random.default_rng(12)
        cloud = _random_cloud(rng, 64)
        sink = io.BytesIO()
        write_idood_map(cloud, IdOodMask(np.zeros(64, dtype=int)), sink)
        parsed = np.array([[float(f) for f in line.split()[:3]]
                           for line in sink.getvalue().decode().splitlines()])
        # 6 printed decimals bound the absolute error by 5e-7.
        np.testing.assert_allclose(parsed, cloud.xyz, rtol=0, atol=5.1e-7)

    def test_empty_cloud_writes_nothing(self):
        empty = LabeledCloud(np.zeros((0, 3)), np.zeros(0),
                             np.zeros((0, 3)), np.zeros(0))
        sink = io.BytesIO()
        write_idood_map(empty, IdOodMask(np.zeros(0, dtype=int)), sink)
        assert sink.getvalue() == b""
