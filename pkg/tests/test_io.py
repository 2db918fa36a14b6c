import json

import numpy as np
import pytest

from hilbtrim import Grid, WeightedSample, gram_matrix
from hilbtrim.exceptions import DatasetParseError
from hilbtrim.io import (dump_channel_json, dump_matrix_csv, file_sha256, load_dataset, parse_channel_json,
                         parse_matrix_csv, read_manifest, save_dataset, write_manifest)


class TestMatrixCsv:
    def test_grid_header(self):
        s = parse_matrix_csv("0,0.5,1\n1,2,3\n4,5,6\n")
        assert s.n == 2 and s.p == 3
        np.testing.assert_array_equal(s.quad_weights, [0.25, 0.5, 0.25])
        assert s.channels[0].grid == Grid([0, 0.5, 1])

    def test_euclidean_with_ids(self):
        s = parse_matrix_csv("id,euclidean,b\na,1,2\nb,3,4\n")
        assert s.ids == ("a", "b")
        np.testing.assert_array_equal(s.quad_weights, [1, 1])
        np.testing.assert_array_equal(s.values, [[1, 2], [3, 4]])

    def test_blank_lines_are_skipped(self):
        s = parse_matrix_csv("euclidean\n\n1\n\n2\n")
        assert s.n == 2

    @pytest.mark.parametrize("text, line, fragment", [
        ("0,1\n1,2\n3\n", 3, "expected 2 values"),
        ("0,1\n1,x\n", 2, "non-numeric value"),
        ("0,0\n1,2\n", 1, "strictly increasing"),
        ("0,1\n1,nan\n", 2, "non-finite"),
        ("0,1\n", 1, "no observations"),
        ("", 1, "empty"),
    ])
    def test_errors_carry_line_numbers(self, text, line, fragment):
        with pytest.raises(DatasetParseError) as info:
            parse_matrix_csv(text, "data.csv")
        assert info.value.line == line
        assert fragment in str(info.value)
        assert str(info.value).startswith(f"data.csv:{line}: ")


class TestChannelJson:
    def doc(self):
        return {
            "format": "hilbtrim-channels", "version": 1, "ids": ["u", "v"],
            "channels": [
                {"name": "temp", "grid": [0, 0.5, 1], "values": [[1, 2, 3], [0, 0, 1]]},
                {"name": "flag", "grid": "euclidean", "values": [[1], [0]]},
            ],
        }

    def test_product_space(self):
        s = parse_channel_json(json.dumps(self.doc()))
        assert [c.name for c in s.channels] == ["temp", "flag"]
        assert s.ids == ("u", "v") and s.p == 4
        g = gram_matrix(s)
        # <x0, x0> = .25*1 + .5*4 + .25*9 + 1 = 5.5
        assert g[0, 0] == pytest.approx(5.5)

    @pytest.mark.parametrize("mutate, fragment", [
        (lambda d: d["channels"][0]["values"].__setitem__(1, [1, 2]), "ragged"),
        (lambda d: d["channels"][1]["values"].append([3]), "different row counts"),
        (lambda d: d.__setitem__("version", 2), "unsupported version"),
        (lambda d: d["channels"][0].__setitem__("grid", [0, 1]), "3 values per row"),
        (lambda d: d.__setitem__("ids", ["u"]), "ids"),
        (lambda d: d.__setitem__("channels", []), "channels"),
    ])
    def test_rejects(self, mutate, fragment):
        d = self.doc()
        mutate(d)
        with pytest.raises(DatasetParseError, match=fragment):
            parse_channel_json(json.dumps(d))

    def test_syntax_error_line(self):
        with pytest.raises(DatasetParseError) as info:
            parse_channel_json('{\n "channels": [\n oops]\n}', "d.json")
        assert info.value.line == 3


class TestRoundTrip:
    def test_csv_bit_exact(self, tmp_path, rng):
        s = WeightedSample.on_grid(rng.normal(size=(5, 7)) / 3, Grid(np.sort(rng.uniform(size=7))),
                                   ids=("a", "b", "c", "d", "e"))
        path = tmp_path / "s.csv"
        save_dataset(s, path)
        back = load_dataset(path)
        assert np.array_equal(back.values, s.values)
        assert np.array_equal(back.quad_weights, s.quad_weights)
        assert back.ids == s.ids

    def test_json_bit_exact(self, tmp_path, rng):
        a = WeightedSample.on_grid(rng.normal(size=(4, 5)), Grid.uniform(5), "a")
        b = WeightedSample.euclidean(rng.normal(size=(4, 2)) * 1e-7)
        s = WeightedSample.concat_channels([a, b], names=["a", "b"])
        path = tmp_path / "s.json"
        save_dataset(s, path)
        back = load_dataset(path)
        assert np.array_equal(back.values, s.values)
        assert [c.name for c in back.channels] == ["a", "b"]

    def test_euclidean_csv(self):
        s = WeightedSample.euclidean([[1.5, -2.0]])
        assert parse_matrix_csv(dump_matrix_csv(s)).values.tolist() == [[1.5, -2.0]]

    def test_unknown_extension(self, tmp_path):
        with pytest.raises(DatasetParseError):
            load_dataset(tmp_path / "data.parquet")


class TestManifest:
    def test_write_and_read(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("euclidean\n1\n")
        out = tmp_path / "o.csv"
        out.write_text("x\n")
        write_manifest(tmp_path / "m.json", "radii", {"alpha": [0.5]}, {"radii": out}, data, seed=None)
        doc = read_manifest(tmp_path / "m.json")
        assert doc["dataset"]["sha256"] == file_sha256(data)
        assert doc["outputs"]["radii"]["sha256"] == file_sha256(out)
        assert doc["config"] == {"alpha": [0.5]}

    def test_rejects_foreign_json(self, tmp_path):
        (tmp_path / "m.json").write_text("{}")
        with pytest.raises(DatasetParseError):
            read_manifest(tmp_path / "m.json")
