"""CSV ingestion, serialization, and the model-to-dataset synthesizer."""

import numpy as np
import pytest
from pytest import approx

from kshrink import (
    CanonicalModel,
    ParseError,
    canonicalize_ksample,
    canonicalize_regression,
    model_to_ksample,
    read_ksample_csv,
    read_regression_csv,
    write_ksample_csv,
)


def write_lines(tmp_path, name, lines):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestReadKsample:
    def test_with_header(self, tmp_path):
        path = write_lines(tmp_path, "d.csv", [
            "group,x1,x2",
            "a,1.0,2.0",
            "b,3.0,4.0",
            "a,5.0,6.0",
        ])
        groups, labels = read_ksample_csv(path)
        assert labels == ["a", "b"]
        assert groups[0] == approx(np.array([[1.0, 2.0], [5.0, 6.0]]))
        assert groups[1] == approx(np.array([[3.0, 4.0]]))

    def test_without_header(self, tmp_path):
        path = write_lines(tmp_path, "d.csv", [
            "1,0.5,0.5",
            "2,1.5,1.5",
        ])
        groups, labels = read_ksample_csv(path)
        assert labels == ["1", "2"]
        assert groups[0].shape == (1, 2)

    def test_groups_keep_first_appearance_order(self, tmp_path):
        path = write_lines(tmp_path, "d.csv", [
            "z,1.0",
            "a,2.0",
            "z,3.0",
        ])
        _, labels = read_ksample_csv(path)
        assert labels == ["z", "a"]

    def test_blank_lines_skipped(self, tmp_path):
        path = write_lines(tmp_path, "d.csv", [
            "group,x1",
            "",
            "a,1.0",
            "   ",
            "b,2.0",
        ])
        groups, labels = read_ksample_csv(path)
        assert labels == ["a", "b"]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError, match="empty file"):
            read_ksample_csv(str(path))

    def test_header_only(self, tmp_path):
        path = write_lines(tmp_path, "d.csv", ["group,x1,x2"])
        with pytest.raises(ParseError, match="header only"):
            read_ksample_csv(path)

    def test_ragged_row_reports_line(self, tmp_path):
        path = write_lines(tmp_path, "d.csv", [
            "group,x1,x2",
            "a,1.0,2.0",
            "a,1.0",
        ])
        with pytest.raises(ParseError, match=r"d\.csv:3"):
            read_ksample_csv(path)

    def test_bad_cell_reports_column(self, tmp_path):
        # The bad cell must sit below the first row; a non-numeric first
        # row is taken for a header.
        path = write_lines(tmp_path, "d.csv", [
            "a,1.0,2.0",
            "b,2.0,oops",
        ])
        with pytest.raises(ParseError, match=r"d\.csv:2: column 3"):
            read_ksample_csv(path)

    def test_empty_label(self, tmp_path):
        path = write_lines(tmp_path, "d.csv", [
            ",1.0,2.0",
            "b,2.0,3.0",
        ])
        with pytest.raises(ParseError, match="empty group label"):
            read_ksample_csv(path)

    def test_single_column(self, tmp_path):
        path = write_lines(tmp_path, "d.csv", ["justone"])
        with pytest.raises(ParseError, match="group column plus value"):
            read_ksample_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError, match="No such file"):
            read_ksample_csv(str(tmp_path / "nope.csv"))


class TestWriteKsample:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(13)
        groups = [rng.normal(size=(3, 4)), rng.normal(size=(2, 4)) * 1e-7]
        path = str(tmp_path / "out.csv")
        write_ksample_csv(path, groups)
        back, labels = read_ksample_csv(path)
        assert labels == ["1", "2"]
        for orig, got in zip(groups, back):
            assert np.array_equal(orig, got)

    def test_custom_labels(self, tmp_path):
        path = str(tmp_path / "out.csv")
        write_ksample_csv(path, [np.ones((1, 2)), np.zeros((1, 2))], ["ctl", "trt"])
        _, labels = read_ksample_csv(path)
        assert labels == ["ctl", "trt"]

    def test_vector_group_becomes_one_row(self, tmp_path):
        path = str(tmp_path / "out.csv")
        write_ksample_csv(path, [np.array([1.0, 2.0]), np.array([3.0, 4.0])])
        back, _ = read_ksample_csv(path)
        assert back[0].shape == (1, 2)


class TestReadRegression:
    def make_pair(self, tmp_path):
        a = write_lines(tmp_path, "north.csv", [
            "y,z1,z2",
            "1.0,1.0,0.0",
            "2.0,1.0,1.0",
            "2.5,1.0,2.0",
        ])
        b = write_lines(tmp_path, "south.csv", [
            "y,z1,z2",
            "0.5,1.0,0.5",
            "1.5,1.0,1.5",
            "3.0,1.0,2.5",
        ])
        return [a, b]

    def test_happy_path(self, tmp_path):
        designs, responses, labels = read_regression_csv(self.make_pair(tmp_path))
        assert labels == ["north", "south"]
        assert designs[0].shape == (3, 2)
        assert responses[1] == approx(np.array([0.5, 1.5, 3.0]))
        assert designs[1][2] == approx(np.array([1.0, 2.5]))

    def test_covariate_count_must_agree(self, tmp_path):
        a = write_lines(tmp_path, "a.csv", ["1.0,1.0", "2.0,2.0"])
        b = write_lines(tmp_path, "b.csv", ["1.0,1.0,3.0", "2.0,2.0,4.0"])
        with pytest.raises(ParseError, match="other files have"):
            read_regression_csv([a, b])

    def test_needs_two_files(self, tmp_path):
        a = write_lines(tmp_path, "a.csv", ["1.0,1.0", "2.0,2.0"])
        with pytest.raises(ParseError, match="at least 2"):
            read_regression_csv([a])

    def test_single_column_file(self, tmp_path):
        a = write_lines(tmp_path, "a.csv", ["1.0", "2.0"])
        with pytest.raises(ParseError, match="response column plus covariates"):
            read_regression_csv([a])

    def test_bad_response_cell(self, tmp_path):
        files = self.make_pair(tmp_path)
        extra = write_lines(tmp_path, "west.csv", [
            "y,z1,z2",
            "high,1.0,0.0",
        ])
        with pytest.raises(ParseError, match=r"west\.csv:2: column 1"):
            read_regression_csv(files + [extra])


class TestModelToKsample:
    def test_reduction_recovers_model(self):
        rng = np.random.default_rng(21)
        k, p = 3, 2
        v = np.empty((k, p, p))
        for i in range(k):
            m = rng.normal(size=(p, p))
            v[i] = m @ m.T + p * np.eye(p)
        model = CanonicalModel(x=rng.normal(size=(k, p)), v=v, s=7.3, n=9)
        groups, v0 = model_to_ksample(model)
        reduced = canonicalize_ksample(groups, v0)
        assert reduced.x == approx(model.x, rel=1e-12, abs=1e-12)
        assert reduced.v == approx(model.v, rel=1e-12)
        assert reduced.s == approx(model.s, rel=1e-10)
        # Two observations per group fix the degrees of freedom at k * p,
        # regardless of the source model's count.
        assert reduced.n == k * p

    def test_survives_a_csv_cycle(self, tmp_path):
        model = CanonicalModel(
            x=np.array([[0.0, 0.0], [1.0, 2.0]]),
            v=np.array([np.eye(2), 2.0 * np.eye(2)]),
            s=4.0,
            n=6,
        )
        groups, v0 = model_to_ksample(model)
        path = str(tmp_path / "synth.csv")
        write_ksample_csv(path, groups)
        back, _ = read_ksample_csv(path)
        for orig, got in zip(groups, back):
            assert np.array_equal(orig, got)
        reduced = canonicalize_ksample(back, v0)
        assert reduced.x == approx(model.x, abs=1e-12)
        assert reduced.s == approx(model.s, rel=1e-12)


class TestRegressionReductionFromFiles:
    def test_files_feed_the_reduction(self, tmp_path):
        a = write_lines(tmp_path, "g1.csv", [
            "y,z1",
            "1.0,1.0",
            "2.0,1.0",
            "3.0,1.0",
        ])
        b = write_lines(tmp_path, "g2.csv", [
            "y,z1",
            "4.0,1.0",
            "6.0,1.0",
        ])
        designs, responses, _ = read_regression_csv([a, b])
        model = canonicalize_regression(designs, responses)
        # Intercept-only fits: coefficient = group mean, scale = 1/m_i.
        assert model.x == approx(np.array([[2.0], [5.0]]))
        assert model.v[0] == approx(np.array([[1.0 / 3.0]]))
        assert model.v[1] == approx(np.array([[0.5]]))
        assert model.s == approx(2.0 + 2.0)  # residual sums of squares
        assert model.n == 3  # (3 - 1) + (2 - 1)
