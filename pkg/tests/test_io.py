import datetime as dt

import numpy as np
import pytest

from gfamm import io
from gfamm.errors import MalformedLine


def write(path, text):
    path.write_text(text)
    return path


class TestReadTable:
    def test_missing_file(self, tmp_path):
        with pytest.raises(MalformedLine, match="cannot read"):
            io.read_table(tmp_path / "nope.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(MalformedLine, match="header"):
            io.read_table(write(tmp_path / "e.csv", "\n\n"))

    def test_field_count_names_line(self, tmp_path):
        p = write(tmp_path / "a.csv", "region,x\nR1,1\nR2,2,3\n")
        with pytest.raises(MalformedLine) as err:
            io.read_table(p)
        assert err.value.lineno == 3 and err.value.path == str(p)

    def test_duplicate_header(self, tmp_path):
        with pytest.raises(MalformedLine, match="duplicate"):
            io.read_table(write(tmp_path / "a.csv", "region,x,x\n"))

    def test_tab_delimited(self, tmp_path):
        header, rows = io.read_table(write(tmp_path / "a.tsv", "region\tx\nR1\t1.5\n"))
        assert header == ["region", "x"] and rows == [(2, ["R1", "1.5"])]


class TestResponse:
    def test_long_format(self, tmp_path):
        p = write(tmp_path / "r.csv", "region,t,count\nB,1,4\nA,0,1\nB,0,3\nA,1,2\n")
        labels, t, dates, y = io.read_response(p)
        assert labels == ("B", "A") and dates is None
        np.testing.assert_array_equal(t, [0, 1])
        np.testing.assert_array_equal(y, [[3, 4], [1, 2]])

    def test_iso_dates(self, tmp_path):
        p = write(tmp_path / "r.csv", "region,t,count\nA,2020-03-05,1\nA,2020-03-04,2\n")
        _, t, dates, y = io.read_response(p)
        np.testing.assert_array_equal(t, [0, 1])
        assert dates[0] == dt.date(2020, 3, 4)
        np.testing.assert_array_equal(y, [[2, 1]])

    @pytest.mark.parametrize("row, field", [("A,1,x", "count"), ("A,1,-2", "count"), ("A,1,1.5", "count"),
                                            ("A,1,inf", "count")])
    def test_bad_count_names_line_and_field(self, tmp_path, row, field):
        p = write(tmp_path / "r.csv", f"region,t,count\nA,0,1\n{row}\n")
        with pytest.raises(MalformedLine, match=field) as err:
            io.read_response(p)
        assert err.value.lineno == 3
        assert str(p) in str(err.value)

    def test_duplicate_cell(self, tmp_path):
        with pytest.raises(MalformedLine, match="duplicate"):
            io.read_response(write(tmp_path / "r.csv", "region,t,count\nA,0,1\nA,0,2\n"))

    def test_missing_cell(self, tmp_path):
        with pytest.raises(MalformedLine, match="no count"):
            io.read_response(write(tmp_path / "r.csv", "region,t,count\nA,0,1\nA,1,1\nB,0,2\n"))

    def test_wrong_header(self, tmp_path):
        with pytest.raises(MalformedLine, match="column 3"):
            io.read_response(write(tmp_path / "r.csv", "region,t,cases\n"))

    def test_round_trip(self, tmp_path, rng):
        y = rng.poisson(5, (3, 4)).astype(float)
        io.write_response(tmp_path / "r.csv", ["a", "b", "c"], np.arange(4.0), y)
        labels, t, _, back = io.read_response(tmp_path / "r.csv")
        np.testing.assert_array_equal(back, y)


class TestCovariateTables:
    labels = ("A", "B")

    def test_scalars_in_label_order(self, tmp_path):
        p = write(tmp_path / "s.csv", "region,x,z\nB,2,20\nA,1,10\n")
        out = io.read_scalars(p, self.labels)
        np.testing.assert_array_equal(out["x"], [1, 2])

    def test_scalar_not_a_number(self, tmp_path):
        p = write(tmp_path / "s.csv", "region,x\nA,1\nB,oops\n")
        with pytest.raises(MalformedLine, match="'x'") as err:
            io.read_scalars(p, self.labels)
        assert err.value.lineno == 3

    @pytest.mark.parametrize("body, msg", [("A,1\nC,2\n", "unknown region"), ("A,1\nA,2\n", "duplicate"),
                                           ("A,1\n", "no row")])
    def test_region_errors(self, tmp_path, body, msg):
        with pytest.raises(MalformedLine, match=msg):
            io.read_scalars(write(tmp_path / "s.csv", "region,x\n" + body), self.labels)

    def test_series(self, tmp_path):
        p = write(tmp_path / "s.csv", "region,t,w\nA,0,1\nA,1,2\nB,0,3\nB,1,4\n")
        np.testing.assert_array_equal(io.read_series(p, self.labels, [0.0, 1.0])["w"], [[1, 2], [3, 4]])

    def test_series_missing_cell(self, tmp_path):
        p = write(tmp_path / "s.csv", "region,t,w\nA,0,1\nA,1,2\nB,0,3\n")
        with pytest.raises(MalformedLine, match="'w' missing"):
            io.read_series(p, self.labels, [0.0, 1.0])

    def test_series_off_grid(self, tmp_path):
        p = write(tmp_path / "s.csv", "region,t,w\nA,7,1\n")
        with pytest.raises(MalformedLine, match="response grid") as err:
            io.read_series(p, self.labels, [0.0, 1.0])
        assert err.value.lineno == 2

    def test_groups(self, tmp_path):
        p = write(tmp_path / "g.csv", "region,community\nB,north\nA,south\n")
        assert list(io.read_groups(p, self.labels)["community"]) == ["south", "north"]


class TestComposition:
    labels = ("A", "B")

    def test_reclosed_to_kappa(self, tmp_path):
        p = write(tmp_path / "c.csv", "region,p1,p2,p3\nA,20,30,50\nB,10,10,80.5\n")
        parts, X, kappa = io.read_composition(p, self.labels)
        assert parts == ("p1", "p2", "p3")
        np.testing.assert_allclose(X.sum(axis=1), kappa)

    def test_zero_part_names_field(self, tmp_path):
        p = write(tmp_path / "c.csv", "region,p1,p2\nA,0.5,0.5\nB,0,1\n")
        with pytest.raises(MalformedLine, match="'p1'.*zero-replace") as err:
            io.read_composition(p, self.labels)
        assert err.value.lineno == 3

    def test_zero_replace(self, tmp_path):
        p = write(tmp_path / "c.csv", "region,p1,p2\nA,0.5,0.5\nB,0,1\n")
        _, X, kappa = io.read_composition(p, self.labels, zero_replace=1e-3)
        assert np.all(X > 0)
        np.testing.assert_allclose(X.sum(axis=1), kappa)

    def test_inconsistent_row_sum(self, tmp_path):
        p = write(tmp_path / "c.csv", "region,p1,p2\nA,0.5,0.5\nB,0.6,0.6\n")
        with pytest.raises(MalformedLine, match="row sums"):
            io.read_composition(p, self.labels)

    def test_single_part(self, tmp_path):
        with pytest.raises(MalformedLine, match="two parts"):
            io.read_composition(write(tmp_path / "c.csv", "region,p1\nA,1\nB,1\n"), self.labels)


class TestDensity:
    def test_normalised_and_reordered(self, tmp_path):
        p = write(tmp_path / "d.csv", "s,B,A\n0,1,2\n1,1,2\n2,1,2\n")
        grid, F, cols = io.read_density(p, ("A", "B"))
        assert cols == ("A", "B")
        np.testing.assert_allclose(grid.integrate(F), 1)

    def test_zero_value_names_line(self, tmp_path):
        p = write(tmp_path / "d.csv", "s,A\n0,1\n1,0\n2,1\n")
        with pytest.raises(MalformedLine, match="'A'") as err:
            io.read_density(p)
        assert err.value.lineno == 3
        grid, F, _ = io.read_density(p, zero_replace=1e-3)
        assert np.all(F > 0)

    def test_grid_must_increase(self, tmp_path):
        with pytest.raises(MalformedLine, match="increasing"):
            io.read_density(write(tmp_path / "d.csv", "s,A\n0,1\n2,1\n1,1\n"))

    def test_missing_region_column(self, tmp_path):
        with pytest.raises(MalformedLine, match="'B'"):
            io.read_density(write(tmp_path / "d.csv", "s,A\n0,1\n1,1\n2,1\n"), ("A", "B"))

    def test_round_trip(self, tmp_path, rng):
        F = rng.uniform(0.5, 2, (3, 5))
        io.write_density(tmp_path / "d.csv", np.arange(5.0), ["a", "b", "c"], F)
        grid, X, cols = io.read_functional(tmp_path / "d.csv")
        np.testing.assert_array_equal(X, F)


class TestCoordinatesAndWeekdays:
    def test_coordinates(self, tmp_path):
        p = write(tmp_path / "c.csv", "label,x,y\nA,0,0\nB,1,2\n")
        labels, xy = io.read_coordinates(p)
        assert labels == ("A", "B")
        np.testing.assert_array_equal(xy, [[0, 0], [1, 2]])

    def test_duplicate_coordinates_label(self, tmp_path):
        with pytest.raises(MalformedLine, match="duplicate"):
            io.read_coordinates(write(tmp_path / "c.csv", "label,x,y\nA,0,0\nA,1,2\n"))

    def test_weekdays_sunday_reference(self):
        dates = [dt.date(2020, 3, 1) + dt.timedelta(days=k) for k in range(14)]  # starts on a Sunday
        ind = io.weekday_indicators(dates)
        assert list(ind) == [f"wd_{d}" for d in io.WEEKDAYS[:6]]
        total = sum(ind.values())
        np.testing.assert_array_equal(total[[0, 7]], 0)
        assert np.all(np.delete(total, [0, 7]) == 1)
        np.testing.assert_array_equal(np.flatnonzero(ind["wd_Monday"]), [1, 8])

    def test_weekdays_other_reference(self):
        dates = [dt.date(2020, 3, 1) + dt.timedelta(days=k) for k in range(7)]
        ind = io.weekday_indicators(dates, reference="Monday", prefix="d_")
        assert "d_Monday" not in ind and "d_Sunday" in ind

    def test_weekdays_bad_reference(self):
        with pytest.raises(ValueError):
            io.weekday_indicators([dt.date(2020, 1, 1)], reference="Funday")
