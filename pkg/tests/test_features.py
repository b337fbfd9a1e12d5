import io
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occuforge.features import (
    CoverageError,
    Dataset,
    DayTypeProfiles,
    build_dataset,
    build_sample,
    day_type_profile,
    make_inputs,
)
from occuforge.ingest import OccupancySeries

from conftest import MONDAY, random_series


def brute_profile(series):
    sums = {(w, s): [] for w in (0, 1) for s in range(1, 145)}
    for t in range(len(series)):
        sums[(int(series.is_weekend(t)), int(series.slot_of_day(t)))].append(int(series.states[t]))
    return ([sum(sums[(0, s)]) / len(sums[(0, s)]) for s in range(1, 145)],
            [sum(sums[(1, s)]) / len(sums[(1, s)]) for s in range(1, 145)])


class TestProfiles:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_enumeration(self, seed):
        s = random_series(days=9, seed=seed)
        prof = day_type_profile(s)
        wd, we = brute_profile(s)
        assert np.allclose(prof.weekday, wd, rtol=1e-12, atol=0)
        assert np.allclose(prof.weekend, we, rtol=1e-12, atol=0)
        assert np.all((prof.weekday >= 0) & (prof.weekday <= 1))

    def test_weekend_only_occupied(self):
        s = random_series(days=7)
        wk = s.is_weekend(np.arange(len(s)))
        s = OccupancySeries("c", MONDAY, wk.astype(np.int8))
        prof = day_type_profile(s)
        assert np.all(prof.weekend == 1.0) and np.all(prof.weekday == 0.0)

    def test_alternating_weekday(self):
        states = np.zeros(144 * 7, dtype=np.int8)
        states[:144] = np.arange(144) % 2 == 0  # Monday only
        states[144:144 * 5] = np.tile(states[:144], 4)
        prof = day_type_profile(OccupancySeries("c", MONDAY, states))
        assert prof.weekday[:4].tolist() == [1.0, 0.0, 1.0, 0.0]

    def test_weekdays_only_is_an_error(self):
        s = OccupancySeries("c", MONDAY, np.zeros(144 * 5, dtype=np.int8))
        with pytest.raises(CoverageError, match="insufficient day-type coverage"):
            day_type_profile(s)

    def test_csv_round_trip(self):
        prof = day_type_profile(random_series(days=7))
        buf = io.StringIO()
        prof.to_csv(buf)
        assert buf.getvalue().splitlines()[0] == "slot,weekday_rate,weekend_rate"
        back = DayTypeProfiles.from_csv(io.StringIO(buf.getvalue()))
        assert np.array_equal(back.weekday, prof.weekday) and np.array_equal(back.weekend, prof.weekend)


@pytest.fixture
def week():
    s = random_series(days=7, seed=8)
    return s, day_type_profile(s)


class TestSample:
    def test_first_monday_slot(self, week):
        s, prof = week
        smp = build_sample(s, prof, 12, m=12, k=1)  # Monday, slot 13
        assert smp.x2[0] == pytest.approx(13 / 144)
        assert smp.x2[1] == pytest.approx(1 / 6)
        assert smp.x2[2] == 0
        assert np.array_equal(smp.x2[3:], prof.weekday)

    def test_monday_midnight_features(self):
        # history from Sunday reaching into the first Monday slot
        s = random_series(days=8, seed=2, start=date(2018, 3, 4))
        prof = day_type_profile(s)
        smp = build_sample(s, prof, 144, m=12, k=1)
        assert (smp.x2[0], smp.x2[1], smp.x2[2]) == (pytest.approx(1 / 144), pytest.approx(1 / 6), 0)
        assert np.array_equal(smp.x2[3:], prof.weekday)

    def test_saturday_uses_weekend_profile(self, week):
        s, prof = week
        t = 144 * 5 + 30
        smp = build_sample(s, prof, t, m=12, k=2)
        assert smp.x2[2] == 1 and smp.x2[1] == 1.0
        assert np.array_equal(smp.x2[3:], prof.weekend)

    def test_sunday_is_zero(self, week):
        s, prof = week
        smp = build_sample(s, prof, 144 * 6 + 1)
        assert smp.x2[1] == 0 and smp.x2[2] == 1

    def test_bounds(self, week):
        s, prof = week
        with pytest.raises(IndexError, match="history"):
            build_sample(s, prof, 5, m=12)
        with pytest.raises(IndexError, match="horizon"):
            build_sample(s, prof, len(s) - 1, m=12, k=6)

    @given(st.integers(12, 144 * 7 - 6), st.integers(1, 6))
    @settings(max_examples=100, deadline=None)
    def test_copies_and_ranges(self, t, k):
        s = random_series(days=7, seed=8)
        prof = day_type_profile(s)
        smp = build_sample(s, prof, t, m=12, k=k)
        for j in range(12):
            assert smp.x1[j] == s.states[t - 1 - j]
        for j in range(k):
            assert smp.y[j] == s.states[t + j]
        assert smp.x2.shape == (147,)
        assert np.all((smp.x2 >= 0) & (smp.x2 <= 1))
        assert smp.x2[2] == float(s.is_weekend(t))


class TestDataset:
    def test_sample_count(self):
        s = random_series(days=1)
        prof = DayTypeProfiles(np.zeros(144), np.zeros(144))
        ds = build_dataset(s, prof, 12, 3, 0, 20)
        assert len(ds) == 6
        assert len(build_dataset(s, prof, 12, 3)) == 144 - 12 - 3 + 1

    def test_too_short(self):
        s = random_series(days=1)
        prof = DayTypeProfiles(np.zeros(144), np.zeros(144))
        assert len(build_dataset(s, prof, 12, 3, 0, 15)) == 1
        with pytest.raises(ValueError, match="too short"):
            build_dataset(s, prof, 12, 3, 0, 14)

    def test_vectorised_matches_per_sample(self, week):
        s, prof = week
        ds = build_dataset(s, prof, 12, 4)
        assert list(ds.origins) == sorted(ds.origins)
        for j in (0, 17, len(ds) - 1):
            smp = build_sample(s, prof, int(ds.origins[j]), 12, 4)
            assert np.array_equal(ds.x1[j], smp.x1)
            assert np.array_equal(ds.x2[j], smp.x2)
            assert np.array_equal(ds.y[j], smp.y)

    def test_from_samples_and_subset(self, week):
        s, prof = week
        ds = build_dataset(s, prof, 12, 2)
        back = Dataset.from_samples(ds.samples[:10])
        assert np.array_equal(back.x1, ds.x1[:10]) and np.array_equal(back.y, ds.y[:10])
        sub = ds.subset([3, 1])
        assert list(sub.origins) == [ds.origins[3], ds.origins[1]]

    def test_frames(self, week):
        s, prof = week
        ds = make_inputs(s, prof, [100, 200], 12, 1)
        fr = ds.frames(3)
        assert fr.shape == (2, 3, 148)
        # last frame is the step itself with the previous state appended
        assert np.array_equal(fr[0, -1, :147], ds.x2[0])
        assert fr[0, -1, 147] == s.states[99]
        assert fr[0, 0, 147] == s.states[97]
