from datetime import date, datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcast.errors import (
    BadFractions,
    DatasetTooSmall,
    DuplicateDate,
    EmptyFile,
    EmptyIntersection,
    MissingColumn,
    NegativeCount,
    UnparsableValue,
)
from gridcast.ingest import (
    DATASET_HEADER,
    FEATURES,
    DailyRecord,
    DailyWeather,
    Dataset,
    HourlyWeatherRow,
    aggregate_daily,
    align,
    daily_features,
    dataset_to_csv,
    parse_interruption_csv,
    parse_weather_csv,
    read_dataset_csv,
    split_chronological,
    write_dataset_csv,
)

HEADER = "timestamp,temperature_f,precip_in,pressure_inhg,wind_mph,lightning\n"


def hourly_day(day, temp=70.0, wind=None, precip=0.0, pressure=30.0, strikes=0):
    wind = wind if wind is not None else [5.0] * 24
    base = datetime(day.year, day.month, day.day)
    return [HourlyWeatherRow(base + timedelta(hours=h), temp if np.isscalar(temp) else temp[h],
                             precip, pressure, wind[h], strikes) for h in range(24)]


def records(n, start=date(2015, 1, 1)):
    return Dataset(tuple(DailyRecord(start + timedelta(days=i), *([float(i)] * 11), n_sustained=i, m_momentary=1)
                         for i in range(n)))


# -- parsing --------------------------------------------------------------------

def test_weather_rows_come_back_sorted(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text(HEADER + "2015-01-01T02:00,71,0,30.0,5,0\n"
                          "2015-01-01T00:00,70,0.1,30.1,4,2\n"
                          "2015-01-01T01:00,72,0,29.9,6,0\n")
    rows = parse_weather_csv(p)
    assert [r.timestamp.hour for r in rows] == [0, 1, 2]
    assert rows[0].precipitation == 0.1 and rows[0].lightning_strikes == 2


def test_header_only_file_is_empty(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text(HEADER)
    with pytest.raises(EmptyFile):
        parse_weather_csv(p)


def test_bad_temperature_names_row_and_column(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text(HEADER + "2015-01-01T00:00,70,0,30,5,0\n2015-01-01T01:00,abc,0,30,5,0\n")
    with pytest.raises(UnparsableValue) as err:
        parse_weather_csv(p)
    assert err.value.row == 3 and err.value.column == "temperature_f"


@pytest.mark.parametrize("cells,column", [
    ("70,-0.1,30,5,0", "precip_in"),
    ("70,0,30,-1,0", "wind_mph"),
    ("70,0,30,5,1.5", "lightning"),
    ("70,0,nan,5,0", "pressure_inhg"),
])
def test_physical_range_violations_rejected(tmp_path, cells, column):
    p = tmp_path / "w.csv"
    p.write_text(HEADER + f"2015-01-01T00:00,{cells}\n")
    with pytest.raises(UnparsableValue) as err:
        parse_weather_csv(p)
    assert err.value.column == column


def test_missing_column(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("timestamp,temperature_f\n2015-01-01T00:00,70\n")
    with pytest.raises(MissingColumn) as err:
        parse_weather_csv(p)
    assert err.value.column == "precip_in"


def test_duplicate_timestamp(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text(HEADER + "2015-01-01T00:00,70,0,30,5,0\n2015-01-01T00:00,71,0,30,5,0\n")
    with pytest.raises(DuplicateDate):
        parse_weather_csv(p)


def test_interruption_row_parses(tmp_path):
    p = tmp_path / "i.csv"
    p.write_text("date,n_sustained,m_momentary\n2015-01-01,12,3\n")
    assert parse_interruption_csv(p) == [(date(2015, 1, 1), 12, 3)]


def test_interruption_duplicate_and_negative(tmp_path):
    p = tmp_path / "i.csv"
    p.write_text("date,n_sustained,m_momentary\n2015-01-01,1,0\n2015-01-01,2,0\n")
    with pytest.raises(DuplicateDate):
        parse_interruption_csv(p)
    p.write_text("date,n_sustained,m_momentary\n2015-01-02,-1,0\n")
    with pytest.raises(NegativeCount):
        parse_interruption_csv(p)


# -- aggregation -------------------------------------------------------------------

def test_constant_warm_day():
    (day,), skipped = aggregate_daily(hourly_day(date(2015, 6, 1), temp=70.0))
    assert not skipped
    assert day.t_max == day.t_ave == day.t_min == 70.0
    assert day.hdd == 0.0 and day.cdd == 5.0


def test_base_temperature_day_has_no_degree_days():
    (day,), _ = aggregate_daily(hourly_day(date(2015, 6, 1), temp=65.0))
    assert day.hdd == 0.0 and day.cdd == 0.0


def test_wind_spike_rolling_mean():
    wind = [10.0] * 24
    wind[2] = 40.0
    (day,), _ = aggregate_daily(hourly_day(date(2015, 6, 1), wind=wind))
    assert day.w_pea == 40.0
    assert day.w_sus == 25.0
    assert day.w_ave == pytest.approx((23 * 10 + 40) / 24, rel=1e-15)


def test_sums_and_means():
    (day,), _ = aggregate_daily(hourly_day(date(2015, 6, 1), precip=0.25, pressure=29.5, strikes=3))
    assert day.p_rain == 6.0
    assert day.lightning_l == 72.0
    assert day.pressure_a == 29.5


def test_sparse_day_skipped_not_imputed():
    full = hourly_day(date(2015, 6, 1))
    sparse = hourly_day(date(2015, 6, 2))[:17]
    agg = aggregate_daily(full + sparse)
    assert [d.date for d in agg.days] == [date(2015, 6, 1)]
    assert agg.skipped == [date(2015, 6, 2)]


def test_eighteen_hours_is_enough():
    agg = aggregate_daily(hourly_day(date(2015, 6, 2))[:18])
    assert len(agg.days) == 1 and not agg.skipped


def test_sustained_wind_skips_gaps():
    # hours 5 and 7 present, hour 6 missing: no pair spans the gap
    wind = np.full((1, 24), 1.0)
    wind[0, 5], wind[0, 6], wind[0, 7] = 30.0, np.nan, 30.0
    feats = daily_features(np.full((1, 24), 70.0), np.zeros((1, 24)), np.full((1, 24), 30.0), wind, np.zeros((1, 24)))
    assert feats["w_sus"][0] == 15.5


hours = st.lists(st.floats(35, 100, allow_nan=False), min_size=24, max_size=24)
winds = st.lists(st.floats(0, 60, allow_nan=False), min_size=24, max_size=24)


@settings(max_examples=200, deadline=None)
@given(hours, winds, st.floats(50, 80))
def test_daily_invariants(temps, wind, base):
    feats = daily_features(np.array([temps]), np.zeros((1, 24)), np.full((1, 24), 30.0),
                           np.array([wind]), np.zeros((1, 24)), base_temp=base)
    assert feats["t_min"][0] <= feats["t_ave"][0] <= feats["t_max"][0]
    assert feats["w_ave"][0] <= feats["w_pea"][0]
    assert feats["hdd"][0] * feats["cdd"][0] == 0.0
    assert feats["hdd"][0] >= 0 and feats["cdd"][0] >= 0


# -- align and split ------------------------------------------------------------------

def _weather(day):
    return DailyWeather(day, *([1.0] * 11))


def test_align_intersection():
    d1, d2, d3 = date(2015, 1, 1), date(2015, 1, 2), date(2015, 1, 3)
    ds = align([_weather(d1), _weather(d2)], [(d2, 4, 1), (d3, 5, 2)])
    assert ds.dates == [d2]
    assert ds[0].n_sustained == 4
    assert "dropped 1 weather-only and 1 interruption-only" in ds.provenance


def test_align_disjoint():
    with pytest.raises(EmptyIntersection):
        align([_weather(date(2015, 1, 1))], [(date(2016, 1, 1), 1, 1)])


def test_align_identity_850():
    days = [date(2015, 1, 1) + timedelta(days=i) for i in range(850)]
    ds = align([_weather(d) for d in days], [(d, 1, 0) for d in days])
    assert len(ds) == 850


@pytest.mark.parametrize("n,sizes", [(100, (60, 15, 25)), (101, (60, 15, 26)), (851, (510, 127, 214))])
def test_split_sizes(n, sizes):
    s = split_chronological(records(n))
    assert (len(s.train), len(s.validate), len(s.test)) == sizes


def test_calendar_span_2015_to_april_2017_is_851_days():
    assert (date(2017, 4, 30) - date(2015, 1, 1)).days + 1 == 851


@given(st.integers(30, 400), st.floats(0, 1), st.floats(0, 1))
def test_split_partitions_in_order(n, a, b):
    lo, hi = sorted((a, b))
    ds = records(n)
    s = split_chronological(ds, (lo, hi - lo, 1 - hi))
    assert s.train.records + s.validate.records + s.test.records == ds.records


def test_split_guards():
    with pytest.raises(BadFractions):
        split_chronological(records(100), (0.5, 0.2, 0.2))
    with pytest.raises(DatasetTooSmall):
        split_chronological(records(29))


def test_dataset_rejects_unordered_dates():
    r = records(2).records
    with pytest.raises(DuplicateDate):
        Dataset((r[1], r[0]))


# -- CSV round trip -----------------------------------------------------------------

def test_dataset_csv_header(small_dataset):
    assert dataset_to_csv(small_dataset).splitlines()[0] == ",".join(DATASET_HEADER)


def test_dataset_csv_round_trip_bit_identical(tmp_path, small_dataset):
    p = tmp_path / "d.csv"
    write_dataset_csv(small_dataset, p)
    back = read_dataset_csv(p)
    assert back == small_dataset
    np.testing.assert_array_equal(back.features(), small_dataset.features())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=True), min_size=11, max_size=11),
       st.integers(0, 10**6), st.integers(0, 10**6))
def test_any_float_round_trips(tmp_path_factory, values, n, m):
    ds = Dataset((DailyRecord(date(2015, 3, 1), *values, n_sustained=n, m_momentary=m),))
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    write_dataset_csv(ds, p)
    assert read_dataset_csv(p) == ds


def test_feature_matrix_columns_follow_feature_order(small_dataset):
    X = small_dataset.features()
    for j, name in enumerate(FEATURES):
        np.testing.assert_array_equal(X[:, j], small_dataset.column(name))
