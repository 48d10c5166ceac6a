import numpy as np
import pytest

from microgrid_q.data import (
    GapError,
    ParseError,
    discretize_trace,
    load_trace,
    save_trace,
    scale_prices,
    synth_trace,
)

HEADER = "timestamp,demand_kwh,pv_kwh,price_per_kwh\n"


def write(tmp_path, body, header=HEADER):
    p = tmp_path / "trace.csv"
    p.write_text(header + body, encoding="utf-8")
    return p


def test_load_three_rows(tmp_path):
    p = write(tmp_path, "2018-03-01T00:00:00,60,0,70\n2018-03-01T01:00:00,55.5,0,70\n2018-03-01T02:00:00,50,0,130\n")
    tr = load_trace(p)
    assert len(tr) == 3
    assert tr.demand.tolist() == [60, 55.5, 50]
    assert not tr.discretized
    assert tr.metadata["price_scale"] == 1.0


def test_gap_error(tmp_path):
    p = write(tmp_path, "2018-03-01T00:00:00,60,0,70\n2018-03-01T02:00:00,60,0,70\n")
    with pytest.raises(GapError, match="missing hour"):
        load_trace(p)


@pytest.mark.parametrize(
    "body, where",
    [
        ("2018-03-01T00:00:00,-5,0,70\n", "demand_kwh"),
        ("2018-03-01T00:00:00,60,abc,70\n", "pv_kwh"),
        ("yesterday,60,0,70\n", "timestamp"),
        ("2018-03-01T00:00:00,60,0\n", "expected 4"),
    ],
)
def test_parse_errors_name_row_and_column(tmp_path, body, where):
    with pytest.raises(ParseError, match=where) as info:
        load_trace(write(tmp_path, body))
    assert ":2:" in str(info.value) or "expected" in str(info.value)


def test_bad_header(tmp_path):
    with pytest.raises(ParseError):
        load_trace(write(tmp_path, "2018-03-01T00:00:00,60,0,70\n", header="time,d,p,c\n"))


def test_save_load_round_trip(tmp_path):
    tr = synth_trace(4, 30)
    save_trace(tr, tmp_path / "t.csv")
    back = load_trace(tmp_path / "t.csv")
    assert back.timestamps == tr.timestamps
    for col in ("demand", "pv", "price"):
        assert np.array_equal(getattr(back, col), getattr(tr, col))


def test_scale_prices():
    tr = synth_trace(0, 48)
    assert np.array_equal(scale_prices(tr, 1.0).price, tr.price)
    doubled = scale_prices(tr, 2.0)
    assert np.array_equal(doubled.price, 2.0 * tr.price)
    assert doubled.metadata["price_scale"] == 2.0
    with pytest.raises(ValueError):
        scale_prices(tr, 0.0)


def test_scale_then_discretize(spaces):
    sspace, _ = spaces
    tr = synth_trace(0, 48)
    # 70 * 2 = 140 and 130 * 2 = 260 both snap to the top bin; 70 * 1.9 = 133 snaps to 130
    assert set(discretize_trace(scale_prices(tr, 2.0), sspace).price) == {140.0}
    low = discretize_trace(scale_prices(tr, 1.9), sspace)
    assert set(low.price) <= {130.0, 140.0}
    assert low.discretized
    # scaling after snapping would leave values off the grid
    assert not set(scale_prices(discretize_trace(tr, sspace), 1.9).price) <= set(sspace.price_levels)


def test_synth_determinism():
    a, b = synth_trace(7, 240), synth_trace(7, 240)
    for col in ("demand", "pv", "price"):
        assert np.array_equal(getattr(a, col), getattr(b, col))
    assert not np.array_equal(a.demand, synth_trace(8, 240).demand)


def test_synth_bins_and_diurnal_shape():
    tr = synth_trace(0, 24 * 30)
    assert set(tr.pv) <= {0.0, 10.0, 20.0, 30.0}
    assert set(tr.demand) <= set(np.arange(40.0, 111.0, 10.0))
    assert set(tr.price) <= {70.0, 130.0, 140.0}
    hours = np.array([ts.hour for ts in tr.timestamps])
    assert np.all(tr.pv[hours == 0] == 0)
    assert np.all(tr.pv[(hours < 7) | (hours > 18)] == 0)
    assert tr.price[hours == 3].mean() < tr.price[hours == 13].mean()
    assert tr.demand[hours == 3].mean() < tr.demand[hours == 13].mean()


def test_split():
    tr = synth_trace(0, 100)
    train_t, val_t = tr.split(24)
    assert len(train_t) == 76 and len(val_t) == 24
    assert val_t.timestamps[0] - train_t.timestamps[-1] == tr.timestamps[1] - tr.timestamps[0]
    with pytest.raises(ValueError):
        tr.split(100)
