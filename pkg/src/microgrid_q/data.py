"""Hourly exogenous traces: CSV ingestion, price scaling, discretization and a
synthetic generator on the campus bins.

CSV schema (UTF-8, one row per hour)::

    timestamp,demand_kwh,pv_kwh,price_per_kwh
    2018-03-01T00:00:00,60,0,70
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

import numpy as np

from .env import Exogenous
from .spaces import CAMPUS_DEMAND_BINS, CAMPUS_PRICE_BINS, CAMPUS_PV_BINS, StateSpace, snap

CSV_COLUMNS = ("timestamp", "demand_kwh", "pv_kwh", "price_per_kwh")
DEFAULT_START = datetime(2018, 3, 1)


class ParseError(ValueError):
    pass


class GapError(ValueError):
    pass


@dataclass(frozen=True)
class ExogenousTrace:
    timestamps: tuple[datetime, ...]
    demand: np.ndarray
    pv: np.ndarray
    price: np.ndarray
    discretized: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.timestamps)
        if not (len(self.demand) == len(self.pv) == len(self.price) == n):
            raise ValueError("trace columns differ in length")
        if n > 1:
            dt = self.timestamps[1] - self.timestamps[0]
            for i in range(1, n):
                if self.timestamps[i] - self.timestamps[i - 1] != dt or dt <= timedelta(0):
                    raise GapError(f"irregular spacing between {self.timestamps[i - 1]} and {self.timestamps[i]}")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, idx) -> "ExogenousTrace":
        if isinstance(idx, slice):
            return replace(
                self,
                timestamps=self.timestamps[idx],
                demand=self.demand[idx],
                pv=self.pv[idx],
                price=self.price[idx],
            )
        return Exogenous(demand=float(self.demand[idx]), pv=float(self.pv[idx]), price=float(self.price[idx]))

    def records(self):
        for i in range(len(self)):
            yield self[i]

    def split(self, validation_hours: int) -> tuple["ExogenousTrace", "ExogenousTrace"]:
        """(training, validation) where validation is the final ``validation_hours`` records."""
        if not 0 < validation_hours < len(self):
            raise ValueError(f"validation_hours={validation_hours} outside (0, {len(self)})")
        cut = len(self) - validation_hours
        return self[:cut], self[cut:]


def load_trace(path) -> ExogenousTrace:
    stamps, demand, pv, price = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise ParseError(f"{path}: header must be {','.join(CSV_COLUMNS)}, got {header}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ParseError(f"{path}:{row_no}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            try:
                ts = datetime.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise ParseError(f"{path}:{row_no}: column timestamp: {exc}") from None
            vals = []
            for col, raw in zip(CSV_COLUMNS[1:], row[1:]):
                try:
                    v = float(raw)
                except ValueError:
                    raise ParseError(f"{path}:{row_no}: column {col}: not a number: {raw!r}") from None
                if not np.isfinite(v) or v < 0:
                    raise ParseError(f"{path}:{row_no}: column {col}: must be finite and >= 0, got {v}")
                vals.append(v)
            if stamps:
                gap = ts - stamps[-1]
                if gap > timedelta(hours=1):
                    raise GapError(f"{path}:{row_no}: missing hour(s) between {stamps[-1]} and {ts}")
                if gap != timedelta(hours=1):
                    raise ParseError(f"{path}:{row_no}: timestamp {ts} is not one hour after {stamps[-1]}")
            stamps.append(ts)
            demand.append(vals[0])
            pv.append(vals[1])
            price.append(vals[2])
    return ExogenousTrace(
        timestamps=tuple(stamps),
        demand=np.array(demand),
        pv=np.array(pv),
        price=np.array(price),
        metadata={"source": str(path), "price_scale": 1.0},
    )


def save_trace(trace: ExogenousTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for ts, d, p, c in zip(trace.timestamps, trace.demand, trace.pv, trace.price):
            w.writerow([ts.isoformat(), repr(float(d)), repr(float(p)), repr(float(c))])


def scale_prices(trace: ExogenousTrace, factor: float) -> ExogenousTrace:
    if not factor > 0:
        raise ValueError(f"price scale factor must be positive, got {factor}")
    meta = dict(trace.metadata)
    meta["price_scale"] = meta.get("price_scale", 1.0) * factor
    return replace(trace, price=trace.price * factor, metadata=meta)


def discretize_trace(trace: ExogenousTrace, spaces: StateSpace) -> ExogenousTrace:
    return replace(
        trace,
        demand=np.array([snap(v, spaces.demand_levels) for v in trace.demand]),
        pv=np.array([snap(v, spaces.pv_levels) for v in trace.pv]),
        price=np.array([snap(v, spaces.price_levels) for v in trace.price]),
        discretized=True,
    )


# Hour-of-day categorical weights over the campus bins. PV only in daylight,
# demand peaks in library opening hours, price is low overnight.
_PV_DAY = {
    7: (0.5, 0.5, 0.0, 0.0),
    8: (0.2, 0.6, 0.2, 0.0),
    9: (0.1, 0.4, 0.4, 0.1),
    10: (0.0, 0.2, 0.5, 0.3),
    11: (0.0, 0.1, 0.4, 0.5),
    12: (0.0, 0.1, 0.3, 0.6),
    13: (0.0, 0.1, 0.3, 0.6),
    14: (0.0, 0.1, 0.4, 0.5),
    15: (0.0, 0.2, 0.5, 0.3),
    16: (0.1, 0.4, 0.4, 0.1),
    17: (0.2, 0.6, 0.2, 0.0),
    18: (0.5, 0.5, 0.0, 0.0),
}
_DEMAND_NIGHT = (0.35, 0.35, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0)
_DEMAND_SHOULDER = (0.0, 0.1, 0.2, 0.3, 0.25, 0.15, 0.0, 0.0)
_DEMAND_PEAK = (0.0, 0.0, 0.0, 0.1, 0.2, 0.3, 0.25, 0.15)
_PRICE_NIGHT = (0.9, 0.1, 0.0)
_PRICE_SHOULDER = (0.2, 0.5, 0.3)
_PRICE_PEAK = (0.0, 0.4, 0.6)


def _hour_profile(hour: int):
    pv = _PV_DAY.get(hour, (1.0, 0.0, 0.0, 0.0))
    if hour < 7 or hour >= 23:
        return pv, _DEMAND_NIGHT, _PRICE_NIGHT
    if 10 <= hour < 18:
        return pv, _DEMAND_PEAK, _PRICE_PEAK
    return pv, _DEMAND_SHOULDER, _PRICE_SHOULDER


def synth_trace(
    seed: int,
    hours: int,
    start: datetime = DEFAULT_START,
    pv_bins=CAMPUS_PV_BINS,
    demand_bins=CAMPUS_DEMAND_BINS,
    price_bins=CAMPUS_PRICE_BINS,
) -> ExogenousTrace:
    """Independent per-hour draws from a fixed diurnal template over the bins.

    A structural stand-in for hourly campus data, not a fitted statistical
    model. The template is defined on the 4 PV, 8 demand and 3 price bins;
    custom bins must have the same counts.
    """
    if hours < 1:
        raise ValueError("hours must be >= 1")
    pv_bins, demand_bins, price_bins = (np.asarray(b, dtype=float) for b in (pv_bins, demand_bins, price_bins))
    if (len(pv_bins), len(demand_bins), len(price_bins)) != (4, 8, 3):
        raise ValueError("the synthetic template is defined for 4 PV, 8 demand and 3 price bins")
    rng = np.random.default_rng(seed)
    stamps = tuple(start + timedelta(hours=h) for h in range(hours))
    demand, pv, price = np.empty(hours), np.empty(hours), np.empty(hours)
    for i, ts in enumerate(stamps):
        w_pv, w_d, w_p = _hour_profile(ts.hour)
        pv[i] = pv_bins[rng.choice(4, p=w_pv)]
        demand[i] = demand_bins[rng.choice(8, p=w_d)]
        price[i] = price_bins[rng.choice(3, p=w_p)]
    return ExogenousTrace(
        timestamps=stamps,
        demand=demand,
        pv=pv,
        price=price,
        discretized=True,
        metadata={"source": f"synthetic(seed={seed})", "price_scale": 1.0},
    )
