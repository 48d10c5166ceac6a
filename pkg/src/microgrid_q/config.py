"""Run configuration: a JSON document mirroring :class:`RunConfig`.

Every field is optional in the file; missing keys take the defaults below
(campus bins, default microgrid parameters and learning hyperparameters).
Example::

    {
      "params": {"c_b": 50.0},
      "hyperparams": {"episodes": 3000, "adaptation_rate": 1e-05},
      "trace": {"synthetic": {"seed": 0, "hours": 720}},
      "validation_hours": 24,
      "seeds": [0, 1, 2]
    }
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .data import ExogenousTrace, discretize_trace, load_trace, scale_prices, synth_trace
from .env import MicrogridParams
from .learner import Hyperparams
from .spaces import CAMPUS_DEMAND_BINS, CAMPUS_PRICE_BINS, CAMPUS_PV_BINS, ActionSpace, StateSpace, build_spaces


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Bins:
    pv: tuple[float, ...] = CAMPUS_PV_BINS
    demand: tuple[float, ...] = CAMPUS_DEMAND_BINS
    price: tuple[float, ...] = CAMPUS_PRICE_BINS


@dataclass(frozen=True)
class TraceSource:
    """Either a CSV ``path`` or a synthetic trace (``synthetic_seed``, ``synthetic_hours``)."""

    path: str | None = None
    synthetic_seed: int = 0
    synthetic_hours: int = 720

    def to_json(self) -> dict:
        if self.path is not None:
            return {"path": self.path}
        return {"synthetic": {"seed": self.synthetic_seed, "hours": self.synthetic_hours}}

    @classmethod
    def from_json(cls, doc: dict) -> "TraceSource":
        unknown = set(doc) - {"path", "synthetic"}
        if unknown:
            raise ConfigError(f"unknown trace keys: {sorted(unknown)}")
        if doc.get("path") is not None:
            if "synthetic" in doc:
                raise ConfigError("trace: give either 'path' or 'synthetic', not both")
            return cls(path=str(doc["path"]))
        syn = doc.get("synthetic", {})
        unknown = set(syn) - {"seed", "hours"}
        if unknown:
            raise ConfigError(f"unknown synthetic trace keys: {sorted(unknown)}")
        return cls(synthetic_seed=int(syn.get("seed", 0)), synthetic_hours=int(syn.get("hours", 720)))


@dataclass(frozen=True)
class RunConfig:
    params: MicrogridParams = field(default_factory=MicrogridParams)
    bins: Bins = field(default_factory=Bins)
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    trace: TraceSource = field(default_factory=TraceSource)
    price_scale: float = 1.0
    validation_hours: int = 24
    seeds: tuple[int, ...] = tuple(range(10))
    degenerate_reward_zero: bool = False
    output_dir: str = "runs"

    def __post_init__(self):
        if not self.price_scale > 0:
            raise ConfigError("price_scale must be positive")
        if self.validation_hours < 1:
            raise ConfigError("validation_hours must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def with_hyperparams(self, **changes) -> "RunConfig":
        return replace(self, hyperparams=self.hyperparams.replace(**changes))

    # -- construction ---------------------------------------------------
    def spaces(self) -> tuple[StateSpace, ActionSpace]:
        return build_spaces(self.params, self.bins.pv, self.bins.demand, self.bins.price)

    def load_trace(self) -> ExogenousTrace:
        """Raw trace -> price scaling -> snapping to the configured bins."""
        src = self.trace
        if src.path is not None:
            raw = load_trace(src.path)
        else:
            raw = synth_trace(src.synthetic_seed, src.synthetic_hours, pv_bins=self.bins.pv,
                              demand_bins=self.bins.demand, price_bins=self.bins.price)
        if len(raw) <= self.validation_hours + 1:
            raise ConfigError(
                f"trace has {len(raw)} records; need more than validation_hours + 1 = {self.validation_hours + 1}"
            )
        if self.price_scale != 1.0:
            raw = scale_prices(raw, self.price_scale)
        return discretize_trace(raw, self.spaces()[0])

    # -- serialization --------------------------------------------------
    def to_json(self) -> dict:
        return {
            "params": asdict(self.params),
            "bins": {"pv": list(self.bins.pv), "demand": list(self.bins.demand), "price": list(self.bins.price)},
            "hyperparams": asdict(self.hyperparams),
            "trace": self.trace.to_json(),
            "price_scale": self.price_scale,
            "validation_hours": self.validation_hours,
            "seeds": list(self.seeds),
            "degenerate_reward_zero": self.degenerate_reward_zero,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        try:
            if "params" in doc:
                kw["params"] = MicrogridParams(**{k: float(v) for k, v in doc["params"].items()})
            if "bins" in doc:
                kw["bins"] = Bins(**{k: tuple(float(x) for x in v) for k, v in doc["bins"].items()})
            if "hyperparams" in doc:
                kw["hyperparams"] = Hyperparams(**doc["hyperparams"])
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        if "trace" in doc:
            kw["trace"] = TraceSource.from_json(doc["trace"])
        if "seeds" in doc:
            kw["seeds"] = tuple(int(s) for s in doc["seeds"])
        for key, conv in (("price_scale", float), ("validation_hours", int),
                          ("degenerate_reward_zero", bool), ("output_dir", str)):
            if key in doc:
                kw[key] = conv(doc[key])
        return cls(**kw)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    config = RunConfig.from_json(doc)
    # a relative trace path is read relative to the config file
    src = config.trace
    if src.path is not None and not Path(src.path).is_absolute():
        config = config.replace(trace=replace(src, path=str(Path(path).parent / src.path)))
    return config


def dump_config(config: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
